//! Raster data model shared by every pipeline stage.
//!
//! Four types with hard invariants, enforced at construction:
//!
//! * [`Image`]: interleaved 1- or 3-channel float image, values in `[0, 1]`.
//! * [`Raster`]: single-channel float plane, finite values of any range.
//! * [`ProbabilityMap`]: a [`Raster`] restricted to `[0, 1]`.
//! * [`BinaryMask`]: a [`Raster`] whose values are exactly 0.0 or 1.0.
//!
//! All buffers are row-major with the origin at the top-left pixel; an
//! `Image` interleaves channels per pixel. Index math is
//! `(y * width + x) * channels + c`.

mod io;

pub use io::{
    load_image, load_mask, load_raster_f32, save_image, save_pgm, save_raster_f32,
};

use thiserror::Error;

/// Errors raised by raster construction and file I/O.
#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("file not found: {0}")]
    MissingFile(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt header: {0}")]
    CorruptHeader(String),
    #[error("bad magic bytes: {0}")]
    BadMagic(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

/// A single-channel float plane. Values must be finite but may take any
/// range (distances, entropies, variances).
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl Raster {
    /// Builds a raster, checking the length and finiteness invariants.
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvariantViolation(format!(
                "raster dimensions must be positive, got {width}x{height}"
            )));
        }
        let expect = width as usize * height as usize;
        if data.len() != expect {
            return Err(ImagingError::DimensionMismatch(format!(
                "raster {width}x{height} needs {expect} values, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(ImagingError::InvariantViolation(format!(
                "raster contains non-finite value {v}"
            )));
        }
        Ok(Self { width, height, data })
    }

    /// A raster filled with one value.
    pub fn filled(width: u32, height: u32, value: f32) -> Self {
        Self::new(width, height, vec![value; width as usize * height as usize])
            .expect("constant raster is always valid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Number of pixels.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    /// Value at `(x, y)`. Panics when out of bounds.
    pub fn at(&self, x: u32, y: u32) -> f32 {
        assert!(x < self.width && y < self.height, "raster index out of bounds");
        self.data[y as usize * self.width as usize + x as usize]
    }

    /// True when both rasters have identical dimensions.
    pub fn same_shape(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// An interleaved float image with 1 or 3 channels, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<f32>,
}

impl Image {
    /// Builds an image, checking dimensions, channel count, and value range.
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<f32>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::InvariantViolation(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ImagingError::InvariantViolation(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        let expect = width as usize * height as usize * channels as usize;
        if data.len() != expect {
            return Err(ImagingError::DimensionMismatch(format!(
                "image {width}x{height}x{channels} needs {expect} values, got {}",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(ImagingError::InvariantViolation(format!(
                "image value {v} outside [0, 1]"
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Value of channel `c` at `(x, y)`. Panics when out of bounds.
    pub fn at(&self, x: u32, y: u32, c: u8) -> f32 {
        assert!(
            x < self.width && y < self.height && c < self.channels,
            "image index out of bounds"
        );
        let idx = (y as usize * self.width as usize + x as usize) * self.channels as usize
            + c as usize;
        self.data[idx]
    }

    /// Luminance conversion using BT.601 weights (0.299, 0.587, 0.114).
    /// A single-channel image is returned unchanged.
    pub fn to_gray(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let n = self.width as usize * self.height as usize;
        let mut out = Vec::with_capacity(n);
        for px in self.data.chunks_exact(3) {
            let g = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            out.push(g.clamp(0.0, 1.0));
        }
        Image::new(self.width, self.height, 1, out).expect("gray image preserves invariants")
    }

    /// The single gray plane of a 1-channel image, as a raster.
    ///
    /// Panics when called on a 3-channel image; convert with [`Image::to_gray`]
    /// first.
    pub fn to_raster(&self) -> Raster {
        assert_eq!(self.channels, 1, "to_raster requires a single-channel image");
        Raster::new(self.width, self.height, self.data.clone())
            .expect("image data is a valid raster")
    }
}

/// A per-pixel foreground probability map: a raster confined to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap(Raster);

impl ProbabilityMap {
    pub fn new(raster: Raster) -> Result<Self, ImagingError> {
        if let Some(v) = raster.data().iter().find(|v| **v < 0.0 || **v > 1.0) {
            return Err(ImagingError::InvariantViolation(format!(
                "probability {v} outside [0, 1]"
            )));
        }
        Ok(Self(raster))
    }

    pub fn from_values(width: u32, height: u32, data: Vec<f32>) -> Result<Self, ImagingError> {
        Self::new(Raster::new(width, height, data)?)
    }

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    pub fn height(&self) -> u32 {
        self.0.height()
    }

    pub fn data(&self) -> &[f32] {
        self.0.data()
    }

    pub fn at(&self, x: u32, y: u32) -> f32 {
        self.0.at(x, y)
    }
}

/// A hard segmentation mask: a raster whose values are exactly 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask(Raster);

impl BinaryMask {
    pub fn new(raster: Raster) -> Result<Self, ImagingError> {
        if let Some(v) = raster.data().iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(ImagingError::InvariantViolation(format!(
                "mask value {v} is neither 0 nor 1"
            )));
        }
        Ok(Self(raster))
    }

    /// Builds a mask from a boolean foreground predicate per pixel.
    pub fn from_fn(width: u32, height: u32, mut fg: impl FnMut(u32, u32) -> bool) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(if fg(x, y) { 1.0 } else { 0.0 });
            }
        }
        Self(Raster::new(width, height, data).expect("generated mask is a valid raster"))
    }

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    pub fn height(&self) -> u32 {
        self.0.height()
    }

    pub fn data(&self) -> &[f32] {
        self.0.data()
    }

    /// True when the pixel is foreground.
    pub fn is_set(&self, x: u32, y: u32) -> bool {
        self.0.at(x, y) == 1.0
    }

    /// Number of foreground pixels.
    pub fn foreground_count(&self) -> usize {
        self.0.data().iter().filter(|v| **v == 1.0).count()
    }
}
