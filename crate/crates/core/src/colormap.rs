//! Viridis rendering for uncertainty rasters.
//!
//! A 17-anchor approximation of the viridis colormap with linear
//! interpolation between anchors; close enough for visual inspection of
//! uncertainty maps while keeping the table small.

use crate::imaging::{Image, Raster};

/// RGB anchors sampled uniformly over [0, 1].
const VIRIDIS: [[u8; 3]; 17] = [
    [68, 1, 84],
    [72, 26, 108],
    [71, 47, 125],
    [65, 68, 135],
    [59, 82, 139],
    [52, 96, 141],
    [46, 110, 142],
    [41, 123, 142],
    [37, 136, 142],
    [33, 145, 140],
    [31, 158, 137],
    [39, 173, 129],
    [59, 187, 117],
    [94, 201, 98],
    [134, 213, 73],
    [180, 222, 44],
    [253, 231, 37],
];

/// Maps a normalized value in `[0, 1]` to an RGB triple.
pub fn viridis(t: f32) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (VIRIDIS.len() - 1) as f32;
    let lo = scaled.floor() as usize;
    let hi = (lo + 1).min(VIRIDIS.len() - 1);
    let frac = scaled - lo as f32;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let a = f32::from(VIRIDIS[lo][c]);
        let b = f32::from(VIRIDIS[hi][c]);
        out[c] = (a + (b - a) * frac).round() as u8;
    }
    out
}

/// Renders a raster to a color image, normalizing by the raster maximum.
/// A raster of all zeros maps entirely to the low end of the scale.
pub fn render_raster(raster: &Raster) -> Image {
    let max = raster.data().iter().copied().fold(0.0f32, f32::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    let mut data = Vec::with_capacity(raster.len() * 3);
    for &v in raster.data() {
        let rgb = viridis(v * scale);
        data.extend(rgb.iter().map(|&c| f32::from(c) / 255.0));
    }
    Image::new(raster.width(), raster.height(), 3, data).expect("colormap output is a valid image")
}
