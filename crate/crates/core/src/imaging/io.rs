//! File formats: PNG and binary PGM (P5) for images and masks, and a tiny
//! float raster container ("PMAP") for probability and uncertainty maps.
//!
//! PMAP layout: 4 ASCII magic bytes `PMAP`, width and height as `u32`
//! little-endian, then `width * height` `f32` little-endian values in
//! row-major order. Quantization to 8-bit on save rounds half up
//! (`floor(v * 255 + 0.5)`); loading maps byte `b` to `b / 255`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{BinaryMask, Image, ImagingError, Raster};

const PMAP_MAGIC: &[u8; 4] = b"PMAP";

fn read_file(path: &Path) -> Result<Vec<u8>, ImagingError> {
    if !path.exists() {
        return Err(ImagingError::MissingFile(path.display().to_string()));
    }
    Ok(fs::read(path)?)
}

/// Loads an image from a PNG or binary PGM file, dispatching on magic bytes.
/// Gray inputs come back with 1 channel, color inputs with 3; an alpha
/// channel, if present, is dropped.
pub fn load_image(path: &Path) -> Result<Image, ImagingError> {
    let bytes = read_file(path)?;
    if bytes.starts_with(b"\x89PNG") {
        decode_png(&bytes)
    } else if bytes.starts_with(b"P5") {
        decode_pgm(&bytes)
    } else {
        Err(ImagingError::UnsupportedFormat(format!(
            "{} is neither PNG nor binary PGM",
            path.display()
        )))
    }
}

fn decode_png(bytes: &[u8]) -> Result<Image, ImagingError> {
    let decoded = image::load_from_memory(bytes)
        .map_err(|e| ImagingError::CorruptHeader(format!("png decode failed: {e}")))?;
    use image::DynamicImage::*;
    let (w, h, channels, raw): (u32, u32, u8, Vec<u8>) = match decoded {
        ImageLuma8(img) => (img.width(), img.height(), 1, img.into_raw()),
        ImageLumaA8(img) => {
            let g = image::DynamicImage::ImageLumaA8(img).to_luma8();
            (g.width(), g.height(), 1, g.into_raw())
        }
        ImageRgb8(img) => (img.width(), img.height(), 3, img.into_raw()),
        ImageRgba8(img) => {
            let rgb = image::DynamicImage::ImageRgba8(img).to_rgb8();
            (rgb.width(), rgb.height(), 3, rgb.into_raw())
        }
        other => {
            return Err(ImagingError::UnsupportedFormat(format!(
                "png with {:?} pixels; only 8-bit gray or rgb is supported",
                other.color()
            )))
        }
    };
    let data = raw.iter().map(|&b| f32::from(b) / 255.0).collect();
    Image::new(w, h, channels, data)
}

fn decode_pgm(bytes: &[u8]) -> Result<Image, ImagingError> {
    // Header: "P5", then width, height, maxval as ASCII tokens separated by
    // whitespace, with '#' comments allowed; a single whitespace byte
    // precedes the pixel payload.
    let mut pos = 2usize;
    let mut tokens = Vec::with_capacity(3);
    while tokens.len() < 3 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(ImagingError::CorruptHeader(
                "pgm header ended before width/height/maxval".into(),
            ));
        }
        let token = std::str::from_utf8(&bytes[start..pos])
            .map_err(|_| ImagingError::CorruptHeader("pgm header is not ascii".into()))?;
        let value: u32 = token
            .parse()
            .map_err(|_| ImagingError::CorruptHeader(format!("bad pgm header token {token}")))?;
        tokens.push(value);
    }
    let (width, height, maxval) = (tokens[0], tokens[1], tokens[2]);
    if maxval == 0 || maxval > 255 {
        return Err(ImagingError::UnsupportedFormat(format!(
            "pgm maxval {maxval}; only 8-bit (maxval <= 255) is supported"
        )));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(ImagingError::CorruptHeader(
            "pgm header not terminated by whitespace".into(),
        ));
    }
    pos += 1;
    let expect = width as usize * height as usize;
    let payload = &bytes[pos..];
    if payload.len() < expect {
        return Err(ImagingError::CorruptHeader(format!(
            "pgm payload truncated: expected {expect} bytes, found {}",
            payload.len()
        )));
    }
    let scale = maxval as f32;
    let data = payload[..expect].iter().map(|&b| f32::from(b) / scale).collect();
    Image::new(width, height, 1, data)
}

fn quantize(v: f32) -> u8 {
    // Round half up; the input invariant [0, 1] keeps the product in range.
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Saves an image as PNG (gray for 1 channel, RGB for 3).
pub fn save_image(img: &Image, path: &Path) -> Result<(), ImagingError> {
    let raw: Vec<u8> = img.data().iter().map(|&v| quantize(v)).collect();
    let color = match img.channels() {
        1 => image::ExtendedColorType::L8,
        _ => image::ExtendedColorType::Rgb8,
    };
    image::save_buffer_with_format(
        path,
        &raw,
        img.width(),
        img.height(),
        color,
        image::ImageFormat::Png,
    )
    .map_err(|e| match e {
        image::ImageError::IoError(io) => ImagingError::IoFailure(io),
        other => ImagingError::UnsupportedFormat(format!("png encode failed: {other}")),
    })
}

/// Saves a single-channel image as binary PGM (P5, maxval 255).
pub fn save_pgm(img: &Image, path: &Path) -> Result<(), ImagingError> {
    if img.channels() != 1 {
        return Err(ImagingError::UnsupportedFormat(
            "pgm output requires a single-channel image".into(),
        ));
    }
    let mut out = Vec::with_capacity(img.data().len() + 32);
    write!(out, "P5\n{} {}\n255\n", img.width(), img.height())?;
    out.extend(img.data().iter().map(|&v| quantize(v)));
    fs::write(path, out)?;
    Ok(())
}

/// Loads a ground-truth mask: decodes the image, converts to gray, and
/// thresholds at 0.5 (values >= 0.5 become foreground). Both 0/255 PGM masks
/// and anti-aliased PNG masks collapse to hard binary this way.
pub fn load_mask(path: &Path) -> Result<BinaryMask, ImagingError> {
    let gray = load_image(path)?.to_gray();
    let data = gray
        .data()
        .iter()
        .map(|&v| if v >= 0.5 { 1.0 } else { 0.0 })
        .collect();
    BinaryMask::new(Raster::new(gray.width(), gray.height(), data)?)
}

/// Writes a raster in the PMAP container (exact f32 values, no quantization).
pub fn save_raster_f32(raster: &Raster, path: &Path) -> Result<(), ImagingError> {
    let mut out = Vec::with_capacity(12 + raster.len() * 4);
    out.extend_from_slice(PMAP_MAGIC);
    out.extend_from_slice(&raster.width().to_le_bytes());
    out.extend_from_slice(&raster.height().to_le_bytes());
    for v in raster.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a raster from the PMAP container, checking magic, header, and that
/// the payload holds exactly `width * height` floats.
pub fn load_raster_f32(path: &Path) -> Result<Raster, ImagingError> {
    let bytes = read_file(path)?;
    if bytes.len() < 12 {
        return Err(ImagingError::CorruptHeader(format!(
            "pmap file is {} bytes; the header alone needs 12",
            bytes.len()
        )));
    }
    if &bytes[0..4] != PMAP_MAGIC {
        return Err(ImagingError::BadMagic(format!(
            "expected PMAP, found {:?}",
            &bytes[0..4]
        )));
    }
    let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    let expect = width as u64 * height as u64;
    let have = (bytes.len() as u64 - 12) / 4;
    if bytes.len() as u64 != 12 + expect * 4 {
        return Err(ImagingError::DimensionMismatch(format!(
            "pmap header says {width}x{height} ({expect} floats) but payload holds {have}"
        )));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Raster::new(width, height, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use tempfile::tempdir;

    #[test]
    fn pgm_roundtrip_preserves_quantized_values() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = Image::new(2, 2, 1, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        save_pgm(&img, &path).unwrap();
        let back = load_image(&path).unwrap();
        assert_eq!(back.channels(), 1);
        // Quantization: 0 -> 0, 0.5 -> 128, 1 -> 255, 0.25 -> 64.
        assert_eq!(back.at(0, 0, 0), 0.0);
        assert!((back.at(1, 0, 0) - 128.0 / 255.0).abs() < 1e-7);
        assert!((back.at(0, 1, 0) - 1.0).abs() < 1e-7);
        assert!((back.at(1, 1, 0) - 64.0 / 255.0).abs() < 1e-7);
    }

    #[test]
    fn pgm_parser_reads_comments_and_values() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let bytes = b"P5\n# a comment\n2 1\n255\n\x00\xff";
        fs::write(&path, bytes).unwrap();
        let img = load_image(&path).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.at(0, 0, 0), 0.0);
        assert_eq!(img.at(1, 0, 0), 1.0);
    }

    #[test]
    fn truncated_pgm_is_a_corrupt_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        fs::write(&path, b"P5\n4 4\n255\n\x00\x01").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, ImagingError::CorruptHeader(_)), "{err:?}");
    }

    #[test]
    fn sixteen_bit_pgm_is_unsupported() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("deep.pgm");
        fs::write(&path, b"P5\n1 1\n65535\n\x00\x00").unwrap();
        let err = load_image(&path).unwrap_err();
        assert!(matches!(err, ImagingError::UnsupportedFormat(_)), "{err:?}");
    }

    #[test]
    fn missing_file_is_reported_as_such() {
        let err = load_image(Path::new("/nonexistent/x.png")).unwrap_err();
        assert!(matches!(err, ImagingError::MissingFile(_)));
    }

    #[test]
    fn png_roundtrip_gray_and_rgb() {
        let dir = tempdir().unwrap();
        let gray = Image::new(3, 2, 1, vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).unwrap();
        let gpath = dir.path().join("g.png");
        save_image(&gray, &gpath).unwrap();
        let gback = load_image(&gpath).unwrap();
        assert_eq!(gback.channels(), 1);
        for (a, b) in gray.data().iter().zip(gback.data()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-7);
        }

        let rgb = Image::new(2, 1, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.5]).unwrap();
        let cpath = dir.path().join("c.png");
        save_image(&rgb, &cpath).unwrap();
        let cback = load_image(&cpath).unwrap();
        assert_eq!(cback.channels(), 3);
        assert_eq!(cback.at(0, 0, 0), 1.0);
        assert_eq!(cback.at(0, 0, 1), 0.0);
    }

    #[test]
    fn pmap_roundtrip_is_bit_identical() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.pmap");
        let raster = Raster::new(3, 2, vec![0.0, 0.1, 0.5, 0.999, 1.0, 0.25]).unwrap();
        save_raster_f32(&raster, &path).unwrap();
        let back = load_raster_f32(&path).unwrap();
        assert_eq!(raster, back);
        for (a, b) in raster.data().iter().zip(back.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn pmap_bad_magic_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.pmap");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"XMAP");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        let err = load_raster_f32(&path).unwrap_err();
        assert!(matches!(err, ImagingError::BadMagic(_)), "{err:?}");
    }

    #[test]
    fn pmap_payload_length_must_match_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("short.pmap");
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"PMAP");
        bytes.extend_from_slice(&4u32.to_le_bytes());
        bytes.extend_from_slice(&4u32.to_le_bytes());
        for _ in 0..15 {
            bytes.extend_from_slice(&0.5f32.to_le_bytes());
        }
        fs::write(&path, bytes).unwrap();
        let err = load_raster_f32(&path).unwrap_err();
        assert!(matches!(err, ImagingError::DimensionMismatch(_)), "{err:?}");
    }

    #[test]
    fn mask_loading_thresholds_at_half() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        fs::write(&path, b"P5\n4 1\n255\n\x00\x7f\x80\xff").unwrap();
        let mask = load_mask(&path).unwrap();
        // 0x7f = 127/255 < 0.5, 0x80 = 128/255 >= 0.5.
        assert!(!mask.is_set(0, 0));
        assert!(!mask.is_set(1, 0));
        assert!(mask.is_set(2, 0));
        assert!(mask.is_set(3, 0));
    }

    proptest! {
        #[test]
        fn pmap_roundtrip_any_finite_raster(
            w in 1u32..8,
            h in 1u32..8,
            seedling in proptest::collection::vec(-1e6f32..1e6, 64),
        ) {
            let dir = tempdir().unwrap();
            let path = dir.path().join("p.pmap");
            let n = (w * h) as usize;
            let data: Vec<f32> = seedling.into_iter().take(n).chain(std::iter::repeat(0.0)).take(n).collect();
            let raster = Raster::new(w, h, data).unwrap();
            save_raster_f32(&raster, &path).unwrap();
            let back = load_raster_f32(&path).unwrap();
            prop_assert_eq!(raster, back);
        }

        #[test]
        fn png_roundtrip_is_identity_on_quantized_lattice(
            w in 1u32..6,
            h in 1u32..6,
            bytes in proptest::collection::vec(0u8..=255, 36),
        ) {
            let dir = tempdir().unwrap();
            let path = dir.path().join("q.png");
            let n = (w * h) as usize;
            let data: Vec<f32> = bytes.iter().take(n).map(|&b| f32::from(b) / 255.0)
                .chain(std::iter::repeat(0.0)).take(n).collect();
            let img = Image::new(w, h, 1, data).unwrap();
            save_image(&img, &path).unwrap();
            let back = load_image(&path).unwrap();
            prop_assert_eq!(img.data(), back.data());
        }
    }
}
