//! Morphology helpers on binary masks, all under the exact Euclidean
//! metric shared with the weighted F-measure.

use crate::imaging::{BinaryMask, Raster};
use crate::metrics::edt::distance_to_set;

fn distances(mask: &BinaryMask, to_foreground: bool) -> Vec<f64> {
    let sites: Vec<bool> = mask
        .data()
        .iter()
        .map(|&v| if to_foreground { v == 1.0 } else { v == 0.0 })
        .collect();
    let field = distance_to_set(&sites, mask.width() as usize, mask.height() as usize);
    field
        .d2
        .iter()
        .map(|&d| if d == u64::MAX { f64::INFINITY } else { (d as f64).sqrt() })
        .collect()
}

/// Per-pixel Euclidean distance to the nearest foreground pixel (0 on the
/// foreground itself). A mask with no foreground yields f32::MAX everywhere.
pub fn distance_to_foreground(mask: &BinaryMask) -> Raster {
    let data = distances(mask, true)
        .into_iter()
        .map(|d| if d.is_finite() { d as f32 } else { f32::MAX })
        .collect();
    Raster::new(mask.width(), mask.height(), data).expect("distance field preserves shape")
}

/// Erosion by a Euclidean disc: a foreground pixel survives when its
/// distance to the nearest background pixel exceeds `radius`.
pub fn erode(mask: &BinaryMask, radius: f64) -> BinaryMask {
    let d_bg = distances(mask, false);
    let w = mask.width();
    BinaryMask::from_fn(w, mask.height(), |x, y| {
        let i = (y * w + x) as usize;
        mask.data()[i] == 1.0 && d_bg[i] > radius
    })
}

/// The band of pixels within `radius` of the foreground/background contour:
/// foreground pixels near background and background pixels near foreground.
pub fn boundary_band(mask: &BinaryMask, radius: f64) -> BinaryMask {
    let d_fg = distances(mask, true);
    let d_bg = distances(mask, false);
    let w = mask.width();
    BinaryMask::from_fn(w, mask.height(), |x, y| {
        let i = (y * w + x) as usize;
        if mask.data()[i] == 1.0 {
            d_bg[i] <= radius
        } else {
            d_fg[i] <= radius
        }
    })
}
