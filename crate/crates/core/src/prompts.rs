//! Box prompts and jittered prompt sampling.
//!
//! A box prompt is a half-open integer rectangle `[x0, x1) x [y0, y1)` in
//! pixel coordinates. [`jitter_boxes`] simulates the variability of
//! human-drawn boxes: each of the four edges moves independently by a
//! uniform fraction of the box side, and degenerate results are resampled.

use thiserror::Error;

use crate::imaging::BinaryMask;
use crate::rng::{derive_seed, seeded_rng};
use rand::Rng;

/// Stream tag for prompt jitter.
const TAG_JITTER: u64 = 0x4a49_5454;

/// Attempts per box before falling back to the unjittered base.
const MAX_ATTEMPTS: usize = 16;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("mask has no foreground pixels, cannot derive a box prompt")]
    EmptyMask,
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

/// A half-open axis-aligned box `[x0, x1) x [y0, y1)` with positive area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoxPrompt {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BoxPrompt {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self, PromptError> {
        if x0 >= x1 || y0 >= y1 {
            return Err(PromptError::InvalidBox(format!(
                "box [{x0}, {x1}) x [{y0}, {y1}) has no area"
            )));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    /// The box covering a full `width x height` image.
    pub fn full_image(width: u32, height: u32) -> Self {
        Self { x0: 0, y0: 0, x1: width, y1: height }
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        u64::from(self.width()) * u64::from(self.height())
    }

    /// True when the box fits inside a `width x height` image.
    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.x1 <= width && self.y1 <= height
    }

    /// True when pixel `(x, y)` lies inside the box.
    pub fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Intersection-over-union of two boxes.
    pub fn iou(&self, other: &BoxPrompt) -> f64 {
        let ix0 = self.x0.max(other.x0);
        let iy0 = self.y0.max(other.y0);
        let ix1 = self.x1.min(other.x1);
        let iy1 = self.y1.min(other.y1);
        if ix0 >= ix1 || iy0 >= iy1 {
            return 0.0;
        }
        let inter = u64::from(ix1 - ix0) * u64::from(iy1 - iy0);
        let union = self.area() + other.area() - inter;
        inter as f64 / union as f64
    }
}

/// How many boxes to sample and how far edges may wander.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromptConfig {
    /// Number of jittered boxes.
    pub m: usize,
    /// Maximum edge displacement as a fraction of the box side.
    pub jitter_ratio: f64,
    pub seed: u64,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self { m: 8, jitter_ratio: 0.1, seed: 0 }
    }
}

/// Tight bounding box of the mask's foreground.
pub fn gt_bounding_box(mask: &BinaryMask) -> Result<BoxPrompt, PromptError> {
    let (mut x0, mut y0) = (u32::MAX, u32::MAX);
    let (mut x1, mut y1) = (0u32, 0u32);
    let w = mask.width();
    for (i, &v) in mask.data().iter().enumerate() {
        if v == 1.0 {
            let x = i as u32 % w;
            let y = i as u32 / w;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x + 1);
            y1 = y1.max(y + 1);
        }
    }
    if x0 == u32::MAX {
        return Err(PromptError::EmptyMask);
    }
    Ok(BoxPrompt { x0, y0, x1, y1 })
}

/// Samples `cfg.m` independently jittered copies of `base`.
///
/// Per box, each edge displaces by `trunc(u * side)` pixels, `u` drawn
/// uniformly from `[-jitter_ratio, jitter_ratio)` and `side` being the base
/// box width for x edges and height for y edges (sampled in the order x0,
/// y0, x1, y1). Edges clamp to the image bounds; a box that collapses to
/// zero area is resampled, and after 16 failed attempts the base box is
/// used verbatim. A zero jitter ratio therefore returns `m` exact copies.
///
/// Panics when `base` does not fit inside `width x height`.
pub fn jitter_boxes(base: BoxPrompt, cfg: &PromptConfig, width: u32, height: u32) -> Vec<BoxPrompt> {
    assert!(base.fits(width, height), "base box must fit inside the image");
    if cfg.jitter_ratio == 0.0 {
        return vec![base; cfg.m];
    }
    let (bw, bh) = (f64::from(base.width()), f64::from(base.height()));
    let j = cfg.jitter_ratio;
    let mut out = Vec::with_capacity(cfg.m);
    for i in 0..cfg.m {
        let mut rng = seeded_rng(derive_seed(cfg.seed, &[TAG_JITTER, i as u64]));
        let mut chosen = base;
        for _attempt in 0..MAX_ATTEMPTS {
            let dx0 = (rng.random_range(-j..j) * bw).trunc() as i64;
            let dy0 = (rng.random_range(-j..j) * bh).trunc() as i64;
            let dx1 = (rng.random_range(-j..j) * bw).trunc() as i64;
            let dy1 = (rng.random_range(-j..j) * bh).trunc() as i64;
            let x0 = (i64::from(base.x0) + dx0).clamp(0, i64::from(width)) as u32;
            let y0 = (i64::from(base.y0) + dy0).clamp(0, i64::from(height)) as u32;
            let x1 = (i64::from(base.x1) + dx1).clamp(0, i64::from(width)) as u32;
            let y1 = (i64::from(base.y1) + dy1).clamp(0, i64::from(height)) as u32;
            if x0 < x1 && y0 < y1 {
                chosen = BoxPrompt { x0, y0, x1, y1 };
                break;
            }
        }
        out.push(chosen);
    }
    out
}
