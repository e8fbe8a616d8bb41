//! A deterministic synthetic segmentation backend.
//!
//! The oracle knows the ground-truth mask and fabricates predictions whose
//! quality reacts to the input image the way a real promptable model's
//! would: box prompts gate a blurred copy of the truth, and an estimate of
//! how degraded the image looks injects proportional noise. This gives the
//! full pipeline (prompt jitter, fusion, uncertainty, metrics) realistic
//! structure to chew on without any model weights.
//!
//! For a box prompt `b` the prediction is
//!
//! `p = clamp(blur(gt, sigma_b) * window(b) + kappa * q * eta, 0, 1)`
//!
//! where `window(b)` is the box dilated by 5% of its side per axis (hard
//! 0/1), `q` is the degradation level of the input (mean absolute
//! high-frequency residual of the gray image), and `eta` is per-pixel
//! uniform noise on `[-0.5, 0.5)` seeded by the oracle seed and the box
//! coordinates, so every distinct prompt sees an independent error field.
//!
//! Unprompted prediction returns four candidates: the ground-truth map
//! blurred at `everything_blur_scale * sigma_b` behind a full-image window,
//! modeling the coarser output a model produces with no localization hint,
//! followed by three low-overlap distractor blobs.

use rand::Rng;

use crate::degradation::{gaussian_blur, gaussian_blur_image};
use crate::fusion::binarize;
use crate::imaging::{BinaryMask, Image, ProbabilityMap, Raster};
use crate::metrics::dice;
use crate::prompts::{gt_bounding_box, BoxPrompt};
use crate::rng::{derive_seed, seeded_rng};

use super::{BackendInput, SegmenterBackend, SegmenterError};

/// Stream tag for per-prompt noise fields.
const TAG_PROMPT_NOISE: u64 = 0x4f52_4143;
/// Stream tag for distractor blobs.
const TAG_DISTRACTOR: u64 = 0x424c_4f42;

/// Number of distractor candidates returned by unprompted prediction.
const DISTRACTORS: usize = 3;

/// Maximum Dice overlap a distractor may have with the ground truth.
const DISTRACTOR_MAX_DICE: f64 = 0.3;

/// Attempts at sampling a distractor before the deterministic fallback.
const DISTRACTOR_ATTEMPTS: usize = 16;

/// Oracle behavior knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleParams {
    /// Blur applied to the ground truth for prompted predictions, px.
    pub blur_sigma: f32,
    /// Gain between estimated image degradation and the injected noise.
    pub kappa: f32,
    /// Blur multiplier for the unprompted full-image candidate.
    pub everything_blur_scale: f32,
    pub seed: u64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            blur_sigma: 1.5,
            kappa: 4.0,
            everything_blur_scale: 2.0,
            seed: 0,
        }
    }
}

/// Mean absolute high-frequency residual of the gray image: the average of
/// `|gray - blur(gray, 1.0)|`. Clean smooth images score near zero; noise
/// and strong edges push it up, which is what the oracle keys off.
pub fn degradation_level(img: &Image) -> f64 {
    let gray = img.to_gray();
    let smoothed = gaussian_blur_image(&gray, 1.0);
    let n = gray.data().len() as f64;
    gray.data()
        .iter()
        .zip(smoothed.data())
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).abs())
        .sum::<f64>()
        / n
}

/// The synthetic backend. Holds the ground truth it fabricates predictions
/// from, with the blurred copies precomputed.
pub struct SyntheticOracle {
    params: OracleParams,
    gt: BinaryMask,
    sharp: Raster,
    coarse: Raster,
}

impl SyntheticOracle {
    pub fn new(gt: BinaryMask, params: OracleParams) -> Self {
        let sharp = gaussian_blur(gt.raster(), params.blur_sigma);
        let coarse = gaussian_blur(gt.raster(), params.blur_sigma * params.everything_blur_scale);
        Self { params, gt, sharp, coarse }
    }

    pub fn params(&self) -> &OracleParams {
        &self.params
    }

    pub fn gt(&self) -> &BinaryMask {
        &self.gt
    }

    fn check_input(&self, input: &BackendInput) -> Result<(), SegmenterError> {
        if input.width() != self.gt.width() || input.height() != self.gt.height() {
            return Err(SegmenterError::DimensionMismatch(format!(
                "input is {}x{} but the oracle's ground truth is {}x{}",
                input.width(),
                input.height(),
                self.gt.width(),
                self.gt.height()
            )));
        }
        Ok(())
    }

    /// The dilated hard window for a prompt: each side grows by
    /// `round(0.05 * side)` pixels, clipped to the image.
    fn window_bounds(&self, prompt: BoxPrompt) -> (u32, u32, u32, u32) {
        let dx = (0.05 * f64::from(prompt.width())).round() as i64;
        let dy = (0.05 * f64::from(prompt.height())).round() as i64;
        let w = i64::from(self.gt.width());
        let h = i64::from(self.gt.height());
        let x0 = (i64::from(prompt.x0) - dx).clamp(0, w) as u32;
        let y0 = (i64::from(prompt.y0) - dy).clamp(0, h) as u32;
        let x1 = (i64::from(prompt.x1) + dx).clamp(0, w) as u32;
        let y1 = (i64::from(prompt.y1) + dy).clamp(0, h) as u32;
        (x0, y0, x1, y1)
    }

    fn render(
        &self,
        base: &Raster,
        window: (u32, u32, u32, u32),
        noise_amp: f64,
        noise_seed: u64,
    ) -> ProbabilityMap {
        let (wx0, wy0, wx1, wy1) = window;
        let w = base.width();
        let mut rng = seeded_rng(noise_seed);
        let mut data = Vec::with_capacity(base.len());
        for (i, &b) in base.data().iter().enumerate() {
            let x = i as u32 % w;
            let y = i as u32 / w;
            let inside = x >= wx0 && x < wx1 && y >= wy0 && y < wy1;
            let gated = if inside { f64::from(b) } else { 0.0 };
            let eta: f64 = rng.random_range(-0.5..0.5);
            let p = gated + noise_amp * eta;
            data.push((p as f32).clamp(0.0, 1.0));
        }
        ProbabilityMap::from_values(base.width(), base.height(), data)
            .expect("clamped oracle output is a valid probability map")
    }

    fn distractor(&self, k: usize) -> ProbabilityMap {
        let (w, h) = (self.gt.width(), self.gt.height());
        let mut rng = seeded_rng(derive_seed(self.params.seed, &[TAG_DISTRACTOR, k as u64]));
        let min_dim = f64::from(w.min(h));
        for _attempt in 0..DISTRACTOR_ATTEMPTS {
            let cx = rng.random_range(0.0..f64::from(w));
            let cy = rng.random_range(0.0..f64::from(h));
            let ax = rng.random_range(0.05..0.2) * min_dim;
            let ay = rng.random_range(0.05..0.2) * min_dim;
            let blob = self.ellipse_map(cx, cy, ax, ay);
            let overlap = dice(&binarize(&blob, 0.5), &self.gt).expect("shapes match");
            if overlap < DISTRACTOR_MAX_DICE {
                return blob;
            }
        }
        // Deterministic fallback: a small blob in the corner farthest from
        // the object (image center when the truth is empty).
        let (tx, ty) = match gt_bounding_box(&self.gt) {
            Ok(b) => (
                f64::from(b.x0 + b.x1) / 2.0,
                f64::from(b.y0 + b.y1) / 2.0,
            ),
            Err(_) => (f64::from(w) / 2.0, f64::from(h) / 2.0),
        };
        let corners = [
            (0.0, 0.0),
            (f64::from(w - 1), 0.0),
            (0.0, f64::from(h - 1)),
            (f64::from(w - 1), f64::from(h - 1)),
        ];
        let (cx, cy) = corners
            .into_iter()
            .max_by(|a, b| {
                let da = (a.0 - tx).powi(2) + (a.1 - ty).powi(2);
                let db = (b.0 - tx).powi(2) + (b.1 - ty).powi(2);
                da.partial_cmp(&db).expect("finite distances")
            })
            .expect("four corners");
        self.ellipse_map(cx, cy, 2.5, 2.5)
    }

    fn ellipse_map(&self, cx: f64, cy: f64, ax: f64, ay: f64) -> ProbabilityMap {
        let indicator = BinaryMask::from_fn(self.gt.width(), self.gt.height(), |x, y| {
            let nx = (f64::from(x) - cx) / ax;
            let ny = (f64::from(y) - cy) / ay;
            nx * nx + ny * ny <= 1.0
        });
        let soft = gaussian_blur(indicator.raster(), self.params.blur_sigma);
        let clamped: Vec<f32> = soft.data().iter().map(|&v| v.clamp(0.0, 1.0)).collect();
        ProbabilityMap::from_values(soft.width(), soft.height(), clamped)
            .expect("blurred indicator stays in range")
    }
}

impl SegmenterBackend for SyntheticOracle {
    fn predict(
        &mut self,
        input: &BackendInput,
        prompt: BoxPrompt,
    ) -> Result<ProbabilityMap, SegmenterError> {
        self.check_input(input)?;
        if !prompt.fits(input.width(), input.height()) {
            return Err(SegmenterError::DimensionMismatch(format!(
                "prompt {prompt:?} does not fit a {}x{} image",
                input.width(),
                input.height()
            )));
        }
        let q = degradation_level(input.image());
        let noise_amp = f64::from(self.params.kappa) * q;
        let seed = derive_seed(
            self.params.seed,
            &[
                TAG_PROMPT_NOISE,
                u64::from(prompt.x0),
                u64::from(prompt.y0),
                u64::from(prompt.x1),
                u64::from(prompt.y1),
            ],
        );
        Ok(self.render(&self.sharp, self.window_bounds(prompt), noise_amp, seed))
    }

    fn predict_everything(
        &mut self,
        input: &BackendInput,
    ) -> Result<Vec<ProbabilityMap>, SegmenterError> {
        self.check_input(input)?;
        let q = degradation_level(input.image());
        let noise_amp = f64::from(self.params.kappa) * q;
        let full = BoxPrompt::full_image(input.width(), input.height());
        let seed = derive_seed(
            self.params.seed,
            &[
                TAG_PROMPT_NOISE,
                u64::from(full.x0),
                u64::from(full.y0),
                u64::from(full.x1),
                u64::from(full.y1),
            ],
        );
        let window = (0, 0, input.width(), input.height());
        let mut out = vec![self.render(&self.coarse, window, noise_amp, seed)];
        for k in 0..DISTRACTORS {
            out.push(self.distractor(k));
        }
        Ok(out)
    }

    fn label(&self) -> &str {
        "synthetic-oracle"
    }
}
