//! Segmentation quality metrics: Dice, expected calibration error,
//! structure measure, and weighted F-measure.
//!
//! Dice scores a hard mask; the other three consume the soft probability
//! map directly. All four are f64 end to end. Degenerate inputs follow
//! fixed conventions documented on each function so batch runs never
//! produce NaN.

pub(crate) mod edt;
mod structure;
mod weighted_f;

pub use structure::s_measure;
pub use weighted_f::weighted_fmeasure;

use serde::Serialize;
use thiserror::Error;

use crate::fusion::binarize;
use crate::imaging::{BinaryMask, ProbabilityMap};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub(crate) fn check_shapes(
    pw: u32,
    ph: u32,
    gw: u32,
    gh: u32,
) -> Result<(), MetricError> {
    if pw != gw || ph != gh {
        return Err(MetricError::DimensionMismatch(format!(
            "prediction is {pw}x{ph} but ground truth is {gw}x{gh}"
        )));
    }
    Ok(())
}

/// All four metrics for one prediction, as written into run reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricReport {
    pub dice: f64,
    pub ece: f64,
    pub sm: f64,
    pub wfm: f64,
}

impl MetricReport {
    /// Scores a probability map against ground truth with the standard
    /// settings: Dice on the map binarized at 0.5, ECE with 10 bins,
    /// S-measure with alpha 0.5, weighted F-measure with beta^2 = 1.
    pub fn evaluate(prob: &ProbabilityMap, gt: &BinaryMask) -> Result<Self, MetricError> {
        let hard = binarize(prob, 0.5);
        Ok(Self {
            dice: dice(&hard, gt)?,
            ece: ece(prob, gt, 10)?,
            sm: s_measure(prob, gt, 0.5)?,
            wfm: weighted_fmeasure(prob, gt, 1.0)?,
        })
    }

    /// True when every metric is finite.
    pub fn is_finite(&self) -> bool {
        self.dice.is_finite() && self.ece.is_finite() && self.sm.is_finite() && self.wfm.is_finite()
    }
}

/// Dice coefficient `2|A n B| / (|A| + |B|)` between two hard masks.
/// Two empty masks agree perfectly and score 1.0.
pub fn dice(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64, MetricError> {
    check_shapes(pred.width(), pred.height(), gt.width(), gt.height())?;
    let mut inter = 0u64;
    let mut total = 0u64;
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let pf = p == 1.0;
        let gf = g == 1.0;
        inter += u64::from(pf && gf);
        total += u64::from(pf) + u64::from(gf);
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / total as f64)
}

/// Expected calibration error over the binary foreground decision.
///
/// Per pixel the predicted label is `p >= 0.5` and the confidence is
/// `max(p, 1 - p)`, which lives in `[0.5, 1]`. Confidences are pooled into
/// `n_bins` equal-width bins spanning `(0.5, 1.0]`, indexed by
/// `floor((c - 0.5) / width)` clamped to the last bin; a confidence of
/// exactly 0.5 lands in bin 0. The result is the bin-count-weighted mean of
/// `|accuracy - mean confidence|`.
pub fn ece(prob: &ProbabilityMap, gt: &BinaryMask, n_bins: usize) -> Result<f64, MetricError> {
    assert!(n_bins >= 1, "ece requires at least one bin");
    check_shapes(prob.width(), prob.height(), gt.width(), gt.height())?;
    let mut count = vec![0u64; n_bins];
    let mut conf_sum = vec![0.0f64; n_bins];
    let mut acc_sum = vec![0.0f64; n_bins];
    let bin_width = 0.5 / n_bins as f64;
    for (&p, &g) in prob.data().iter().zip(gt.data()) {
        let p = f64::from(p);
        let predicted_fg = p >= 0.5;
        let confidence = if predicted_fg { p } else { 1.0 - p };
        let correct = predicted_fg == (g == 1.0);
        let idx = (((confidence - 0.5) / bin_width) as usize).min(n_bins - 1);
        count[idx] += 1;
        conf_sum[idx] += confidence;
        acc_sum[idx] += f64::from(u8::from(correct));
    }
    let total: u64 = count.iter().sum();
    let mut out = 0.0;
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let n = count[b] as f64;
        out += n / total as f64 * (acc_sum[b] / n - conf_sum[b] / n).abs();
    }
    Ok(out)
}
