//! Weighted F-measure for soft segmentation maps.
//!
//! Follows the reference semantics for extending precision/recall to
//! non-binary maps:
//!
//! 1. per-pixel absolute error `E = |prediction - gt|`;
//! 2. background errors are first replaced by the error at the nearest
//!    foreground pixel (`Et`) for the purpose of neighborhood smoothing;
//! 3. `EA` = 7x7 Gaussian (sigma 5) smoothing of `Et`, zero-padded;
//! 4. the effective error is `E`, except on foreground pixels where the
//!    smoothed value is smaller (`min(E, EA)` on foreground only);
//! 5. a dependency weight `B` scales background errors: 1 on foreground,
//!    `2 - exp(ln(0.5) / 5 * dist-to-foreground)` on background;
//! 6. weighted true positives, false positives, recall, and precision
//!    combine into `F = (1 + beta^2) * R * P / (eps + beta^2 * P + R)`.
//!
//! An empty ground truth cannot support the distance transform: by
//! convention it scores 1.0 when the prediction is identically zero and
//! 0.0 otherwise.

use crate::imaging::{BinaryMask, ProbabilityMap};

use super::edt::distance_to_set;
use super::{check_shapes, MetricError};

const EPS: f64 = f64::EPSILON;

/// Normalized 7x7 Gaussian kernel with sigma 5, matching
/// `fspecial('gaussian', 7, 5)`.
fn gaussian_7x7_sigma5() -> [f64; 49] {
    let mut k = [0.0f64; 49];
    let mut total = 0.0;
    for (i, slot) in k.iter_mut().enumerate() {
        let dx = (i % 7) as f64 - 3.0;
        let dy = (i / 7) as f64 - 3.0;
        *slot = (-(dx * dx + dy * dy) / (2.0 * 25.0)).exp();
        total += *slot;
    }
    for slot in &mut k {
        *slot /= total;
    }
    k
}

/// Weighted F-measure with the trade-off `beta2` (= beta squared; 1.0 in
/// the standard configuration).
pub fn weighted_fmeasure(
    prob: &ProbabilityMap,
    gt: &BinaryMask,
    beta2: f64,
) -> Result<f64, MetricError> {
    check_shapes(prob.width(), prob.height(), gt.width(), gt.height())?;
    let w = prob.width() as usize;
    let h = prob.height() as usize;
    let pred: Vec<f64> = prob.data().iter().map(|&v| f64::from(v)).collect();
    let fg: Vec<bool> = gt.data().iter().map(|&v| v == 1.0).collect();
    let fg_count = fg.iter().filter(|m| **m).count();

    if fg_count == 0 {
        let all_zero = pred.iter().all(|&p| p == 0.0);
        return Ok(if all_zero { 1.0 } else { 0.0 });
    }

    let e: Vec<f64> = pred
        .iter()
        .zip(&fg)
        .map(|(&p, &m)| (p - f64::from(u8::from(m))).abs())
        .collect();

    let field = distance_to_set(&fg, w, h);
    let et: Vec<f64> = e
        .iter()
        .enumerate()
        .map(|(i, &err)| if fg[i] { err } else { e[field.nearest[i]] })
        .collect();

    // Zero-padded 7x7 correlation (the kernel is symmetric, so this equals
    // convolution).
    let kernel = gaussian_7x7_sigma5();
    let mut ea = vec![0.0f64; et.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for ky in 0..7usize {
                let sy = y as i64 + ky as i64 - 3;
                if sy < 0 || sy >= h as i64 {
                    continue;
                }
                for kx in 0..7usize {
                    let sx = x as i64 + kx as i64 - 3;
                    if sx < 0 || sx >= w as i64 {
                        continue;
                    }
                    acc += kernel[ky * 7 + kx] * et[sy as usize * w + sx as usize];
                }
            }
            ea[y * w + x] = acc;
        }
    }

    let mut sum_ew_fg = 0.0f64;
    let mut sum_ew_bg = 0.0f64;
    for i in 0..e.len() {
        if fg[i] {
            let min_e_ea = if ea[i] < e[i] { ea[i] } else { e[i] };
            sum_ew_fg += min_e_ea;
        } else {
            // ln(0.5) = -ln(2): the weight rises from 1 at the boundary
            // toward 2 far from the object.
            let dist = (field.d2[i] as f64).sqrt();
            let b = 2.0 - (-std::f64::consts::LN_2 / 5.0 * dist).exp();
            sum_ew_bg += e[i] * b;
        }
    }

    let tp_w = fg_count as f64 - sum_ew_fg;
    let fp_w = sum_ew_bg;
    let recall = 1.0 - sum_ew_fg / fg_count as f64;
    let precision = tp_w / (EPS + tp_w + fp_w);
    Ok((1.0 + beta2) * recall * precision / (EPS + recall + beta2 * precision))
}
