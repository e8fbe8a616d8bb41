//! Structure measure for soft segmentation maps.
//!
//! `S = alpha * S_object + (1 - alpha) * S_region`, following the widely
//! used reference implementation semantics:
//!
//! * object term: for foreground, `2 * mean(x) / (mean(x)^2 + 1 + std(x) +
//!   eps)` over the predicted values under the mask (sample standard
//!   deviation, N - 1); the background term mirrors it on `1 - prediction`;
//!   the two combine weighted by the foreground fraction `mu`.
//! * region term: the map splits into four blocks at the foreground
//!   centroid (1-based indices, rounded half away from zero); each block
//!   contributes an SSIM-style score weighted by its pixel share. Empty
//!   blocks have zero weight and are skipped.
//!
//! Degenerate ground truths bypass both terms: an all-background mask
//! scores `1 - mean(prediction)` and an all-foreground mask scores
//! `mean(prediction)`. A negative combined score clamps to zero.

use crate::imaging::{BinaryMask, ProbabilityMap};
use crate::numeric::pairwise_mean;

use super::{check_shapes, MetricError};

const EPS: f64 = f64::EPSILON;

/// Structure measure with foreground/region trade-off `alpha` (0.5 in the
/// standard configuration).
pub fn s_measure(
    prob: &ProbabilityMap,
    gt: &BinaryMask,
    alpha: f64,
) -> Result<f64, MetricError> {
    check_shapes(prob.width(), prob.height(), gt.width(), gt.height())?;
    let pred: Vec<f64> = prob.data().iter().map(|&v| f64::from(v)).collect();
    let mask: Vec<bool> = gt.data().iter().map(|&v| v == 1.0).collect();
    let n = pred.len() as f64;
    let fg_count = mask.iter().filter(|m| **m).count();
    let mu = fg_count as f64 / n;

    if fg_count == 0 {
        return Ok(1.0 - pairwise_mean(&pred));
    }
    if fg_count == pred.len() {
        return Ok(pairwise_mean(&pred));
    }

    let w = prob.width() as usize;
    let h = prob.height() as usize;
    let q = alpha * s_object(&pred, &mask, mu) + (1.0 - alpha) * s_region(&pred, &mask, w, h);
    Ok(q.max(0.0))
}

fn object_score(values: &[f64]) -> f64 {
    let x = pairwise_mean(values);
    let sigma = sample_std(values, x);
    2.0 * x / (x * x + 1.0 + sigma + EPS)
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|&v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn s_object(pred: &[f64], mask: &[bool], mu: f64) -> f64 {
    let fg: Vec<f64> = pred
        .iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(&v, _)| v)
        .collect();
    let bg: Vec<f64> = pred
        .iter()
        .zip(mask)
        .filter(|(_, m)| !**m)
        .map(|(&v, _)| 1.0 - v)
        .collect();
    mu * object_score(&fg) + (1.0 - mu) * object_score(&bg)
}

/// Foreground centroid as 1-based column/row splits, rounded half away
/// from zero. The caller guarantees at least one foreground pixel.
fn centroid_splits(mask: &[bool], width: usize, height: usize) -> (usize, usize) {
    let mut total = 0.0f64;
    let mut col_sum = 0.0f64;
    let mut row_sum = 0.0f64;
    for y in 0..height {
        for x in 0..width {
            if mask[y * width + x] {
                total += 1.0;
                col_sum += (x + 1) as f64;
                row_sum += (y + 1) as f64;
            }
        }
    }
    let split_x = (col_sum / total).round() as usize;
    let split_y = (row_sum / total).round() as usize;
    (split_x.clamp(1, width), split_y.clamp(1, height))
}

struct Block {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl Block {
    fn len(&self) -> usize {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

fn s_region(pred: &[f64], mask: &[bool], width: usize, height: usize) -> f64 {
    let (sx, sy) = centroid_splits(mask, width, height);
    let blocks = [
        Block { x0: 0, y0: 0, x1: sx, y1: sy },
        Block { x0: sx, y0: 0, x1: width, y1: sy },
        Block { x0: 0, y0: sy, x1: sx, y1: height },
        Block { x0: sx, y0: sy, x1: width, y1: height },
    ];
    let total = (width * height) as f64;
    let mut q = 0.0;
    for b in &blocks {
        if b.len() == 0 {
            continue;
        }
        let weight = b.len() as f64 / total;
        q += weight * block_ssim(pred, mask, width, b);
    }
    q
}

fn block_ssim(pred: &[f64], mask: &[bool], width: usize, b: &Block) -> f64 {
    let n = b.len() as f64;
    let mut sum_x = 0.0;
    let mut sum_y = 0.0;
    for y in b.y0..b.y1 {
        for x in b.x0..b.x1 {
            let i = y * width + x;
            sum_x += pred[i];
            sum_y += f64::from(u8::from(mask[i]));
        }
    }
    let mean_x = sum_x / n;
    let mean_y = sum_y / n;

    let mut var_x = 0.0;
    let mut var_y = 0.0;
    let mut cov = 0.0;
    for y in b.y0..b.y1 {
        for x in b.x0..b.x1 {
            let i = y * width + x;
            let dx = pred[i] - mean_x;
            let dy = f64::from(u8::from(mask[i])) - mean_y;
            var_x += dx * dx;
            var_y += dy * dy;
            cov += dx * dy;
        }
    }
    // Sample statistics; the eps keeps single-pixel blocks finite (their
    // residuals are zero, so the quotient is exactly zero).
    let denom = n - 1.0 + EPS;
    var_x /= denom;
    var_y /= denom;
    cov /= denom;

    let a = 4.0 * mean_x * mean_y * cov;
    let b_t = (mean_x * mean_x + mean_y * mean_y) * (var_x + var_y);
    if a != 0.0 {
        a / (b_t + EPS)
    } else if b_t == 0.0 {
        1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::{BinaryMask, ProbabilityMap};

    fn disc_mask(w: u32, h: u32, cx: f64, cy: f64, r: f64) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            let dx = f64::from(x) - cx;
            let dy = f64::from(y) - cy;
            dx * dx + dy * dy <= r * r
        })
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let gt = disc_mask(16, 16, 8.0, 8.0, 4.0);
        let prob = ProbabilityMap::from_values(16, 16, gt.data().to_vec()).unwrap();
        let s = s_measure(&prob, &gt, 0.5).unwrap();
        assert!((s - 1.0).abs() < 1e-6, "s {s}");
    }

    #[test]
    fn empty_gt_scores_one_minus_mean_prediction() {
        let gt = BinaryMask::from_fn(8, 8, |_, _| false);
        let prob = ProbabilityMap::from_values(8, 8, vec![0.25; 64]).unwrap();
        let s = s_measure(&prob, &gt, 0.5).unwrap();
        assert!((s - 0.75).abs() < 1e-9);
    }

    #[test]
    fn full_gt_scores_mean_prediction() {
        let gt = BinaryMask::from_fn(8, 8, |_, _| true);
        let prob = ProbabilityMap::from_values(8, 8, vec![0.25; 64]).unwrap();
        let s = s_measure(&prob, &gt, 0.5).unwrap();
        assert!((s - 0.25).abs() < 1e-9);
    }

    #[test]
    fn inverted_prediction_scores_low() {
        let gt = disc_mask(16, 16, 8.0, 8.0, 4.0);
        let inverted: Vec<f32> = gt.data().iter().map(|&v| 1.0 - v).collect();
        let prob = ProbabilityMap::from_values(16, 16, inverted).unwrap();
        let s = s_measure(&prob, &gt, 0.5).unwrap();
        let perfect = ProbabilityMap::from_values(16, 16, gt.data().to_vec()).unwrap();
        let s_good = s_measure(&perfect, &gt, 0.5).unwrap();
        assert!(s < s_good - 0.3, "inverted {s} vs perfect {s_good}");
    }

    #[test]
    fn score_is_clamped_to_non_negative() {
        // An anti-correlated map drives block SSIM negative; the final
        // score must still be at least zero.
        let gt = BinaryMask::from_fn(4, 4, |x, _| x < 2);
        let flipped: Vec<f32> = gt.data().iter().map(|&v| 1.0 - v).collect();
        let prob = ProbabilityMap::from_values(4, 4, flipped).unwrap();
        let s = s_measure(&prob, &gt, 0.5).unwrap();
        assert!(s >= 0.0);
    }

    #[test]
    fn centroid_splits_match_one_based_rounding() {
        // Foreground at columns 2..5 (0-based), rows 1..3 of an 8x6 grid.
        let mask: Vec<bool> = (0..48)
            .map(|i| {
                let (x, y) = (i % 8, i / 8);
                (2..5).contains(&x) && (1..3).contains(&y)
            })
            .collect();
        // 1-based column mean = 4.0, row mean = 2.5 -> rounds to 3 (half
        // away from zero).
        let (sx, sy) = centroid_splits(&mask, 8, 6);
        assert_eq!(sx, 4);
        assert_eq!(sy, 3);
    }
}
