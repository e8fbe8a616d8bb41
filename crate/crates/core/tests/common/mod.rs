//! Shared helpers for the integration suites: independent reference
//! implementations of the four metrics, spawn helpers for the command-line
//! binaries, and small filesystem utilities.
//!
//! The reference metrics are deliberately naive transcriptions of the
//! published algorithm descriptions, written with plain nested loops and no
//! code shared with the crate internals. The acceptance suite checks the
//! production implementations against these on random inputs, so agreement
//! means two independently derived codings of the same definition concur.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use promptfuse::imaging::{BinaryMask, ProbabilityMap};

const EPS: f64 = f64::EPSILON;

/// Dice coefficient from raw overlap counts; two empty masks score 1.
pub fn ref_dice(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let mut overlap = 0.0f64;
    let mut size_pred = 0.0f64;
    let mut size_gt = 0.0f64;
    for i in 0..pred.data().len() {
        let a = pred.data()[i] == 1.0;
        let b = gt.data()[i] == 1.0;
        if a {
            size_pred += 1.0;
        }
        if b {
            size_gt += 1.0;
        }
        if a && b {
            overlap += 1.0;
        }
    }
    if size_pred + size_gt == 0.0 {
        1.0
    } else {
        2.0 * overlap / (size_pred + size_gt)
    }
}

/// Expected calibration error over the foreground decision: confidence is
/// `max(p, 1 - p)`, pooled into equal-width bins over `(0.5, 1.0]`, and the
/// result is the count-weighted mean gap between accuracy and confidence.
pub fn ref_ece(prob: &ProbabilityMap, gt: &BinaryMask, n_bins: usize) -> f64 {
    struct Bin {
        count: f64,
        confidence: f64,
        hits: f64,
    }
    let mut bins: Vec<Bin> = (0..n_bins)
        .map(|_| Bin { count: 0.0, confidence: 0.0, hits: 0.0 })
        .collect();
    let bin_width = 0.5 / n_bins as f64;
    for (&p, &g) in prob.data().iter().zip(gt.data()) {
        let p = f64::from(p);
        let says_fg = p >= 0.5;
        let c = if says_fg { p } else { 1.0 - p };
        // Same boundary arithmetic as the production code, so both sides
        // agree on which bin a borderline confidence falls into.
        let mut k = ((c - 0.5) / bin_width) as usize;
        if k > n_bins - 1 {
            k = n_bins - 1;
        }
        bins[k].count += 1.0;
        bins[k].confidence += c;
        if says_fg == (g == 1.0) {
            bins[k].hits += 1.0;
        }
    }
    let total: f64 = bins.iter().map(|b| b.count).sum();
    let mut out = 0.0;
    for b in &bins {
        if b.count > 0.0 {
            out += b.count / total * (b.hits / b.count - b.confidence / b.count).abs();
        }
    }
    out
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (N - 1 divisor); a single value has spread 0.
fn sample_std_of(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean_of(values);
    let ss: f64 = values.iter().map(|&v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// The per-region object score `2 * mx / (mx^2 + 1 + sigma + eps)`.
fn dissimilarity_score(values: &[f64]) -> f64 {
    let mx = mean_of(values);
    2.0 * mx / (mx * mx + 1.0 + sample_std_of(values) + EPS)
}

/// SSIM-style block score over gathered prediction/truth value pairs, with
/// sample statistics (N - 1 + eps divisors).
fn quadrant_ssim(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = mean_of(xs);
    let my = mean_of(ys);
    let mut sx2 = 0.0;
    let mut sy2 = 0.0;
    let mut sxy = 0.0;
    for i in 0..xs.len() {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sx2 += dx * dx;
        sy2 += dy * dy;
        sxy += dx * dy;
    }
    let denom = n - 1.0 + EPS;
    sx2 /= denom;
    sy2 /= denom;
    sxy /= denom;
    let alpha = 4.0 * mx * my * sxy;
    let beta = (mx * mx + my * my) * (sx2 + sy2);
    if alpha != 0.0 {
        alpha / (beta + EPS)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Structure measure, transcribed from the original description: an object
/// term over foreground/background value pools plus a region term over the
/// four blocks split at the rounded 1-based foreground centroid.
pub fn ref_s_measure(prob: &ProbabilityMap, gt: &BinaryMask, alpha: f64) -> f64 {
    let w = prob.width() as usize;
    let h = prob.height() as usize;
    let pred: Vec<f64> = prob.data().iter().map(|&v| f64::from(v)).collect();
    let fg: Vec<bool> = gt.data().iter().map(|&v| v == 1.0).collect();
    let fg_total = fg.iter().filter(|m| **m).count();

    if fg_total == 0 {
        return 1.0 - mean_of(&pred);
    }
    if fg_total == w * h {
        return mean_of(&pred);
    }

    // Object term.
    let fg_vals: Vec<f64> = (0..pred.len()).filter(|&i| fg[i]).map(|i| pred[i]).collect();
    let bg_vals: Vec<f64> =
        (0..pred.len()).filter(|&i| !fg[i]).map(|i| 1.0 - pred[i]).collect();
    let mu = fg_total as f64 / (w * h) as f64;
    let s_object =
        mu * dissimilarity_score(&fg_vals) + (1.0 - mu) * dissimilarity_score(&bg_vals);

    // Region term: centroid in 1-based coordinates, rounded half away from
    // zero, then four blocks weighted by their pixel share.
    let mut col_sum = 0.0f64;
    let mut row_sum = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            if fg[y * w + x] {
                col_sum += (x + 1) as f64;
                row_sum += (y + 1) as f64;
            }
        }
    }
    let cx = ((col_sum / fg_total as f64).round() as usize).clamp(1, w);
    let cy = ((row_sum / fg_total as f64).round() as usize).clamp(1, h);

    let spans = [
        (0, cx, 0, cy),
        (cx, w, 0, cy),
        (0, cx, cy, h),
        (cx, w, cy, h),
    ];
    let mut s_region = 0.0;
    for &(x0, x1, y0, y1) in &spans {
        let count = (x1 - x0) * (y1 - y0);
        if count == 0 {
            continue;
        }
        let mut xs = Vec::with_capacity(count);
        let mut ys = Vec::with_capacity(count);
        for y in y0..y1 {
            for x in x0..x1 {
                xs.push(pred[y * w + x]);
                ys.push(if fg[y * w + x] { 1.0 } else { 0.0 });
            }
        }
        s_region += count as f64 / (w * h) as f64 * quadrant_ssim(&xs, &ys);
    }

    let s = alpha * s_object + (1.0 - alpha) * s_region;
    if s < 0.0 {
        0.0
    } else {
        s
    }
}

/// Normalized 7x7 Gaussian with sigma 5, built by direct evaluation.
fn smoothing_kernel() -> Vec<f64> {
    let mut k = Vec::with_capacity(49);
    for dy in -3i32..=3 {
        for dx in -3i32..=3 {
            k.push((-f64::from(dx * dx + dy * dy) / 50.0).exp());
        }
    }
    let total: f64 = k.iter().sum();
    k.iter().map(|v| v / total).collect()
}

/// Weighted F-measure, transcribed stage by stage from the original
/// description: error substitution at the nearest foreground pixel,
/// Gaussian smoothing under zero padding, the foreground-only min, the
/// distance-decayed background weight, then weighted precision/recall.
pub fn ref_weighted_fmeasure(prob: &ProbabilityMap, gt: &BinaryMask, beta2: f64) -> f64 {
    let w = prob.width() as usize;
    let h = prob.height() as usize;
    let n = w * h;
    let pred: Vec<f64> = prob.data().iter().map(|&v| f64::from(v)).collect();
    let fg: Vec<bool> = gt.data().iter().map(|&v| v == 1.0).collect();
    let fg_total = fg.iter().filter(|m| **m).count();

    if fg_total == 0 {
        let all_zero = pred.iter().all(|&p| p == 0.0);
        return if all_zero { 1.0 } else { 0.0 };
    }

    let e: Vec<f64> = (0..n)
        .map(|i| (pred[i] - if fg[i] { 1.0 } else { 0.0 }).abs())
        .collect();

    // Exhaustive nearest-foreground search; equidistant sites resolve to
    // the first one in row-major order.
    let mut dist = vec![0.0f64; n];
    let mut nearest = vec![0usize; n];
    for i in 0..n {
        if fg[i] {
            nearest[i] = i;
            continue;
        }
        let px = (i % w) as i64;
        let py = (i / w) as i64;
        let mut best_d2 = u64::MAX;
        let mut best = i;
        for (j, &site) in fg.iter().enumerate() {
            if !site {
                continue;
            }
            let dx = (j % w) as i64 - px;
            let dy = (j / w) as i64 - py;
            let d2 = (dx * dx + dy * dy) as u64;
            if d2 < best_d2 {
                best_d2 = d2;
                best = j;
            }
        }
        dist[i] = (best_d2 as f64).sqrt();
        nearest[i] = best;
    }

    let et: Vec<f64> = (0..n).map(|i| if fg[i] { e[i] } else { e[nearest[i]] }).collect();

    let kernel = smoothing_kernel();
    let mut ea = vec![0.0f64; n];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut acc = 0.0;
            for dy in -3i64..=3 {
                for dx in -3i64..=3 {
                    let sy = y + dy;
                    let sx = x + dx;
                    if sy < 0 || sy >= h as i64 || sx < 0 || sx >= w as i64 {
                        continue;
                    }
                    let tap = kernel[((dy + 3) * 7 + dx + 3) as usize];
                    acc += tap * et[(sy * w as i64 + sx) as usize];
                }
            }
            ea[(y * w as i64 + x) as usize] = acc;
        }
    }

    let mut fg_err = 0.0f64;
    let mut bg_err = 0.0f64;
    for i in 0..n {
        if fg[i] {
            fg_err += if ea[i] < e[i] { ea[i] } else { e[i] };
        } else {
            let b = 2.0 - (0.5f64.ln() / 5.0 * dist[i]).exp();
            bg_err += e[i] * b;
        }
    }

    let tp = fg_total as f64 - fg_err;
    let recall = 1.0 - fg_err / fg_total as f64;
    let precision = tp / (EPS + tp + bg_err);
    (1.0 + beta2) * recall * precision / (EPS + recall + beta2 * precision)
}

/// Path of the main binary built for this test run.
pub fn promptfuse_exe() -> &'static str {
    env!("CARGO_BIN_EXE_promptfuse")
}

/// Path of the protocol test double built for this test run.
pub fn mock_backend_exe() -> &'static str {
    env!("CARGO_BIN_EXE_mock-backend")
}

/// Runs the main binary and panics with the full output when it fails.
pub fn run_promptfuse(args: &[&str]) -> Output {
    let out = Command::new(promptfuse_exe())
        .args(args)
        .output()
        .expect("failed to spawn the promptfuse binary");
    assert!(
        out.status.success(),
        "promptfuse {:?} exited with {}\nstdout:\n{}\nstderr:\n{}",
        args,
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

/// Runs the main binary expecting a nonzero exit; returns its stderr text.
pub fn run_promptfuse_expecting_failure(args: &[&str]) -> String {
    let out = Command::new(promptfuse_exe())
        .args(args)
        .output()
        .expect("failed to spawn the promptfuse binary");
    assert!(
        !out.status.success(),
        "promptfuse {:?} unexpectedly succeeded\nstdout:\n{}",
        args,
        String::from_utf8_lossy(&out.stdout),
    );
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Every file under `root`, as paths relative to it, sorted.
pub fn walk_relative(root: &Path) -> Vec<PathBuf> {
    fn visit(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).expect("readable directory") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                visit(root, &path, out);
            } else {
                out.push(path.strip_prefix(root).expect("path under root").to_path_buf());
            }
        }
    }
    let mut out = Vec::new();
    visit(root, root, &mut out);
    out.sort();
    out
}
