//! Per-pixel uncertainty derived from the spread of a prediction set.
//!
//! Three estimators over the per-prompt foreground probabilities
//! `p_1 .. p_M` at each pixel:
//!
//! * **predictive entropy**: `H(mean(p_i))`, the entropy of the fused map;
//! * **expected entropy**: `mean(H(p_i))`, the average per-prediction
//!   entropy. By Jensen's inequality it never exceeds predictive entropy.
//! * **variance**: the population variance of `p_1 .. p_M`.
//!
//! Entropy is the binary entropy in bits, `H(p) = -p log2 p
//! - (1 - p) log2 (1 - p)`, with probabilities clamped to
//! `[1e-12, 1 - 1e-12]` so degenerate values stay finite. Entropy maps live
//! in `[0, 1]`, variance maps in `[0, 0.25]`.

use crate::fusion::PredictionSet;
use crate::imaging::Raster;
use crate::numeric::pairwise_sum;

const EPS: f64 = 1e-12;

/// Which estimator produced an [`UncertaintyMap`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UncertaintyKind {
    PredictiveEntropy,
    ExpectedEntropy,
    Variance,
}

impl UncertaintyKind {
    pub fn label(&self) -> &'static str {
        match self {
            UncertaintyKind::PredictiveEntropy => "predictive",
            UncertaintyKind::ExpectedEntropy => "expected",
            UncertaintyKind::Variance => "variance",
        }
    }
}

/// A raster of per-pixel uncertainty values plus the estimator that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    raster: Raster,
    kind: UncertaintyKind,
}

impl UncertaintyMap {
    pub fn raster(&self) -> &Raster {
        &self.raster
    }

    pub fn into_raster(self) -> Raster {
        self.raster
    }

    pub fn kind(&self) -> UncertaintyKind {
        self.kind
    }

    pub fn width(&self) -> u32 {
        self.raster.width()
    }

    pub fn height(&self) -> u32 {
        self.raster.height()
    }

    pub fn data(&self) -> &[f32] {
        self.raster.data()
    }
}

/// Binary entropy in bits with the probability clamped away from 0 and 1.
fn binary_entropy_bits(p: f64) -> f64 {
    let p = p.clamp(EPS, 1.0 - EPS);
    let q = 1.0 - p;
    -(p * p.log2() + q * q.log2())
}

fn per_pixel(
    set: &PredictionSet,
    kind: UncertaintyKind,
    f: impl Fn(&[f64]) -> f64,
    hi: f32,
) -> UncertaintyMap {
    let n = set.maps()[0].data().len();
    let m = set.len();
    let mut scratch = vec![0.0f64; m];
    let mut out = Vec::with_capacity(n);
    for px in 0..n {
        for (i, map) in set.maps().iter().enumerate() {
            scratch[i] = f64::from(map.data()[px]);
        }
        out.push((f(&scratch) as f32).clamp(0.0, hi));
    }
    UncertaintyMap {
        raster: Raster::new(set.width(), set.height(), out).expect("uncertainty preserves shape"),
        kind,
    }
}

/// Entropy of the mean prediction, `H(mean(p_i))`, in bits.
pub fn predictive_entropy(set: &PredictionSet) -> UncertaintyMap {
    per_pixel(
        set,
        UncertaintyKind::PredictiveEntropy,
        |ps| binary_entropy_bits(pairwise_sum(ps) / ps.len() as f64),
        1.0,
    )
}

/// Mean of the per-prediction entropies, `mean(H(p_i))`, in bits.
pub fn expected_entropy(set: &PredictionSet) -> UncertaintyMap {
    per_pixel(
        set,
        UncertaintyKind::ExpectedEntropy,
        |ps| {
            let hs: Vec<f64> = ps.iter().map(|&p| binary_entropy_bits(p)).collect();
            pairwise_sum(&hs) / hs.len() as f64
        },
        1.0,
    )
}

/// Population variance of the predictions, `mean(p_i^2) - mean(p_i)^2`,
/// computed from centered residuals for stability.
pub fn variance_map(set: &PredictionSet) -> UncertaintyMap {
    per_pixel(
        set,
        UncertaintyKind::Variance,
        |ps| {
            let mean = pairwise_sum(ps) / ps.len() as f64;
            let sq: Vec<f64> = ps.iter().map(|&p| (p - mean) * (p - mean)).collect();
            pairwise_sum(&sq) / sq.len() as f64
        },
        0.25,
    )
}
