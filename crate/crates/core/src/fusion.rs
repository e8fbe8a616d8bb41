//! Fusing per-prompt predictions into a single probability map.
//!
//! The fusion rule is the per-pixel arithmetic mean over the prediction set,
//! computed with pairwise summation so the result is independent of
//! prediction order to well below 1e-7.

use thiserror::Error;

use crate::imaging::{BinaryMask, ProbabilityMap, Raster};
use crate::numeric::pairwise_sum;
use crate::prompts::BoxPrompt;

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("prediction set must hold at least one map")]
    Empty,
    #[error("prediction set maps and boxes differ in length: {0} maps, {1} boxes")]
    LengthMismatch(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// The predictions produced for one image under a set of box prompts,
/// together with the prompts that produced them. All maps share one shape.
#[derive(Debug, Clone)]
pub struct PredictionSet {
    maps: Vec<ProbabilityMap>,
    boxes: Vec<BoxPrompt>,
}

impl PredictionSet {
    pub fn new(maps: Vec<ProbabilityMap>, boxes: Vec<BoxPrompt>) -> Result<Self, FusionError> {
        if maps.is_empty() {
            return Err(FusionError::Empty);
        }
        if maps.len() != boxes.len() {
            return Err(FusionError::LengthMismatch(maps.len(), boxes.len()));
        }
        let (w, h) = (maps[0].width(), maps[0].height());
        for (i, m) in maps.iter().enumerate() {
            if m.width() != w || m.height() != h {
                return Err(FusionError::DimensionMismatch(format!(
                    "map 0 is {w}x{h} but map {i} is {}x{}",
                    m.width(),
                    m.height()
                )));
            }
        }
        Ok(Self { maps, boxes })
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    pub fn maps(&self) -> &[ProbabilityMap] {
        &self.maps
    }

    pub fn boxes(&self) -> &[BoxPrompt] {
        &self.boxes
    }

    pub fn width(&self) -> u32 {
        self.maps[0].width()
    }

    pub fn height(&self) -> u32 {
        self.maps[0].height()
    }
}

/// Per-pixel mean of the prediction set. A single-map set comes back as a
/// bit-exact copy of that map.
pub fn fuse_mean(set: &PredictionSet) -> ProbabilityMap {
    let n = set.maps()[0].data().len();
    let m = set.len();
    let mut scratch = vec![0.0f64; m];
    let mut out = Vec::with_capacity(n);
    for px in 0..n {
        for (i, map) in set.maps().iter().enumerate() {
            scratch[i] = f64::from(map.data()[px]);
        }
        let mean = pairwise_sum(&scratch) / m as f64;
        out.push((mean as f32).clamp(0.0, 1.0));
    }
    ProbabilityMap::new(
        Raster::new(set.width(), set.height(), out).expect("fusion preserves shape"),
    )
    .expect("mean of probabilities stays in [0, 1]")
}

/// Thresholds a probability map into a hard mask: `p >= threshold` becomes
/// foreground. `threshold` must lie strictly inside `(0, 1)`.
pub fn binarize(map: &ProbabilityMap, threshold: f32) -> BinaryMask {
    assert!(
        threshold > 0.0 && threshold < 1.0,
        "threshold must be inside (0, 1)"
    );
    let data = map
        .data()
        .iter()
        .map(|&p| if p >= threshold { 1.0 } else { 0.0 })
        .collect();
    BinaryMask::new(
        Raster::new(map.width(), map.height(), data).expect("binarize preserves shape"),
    )
    .expect("thresholded values are binary")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn map_of(w: u32, h: u32, data: Vec<f32>) -> ProbabilityMap {
        ProbabilityMap::from_values(w, h, data).unwrap()
    }

    fn set_of(maps: Vec<ProbabilityMap>) -> PredictionSet {
        let (w, h) = (maps[0].width(), maps[0].height());
        let boxes = vec![BoxPrompt::full_image(w, h); maps.len()];
        PredictionSet::new(maps, boxes).unwrap()
    }

    #[test]
    fn empty_set_is_rejected() {
        assert!(matches!(
            PredictionSet::new(vec![], vec![]),
            Err(FusionError::Empty)
        ));
    }

    #[test]
    fn mismatched_shapes_are_rejected() {
        let a = map_of(2, 2, vec![0.0; 4]);
        let b = map_of(3, 2, vec![0.0; 6]);
        let boxes = vec![BoxPrompt::full_image(2, 2); 2];
        assert!(matches!(
            PredictionSet::new(vec![a, b], boxes),
            Err(FusionError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn single_map_fusion_is_bit_exact() {
        let m = map_of(3, 2, vec![0.1, 0.999, 0.5, 0.0, 1.0, 0.25]);
        let fused = fuse_mean(&set_of(vec![m.clone()]));
        for (a, b) in m.data().iter().zip(fused.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn opposite_maps_fuse_to_half() {
        let a = map_of(2, 2, vec![0.0; 4]);
        let b = map_of(2, 2, vec![1.0; 4]);
        let fused = fuse_mean(&set_of(vec![a, b]));
        assert!(fused.data().iter().all(|&v| (v - 0.5).abs() < 1e-7));
    }

    #[test]
    fn fusion_matches_direct_mean() {
        let maps: Vec<ProbabilityMap> = (0..5)
            .map(|i| map_of(2, 2, vec![0.1 * (i as f32 + 1.0); 4]))
            .collect();
        let fused = fuse_mean(&set_of(maps));
        // (0.1 + 0.2 + 0.3 + 0.4 + 0.5) / 5 = 0.3
        assert!(fused.data().iter().all(|&v| (v - 0.3).abs() < 1e-7));
    }

    #[test]
    fn identical_maps_fuse_to_themselves() {
        let m = map_of(2, 2, vec![0.37, 0.0, 1.0, 0.5]);
        let fused = fuse_mean(&set_of(vec![m.clone(); 7]));
        for (a, b) in m.data().iter().zip(fused.data()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn binarize_uses_inclusive_threshold() {
        let m = map_of(4, 1, vec![0.0, 0.4999, 0.5, 1.0]);
        let mask = binarize(&m, 0.5);
        assert_eq!(mask.data(), &[0.0, 0.0, 1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn fusion_is_permutation_invariant(
            values in proptest::collection::vec(0.0f32..=1.0, 8 * 9),
            rot in 1usize..8,
        ) {
            let maps: Vec<ProbabilityMap> = values
                .chunks_exact(9)
                .map(|c| map_of(3, 3, c.to_vec()))
                .collect();
            let mut rotated = maps.clone();
            rotated.rotate_left(rot);
            let a = fuse_mean(&set_of(maps));
            let b = fuse_mean(&set_of(rotated));
            for (x, y) in a.data().iter().zip(b.data()) {
                prop_assert!((x - y).abs() < 1e-7);
            }
        }

        #[test]
        fn fused_values_stay_inside_envelope(
            values in proptest::collection::vec(0.0f32..=1.0, 4 * 6),
        ) {
            let maps: Vec<ProbabilityMap> = values
                .chunks_exact(6)
                .map(|c| map_of(3, 2, c.to_vec()))
                .collect();
            let fused = fuse_mean(&set_of(maps.clone()));
            for px in 0..6 {
                let lo = maps.iter().map(|m| m.data()[px]).fold(f32::INFINITY, f32::min);
                let hi = maps.iter().map(|m| m.data()[px]).fold(f32::NEG_INFINITY, f32::max);
                prop_assert!(fused.data()[px] >= lo - 1e-6);
                prop_assert!(fused.data()[px] <= hi + 1e-6);
            }
        }

        #[test]
        fn binarize_never_produces_non_binary(
            values in proptest::collection::vec(0.0f32..=1.0, 12),
            threshold in 0.01f32..0.99,
        ) {
            let m = map_of(4, 3, values);
            let mask = binarize(&m, threshold);
            for (p, v) in m.data().iter().zip(mask.data()) {
                prop_assert_eq!(*v, if *p >= threshold { 1.0 } else { 0.0 });
            }
        }
    }
}
