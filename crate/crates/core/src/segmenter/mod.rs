//! Promptable segmentation backends.
//!
//! A backend is anything that can turn an image plus a box prompt into a
//! foreground probability map, and can also propose unprompted candidate
//! maps for the whole image. Two implementations ship with the crate: a
//! deterministic synthetic oracle for experiments without model weights
//! ([`oracle::SyntheticOracle`]) and a line-protocol adapter that drives an
//! external process ([`external::ExternalBackend`]).

pub mod external;
pub mod oracle;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fusion::binarize;
use crate::imaging::{BinaryMask, Image, ImagingError, ProbabilityMap};
use crate::metrics::dice;
use crate::prompts::BoxPrompt;

#[derive(Debug, Error)]
pub enum SegmenterError {
    #[error("candidate list is empty")]
    EmptyCandidateList,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("backend error: {0}")]
    BackendError(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}

/// An image handed to a backend: decoded pixels plus, when available, the
/// path of the file they came from so subprocess backends can read it.
#[derive(Debug, Clone)]
pub struct BackendInput {
    image: Image,
    path: Option<PathBuf>,
}

impl BackendInput {
    /// An input that exists only in memory. Subprocess backends reject it.
    pub fn in_memory(image: Image) -> Self {
        Self { image, path: None }
    }

    /// An input backed by a file on disk.
    pub fn with_path(image: Image, path: PathBuf) -> Self {
        Self { image, path: Some(path) }
    }

    pub fn image(&self) -> &Image {
        &self.image
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

/// A promptable segmentation function.
///
/// Both calls must return maps matching the input image dimensions;
/// implementations may keep mutable state (subprocess pipes, caches) but
/// must stay deterministic for identical inputs.
pub trait SegmenterBackend {
    /// Probability map for the object indicated by a box prompt.
    fn predict(
        &mut self,
        input: &BackendInput,
        prompt: BoxPrompt,
    ) -> Result<ProbabilityMap, SegmenterError>;

    /// Unprompted candidate maps for the whole image, in the backend's
    /// preference order. Never empty on success.
    fn predict_everything(
        &mut self,
        input: &BackendInput,
    ) -> Result<Vec<ProbabilityMap>, SegmenterError>;

    /// Short name for reports.
    fn label(&self) -> &str {
        "backend"
    }
}

/// Outcome of scoring candidate maps against a reference mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskSelection {
    /// Index of the winning candidate.
    pub index: usize,
    /// Dice score of the winner.
    pub dice: f64,
    /// Dice score of every candidate, in input order.
    pub all_scores: Vec<f64>,
}

/// Picks the candidate whose binarization (at `threshold`) best matches the
/// ground truth by Dice. Ties go to the lowest index.
pub fn select_best_mask(
    candidates: &[ProbabilityMap],
    gt: &BinaryMask,
    threshold: f32,
) -> Result<MaskSelection, SegmenterError> {
    if candidates.is_empty() {
        return Err(SegmenterError::EmptyCandidateList);
    }
    let mut all_scores = Vec::with_capacity(candidates.len());
    for (i, cand) in candidates.iter().enumerate() {
        if cand.width() != gt.width() || cand.height() != gt.height() {
            return Err(SegmenterError::DimensionMismatch(format!(
                "candidate {i} is {}x{} but ground truth is {}x{}",
                cand.width(),
                cand.height(),
                gt.width(),
                gt.height()
            )));
        }
        let hard = binarize(cand, threshold);
        let score = dice(&hard, gt).expect("shapes already checked");
        all_scores.push(score);
    }
    let mut index = 0;
    for (i, &s) in all_scores.iter().enumerate() {
        if s > all_scores[index] {
            index = i;
        }
    }
    Ok(MaskSelection { index, dice: all_scores[index], all_scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::ProbabilityMap;
    use proptest::prelude::*;

    fn map_of(data: Vec<f32>) -> ProbabilityMap {
        ProbabilityMap::from_values(4, 4, data).unwrap()
    }

    #[test]
    fn perfect_candidate_wins() {
        let gt = BinaryMask::from_fn(4, 4, |x, _| x < 2);
        let perfect = map_of(gt.data().to_vec());
        let wrong = map_of(gt.data().iter().map(|&v| 1.0 - v).collect());
        let sel = select_best_mask(&[wrong, perfect], &gt, 0.5).unwrap();
        assert_eq!(sel.index, 1);
        assert_eq!(sel.dice, 1.0);
        assert_eq!(sel.all_scores.len(), 2);
    }

    #[test]
    fn ties_go_to_the_lowest_index() {
        let gt = BinaryMask::from_fn(4, 4, |x, _| x < 2);
        let a = map_of(gt.data().to_vec());
        let b = map_of(gt.data().to_vec());
        let sel = select_best_mask(&[a, b], &gt, 0.5).unwrap();
        assert_eq!(sel.index, 0);
    }

    #[test]
    fn empty_candidate_list_is_an_error() {
        let gt = BinaryMask::from_fn(4, 4, |_, _| false);
        assert!(matches!(
            select_best_mask(&[], &gt, 0.5),
            Err(SegmenterError::EmptyCandidateList)
        ));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let gt = BinaryMask::from_fn(4, 4, |_, _| true);
        let odd = ProbabilityMap::from_values(3, 4, vec![0.0; 12]).unwrap();
        assert!(matches!(
            select_best_mask(&[odd], &gt, 0.5),
            Err(SegmenterError::DimensionMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn selection_matches_brute_force_argmax(
            data in proptest::collection::vec(0.0f32..=1.0, 3 * 64),
            gt_bits in proptest::collection::vec(proptest::bool::ANY, 64),
        ) {
            let gt = BinaryMask::from_fn(8, 8, |x, y| gt_bits[(y * 8 + x) as usize]);
            let candidates: Vec<ProbabilityMap> = data
                .chunks_exact(64)
                .map(|c| ProbabilityMap::from_values(8, 8, c.to_vec()).unwrap())
                .collect();
            let sel = select_best_mask(&candidates, &gt, 0.5).unwrap();
            // Recompute scores independently and require the first argmax.
            let scores: Vec<f64> = candidates
                .iter()
                .map(|c| dice(&binarize(c, 0.5), &gt).unwrap())
                .collect();
            let best = scores
                .iter()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |(bi, bs), (i, &s)| {
                    if s > bs { (i, s) } else { (bi, bs) }
                });
            prop_assert_eq!(sel.index, best.0);
            prop_assert!((sel.dice - best.1).abs() < 1e-12);
        }
    }
}
