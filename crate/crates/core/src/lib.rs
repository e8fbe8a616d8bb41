//! Prompt-augmented segmentation with per-pixel uncertainty.
//!
//! The crate wraps any promptable segmentation backend behind
//! [`segmenter::SegmenterBackend`], samples jittered box prompts around a
//! base box, fuses the per-prompt predictions into a single probability map,
//! and derives entropy/variance uncertainty maps from the prediction spread.
//! A parameterized image degradation generator and a four-metric evaluation
//! harness (Dice, ECE, S-measure, weighted F-measure) make the pipeline
//! reproducible end to end on synthetic data, with no GPU or model weights
//! required.

pub mod colormap;
pub mod degradation;
pub mod fusion;
pub mod harness;
pub mod imaging;
pub mod maskops;
pub mod metrics;
pub mod numeric;
pub mod prompts;
pub mod rng;
pub mod segmenter;
pub mod uncertainty;
