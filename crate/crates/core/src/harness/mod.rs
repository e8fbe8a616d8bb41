//! Batch evaluation harness.
//!
//! Runs a grid of (image, degradation setting, prompting mode) cells over a
//! dataset directory, scores every cell with the four metrics, and writes
//! deterministic CSV/JSON reports plus optional map artifacts. Identical
//! config and seed reproduce identical report bytes.
//!
//! Dataset layout: for every image `<stem>.png` there must be a ground
//! truth `<stem>_mask.pgm`; stems are processed in sorted order.

mod runner;
mod synth;

pub use runner::{run_experiment, ExperimentSummary};
pub use synth::gen_synthetic_dataset;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use thiserror::Error;

use crate::degradation::{DegradationCode, DegradationParams};
use crate::fusion::FusionError;
use crate::imaging::ImagingError;
use crate::metrics::{MetricError, MetricReport};
use crate::prompts::PromptError;
use crate::segmenter::oracle::OracleParams;
use crate::segmenter::SegmenterError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("dataset at {0} holds no image/mask pairs")]
    EmptyDataset(PathBuf),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("config parse failure: {0}")]
    ConfigParse(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Segmenter(#[from] SegmenterError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Prompting mode for one run cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Unprompted candidates; the best one (by Dice against the ground
    /// truth) is scored. An oracle-assisted upper bound for promptless use.
    Everything,
    /// A single box prompt at the exact ground-truth bounding box.
    Box,
    /// M jittered box prompts fused by averaging.
    Multibox,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Everything => "everything",
            Mode::Box => "box",
            Mode::Multibox => "multibox",
        }
    }

    pub fn all() -> [Mode; 3] {
        [Mode::Everything, Mode::Box, Mode::Multibox]
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "everything" => Ok(Mode::Everything),
            "box" => Ok(Mode::Box),
            "multibox" => Ok(Mode::Multibox),
            other => Err(HarnessError::InvalidConfig(format!(
                "unknown mode {other:?} (expected everything, box, or multibox)"
            ))),
        }
    }
}

/// One degradation column of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegradationSetting {
    /// The image as loaded.
    Clean,
    /// Additive Gaussian noise only, at the given sigma.
    Gaussian(f32),
    /// A factor-code degradation using the configured strengths.
    Coded(DegradationCode),
}

impl DegradationSetting {
    /// Report label, e.g. `clean`, `gaussian(0.05)`, `coded(101)`.
    pub fn label(&self) -> String {
        match self {
            DegradationSetting::Clean => "clean".into(),
            DegradationSetting::Gaussian(s) => format!("gaussian({s})"),
            DegradationSetting::Coded(c) => format!("coded({c})"),
        }
    }

    /// Filesystem-safe label, e.g. `gaussian_0.05`.
    pub fn dir_label(&self) -> String {
        match self {
            DegradationSetting::Clean => "clean".into(),
            DegradationSetting::Gaussian(s) => format!("gaussian_{s}"),
            DegradationSetting::Coded(c) => format!("coded_{c}"),
        }
    }
}

impl fmt::Display for DegradationSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for DegradationSetting {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            HarnessError::InvalidConfig(format!(
                "unknown degradation {s:?} (expected clean, gaussian:<sigma>, or coded:<code>)"
            ))
        };
        if s == "clean" {
            return Ok(DegradationSetting::Clean);
        }
        // Accept both the colon form used on the command line and the
        // parenthesized form produced by labels.
        let (kind, arg) = if let Some((k, a)) = s.split_once(':') {
            (k, a.to_string())
        } else if let Some(open) = s.find('(') {
            if !s.ends_with(')') || open + 1 >= s.len() {
                return Err(bad());
            }
            (&s[..open], s[open + 1..s.len() - 1].to_string())
        } else {
            return Err(bad());
        };
        match kind {
            "gaussian" => arg.parse::<f32>().map(DegradationSetting::Gaussian).map_err(|_| bad()),
            "coded" => arg
                .parse::<DegradationCode>()
                .map(DegradationSetting::Coded)
                .map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

/// Which backend the harness drives.
#[derive(Debug, Clone, PartialEq)]
pub enum BackendChoice {
    /// The built-in synthetic oracle, constructed per image.
    Synthetic,
    /// An external process speaking the line protocol.
    External { command: Vec<String> },
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_dir: PathBuf,
    pub out_dir: PathBuf,
    pub modes: Vec<Mode>,
    pub degradations: Vec<DegradationSetting>,
    /// Number of jittered prompts in multibox mode.
    pub m: usize,
    /// Edge jitter as a fraction of the box side.
    pub jitter_ratio: f64,
    pub seed: u64,
    /// Binarization threshold for Dice and candidate selection.
    pub threshold: f32,
    pub ece_bins: usize,
    pub oracle: OracleParams,
    /// Strengths for coded degradations (the seed field is ignored; one is
    /// derived per image).
    pub degradation_params: DegradationParams,
    pub backend: BackendChoice,
    /// Record real wall times. Off by default so reruns are byte-identical.
    pub record_timing: bool,
    /// Write per-cell map artifacts under `out_dir/maps`.
    pub write_artifacts: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset_dir: PathBuf::new(),
            out_dir: PathBuf::new(),
            modes: Mode::all().to_vec(),
            degradations: vec![
                DegradationSetting::Clean,
                DegradationSetting::Gaussian(0.05),
                DegradationSetting::Gaussian(0.10),
            ],
            m: 8,
            jitter_ratio: 0.1,
            seed: 0,
            threshold: 0.5,
            ece_bins: 10,
            oracle: OracleParams::default(),
            degradation_params: DegradationParams::default(),
            backend: BackendChoice::Synthetic,
            record_timing: false,
            write_artifacts: true,
        }
    }
}

impl ExperimentConfig {
    /// Checks the parts that must be present and sane before a run.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.dataset_dir.as_os_str().is_empty() {
            return Err(HarnessError::InvalidConfig("dataset dir is not set".into()));
        }
        if self.out_dir.as_os_str().is_empty() {
            return Err(HarnessError::InvalidConfig("output dir is not set".into()));
        }
        if self.modes.is_empty() {
            return Err(HarnessError::InvalidConfig("no modes selected".into()));
        }
        if self.degradations.is_empty() {
            return Err(HarnessError::InvalidConfig("no degradation settings selected".into()));
        }
        if self.m == 0 {
            return Err(HarnessError::InvalidConfig("m must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.jitter_ratio) {
            return Err(HarnessError::InvalidConfig(
                "jitter_ratio must lie in [0, 0.5)".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(HarnessError::InvalidConfig(
                "threshold must lie strictly inside (0, 1)".into(),
            ));
        }
        if self.ece_bins == 0 {
            return Err(HarnessError::InvalidConfig("ece_bins must be at least 1".into()));
        }
        if let BackendChoice::External { command } = &self.backend {
            if command.is_empty() {
                return Err(HarnessError::InvalidConfig(
                    "external backend selected but no command given".into(),
                ));
            }
        }
        Ok(())
    }

    /// Loads a TOML config file and lays it over the defaults.
    pub fn from_toml_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let file: FileConfig = toml::from_str(&text)
            .map_err(|e| HarnessError::ConfigParse(format!("{}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::default();
        file.apply(&mut cfg)?;
        Ok(cfg)
    }
}

/// Serde mirror of the TOML config; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    modes: Option<Vec<String>>,
    dataset: Option<DatasetSection>,
    prompts: Option<PromptsSection>,
    degradation: Option<DegradationSection>,
    oracle: Option<OracleSection>,
    backend: Option<BackendSection>,
    output: Option<OutputSection>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetSection {
    dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PromptsSection {
    m: Option<usize>,
    jitter_ratio: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DegradationSection {
    settings: Option<Vec<String>>,
    sigma_noise: Option<f32>,
    blur_radius: Option<f32>,
    illum_strength: Option<f32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OracleSection {
    blur_sigma: Option<f32>,
    kappa: Option<f32>,
    everything_blur_scale: Option<f32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BackendSection {
    kind: Option<String>,
    command: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    record_timing: Option<bool>,
    write_artifacts: Option<bool>,
}

impl FileConfig {
    fn apply(self, cfg: &mut ExperimentConfig) -> Result<(), HarnessError> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(modes) = self.modes {
            cfg.modes = modes.iter().map(|m| m.parse()).collect::<Result<_, _>>()?;
        }
        if let Some(d) = self.dataset {
            if let Some(dir) = d.dir {
                cfg.dataset_dir = dir;
            }
        }
        if let Some(p) = self.prompts {
            if let Some(m) = p.m {
                cfg.m = m;
            }
            if let Some(j) = p.jitter_ratio {
                cfg.jitter_ratio = j;
            }
        }
        if let Some(d) = self.degradation {
            if let Some(settings) = d.settings {
                cfg.degradations =
                    settings.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
            }
            if let Some(s) = d.sigma_noise {
                cfg.degradation_params.sigma_noise = s;
            }
            if let Some(b) = d.blur_radius {
                cfg.degradation_params.blur_radius = b;
            }
            if let Some(i) = d.illum_strength {
                cfg.degradation_params.illum_strength = i;
            }
        }
        if let Some(o) = self.oracle {
            if let Some(b) = o.blur_sigma {
                cfg.oracle.blur_sigma = b;
            }
            if let Some(k) = o.kappa {
                cfg.oracle.kappa = k;
            }
            if let Some(e) = o.everything_blur_scale {
                cfg.oracle.everything_blur_scale = e;
            }
        }
        if let Some(b) = self.backend {
            match b.kind.as_deref() {
                None | Some("synthetic") => cfg.backend = BackendChoice::Synthetic,
                Some("external") => {
                    cfg.backend = BackendChoice::External {
                        command: b.command.unwrap_or_default(),
                    }
                }
                Some(other) => {
                    return Err(HarnessError::InvalidConfig(format!(
                        "unknown backend kind {other:?}"
                    )))
                }
            }
        }
        if let Some(o) = self.output {
            if let Some(dir) = o.dir {
                cfg.out_dir = dir;
            }
            if let Some(t) = o.record_timing {
                cfg.record_timing = t;
            }
            if let Some(w) = o.write_artifacts {
                cfg.write_artifacts = w;
            }
        }
        Ok(())
    }
}

/// One successfully scored grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub image_id: String,
    pub mode: Mode,
    pub degradation: String,
    pub metrics: MetricReport,
    pub m_used: usize,
    pub wall_time_s: f64,
}

/// One grid cell that failed; the batch continues past it.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRecord {
    pub image_id: String,
    pub mode: Mode,
    pub degradation: String,
    pub error: String,
}
