//! Command-line front end: dataset synthesis, single-stage tools for the
//! degrade/prompt/fuse/uncertainty/score pipeline, and the full experiment
//! runner.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use promptfuse::colormap::render_raster;
use promptfuse::degradation::{degrade, DegradationCode, DegradationParams};
use promptfuse::fusion::{fuse_mean, PredictionSet};
use promptfuse::harness::{
    gen_synthetic_dataset, run_experiment, BackendChoice, DegradationSetting, ExperimentConfig,
    ExperimentSummary, Mode,
};
use promptfuse::imaging::{
    load_image, load_mask, load_raster_f32, save_image, save_raster_f32, ProbabilityMap,
};
use promptfuse::metrics::MetricReport;
use promptfuse::prompts::{gt_bounding_box, jitter_boxes, BoxPrompt, PromptConfig};
use promptfuse::uncertainty::{expected_entropy, predictive_entropy, variance_map};

#[derive(Parser)]
#[command(
    name = "promptfuse",
    version,
    about = "Uncertainty-aware segmentation from jittered box prompts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic image/mask dataset.
    GenSynth {
        /// Number of images.
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Side length in pixels (square images).
        #[arg(long, default_value_t = 128)]
        size: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a factor-coded degradation to one image.
    Degrade {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Three-bit factor code, e.g. 000, 001, 101, 111.
        #[arg(long)]
        code: String,
        /// Gaussian noise sigma (only applies when the noise bit is set).
        #[arg(long, default_value_t = 0.05)]
        sigma_noise: f32,
        /// Blur radius as a fraction of the shorter image side.
        #[arg(long, default_value_t = 0.01)]
        blur_radius: f32,
        /// Illumination falloff strength in [0, 1).
        #[arg(long, default_value_t = 0.6)]
        illum_strength: f32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sample jittered box prompts from a ground-truth mask.
    Prompts {
        /// Ground-truth mask (PNG or PGM; gray >= 0.5 is foreground).
        #[arg(long)]
        mask: PathBuf,
        /// Number of boxes.
        #[arg(long, default_value_t = 8)]
        m: usize,
        /// Maximum edge displacement as a fraction of the box side.
        #[arg(long, default_value_t = 0.1)]
        jitter: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fuse a directory of probability maps (*.pmap) into their mean.
    Fuse {
        /// Directory holding the member maps.
        #[arg(long)]
        inputs: PathBuf,
        /// Output probability map.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute an uncertainty map from a directory of probability maps.
    Uncertainty {
        /// Directory holding the member maps.
        #[arg(long)]
        inputs: PathBuf,
        /// predictive | expected | variance
        #[arg(long)]
        kind: String,
        /// Output raster (.pmap).
        #[arg(long)]
        out: PathBuf,
        /// Optional color-mapped PNG rendering.
        #[arg(long)]
        png: Option<PathBuf>,
    },
    /// Score one probability map against a ground-truth mask.
    Score {
        /// Predicted probability map (.pmap).
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth mask.
        #[arg(long)]
        gt: PathBuf,
        /// Optional JSON output path; the report always prints to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full mode x degradation grid over a dataset.
    Evaluate {
        /// TOML config file; flags below override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dataset directory (images + *_mask.pgm).
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Output directory for reports and artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of jittered boxes in multibox mode.
        #[arg(long)]
        m: Option<usize>,
        /// Jitter ratio for multibox mode.
        #[arg(long)]
        jitter: Option<f64>,
        /// Comma-separated modes, e.g. everything,box,multibox.
        #[arg(long)]
        modes: Option<String>,
        /// Comma-separated settings, e.g. clean,gaussian:0.05,coded:101.
        #[arg(long)]
        degradations: Option<String>,
        /// External backend command line (whitespace-split); default is the
        /// built-in synthetic backend.
        #[arg(long)]
        backend_cmd: Option<String>,
        /// Record real wall-clock times instead of 0.000 placeholders.
        #[arg(long, default_value_t = false)]
        record_timing: bool,
        /// Skip writing per-cell raster artifacts.
        #[arg(long, default_value_t = false)]
        no_artifacts: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenSynth { n, size, seed, out } => {
            let ids = gen_synthetic_dataset(&out, n, size, seed)?;
            println!("wrote {} image/mask pairs to {}", ids.len(), out.display());
        }
        Command::Degrade {
            input,
            output,
            code,
            sigma_noise,
            blur_radius,
            illum_strength,
            seed,
        } => {
            let code: DegradationCode = code.parse()?;
            let img = load_image(&input)?;
            let params = DegradationParams {
                sigma_noise,
                blur_radius,
                illum_strength,
                seed,
                ..DegradationParams::default()
            };
            save_image(&degrade(&img, code, &params), &output)?;
            println!("wrote {}", output.display());
        }
        Command::Prompts { mask, m, jitter, seed, out } => {
            let gt = load_mask(&mask)?;
            let base = gt_bounding_box(&gt)?;
            let cfg = PromptConfig { m, jitter_ratio: jitter, seed };
            let boxes = jitter_boxes(base, &cfg, gt.width(), gt.height());
            let mut text = String::from("index,x0,y0,x1,y1\n");
            for (i, b) in boxes.iter().enumerate() {
                use std::fmt::Write as _;
                writeln!(text, "{i},{},{},{},{}", b.x0, b.y0, b.x1, b.y1)?;
            }
            std::fs::write(&out, text)
                .with_context(|| format!("writing {}", out.display()))?;
            println!("wrote {} boxes to {}", boxes.len(), out.display());
        }
        Command::Fuse { inputs, out } => {
            let set = load_prediction_set(&inputs)?;
            save_raster_f32(fuse_mean(&set).raster(), &out)?;
            println!("fused {} maps into {}", set.len(), out.display());
        }
        Command::Uncertainty { inputs, kind, out, png } => {
            let set = load_prediction_set(&inputs)?;
            let map = match kind.as_str() {
                "predictive" => predictive_entropy(&set),
                "expected" => expected_entropy(&set),
                "variance" => variance_map(&set),
                other => bail!(
                    "unknown uncertainty kind {other:?}; use predictive, expected, or variance"
                ),
            };
            save_raster_f32(map.raster(), &out)?;
            if let Some(png_path) = png {
                save_image(&render_raster(map.raster()), &png_path)?;
            }
            println!("wrote {} map to {}", map.kind().label(), out.display());
        }
        Command::Score { pred, gt, out } => {
            let prob = ProbabilityMap::new(load_raster_f32(&pred)?)?;
            let mask = load_mask(&gt)?;
            let report = MetricReport::evaluate(&prob, &mask)?;
            let json = serde_json::to_string_pretty(&report)?;
            println!("{json}");
            if let Some(path) = out {
                std::fs::write(&path, format!("{json}\n"))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
        }
        Command::Evaluate {
            config,
            dataset,
            out,
            seed,
            m,
            jitter,
            modes,
            degradations,
            backend_cmd,
            record_timing,
            no_artifacts,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_toml_file(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(d) = dataset {
                cfg.dataset_dir = d;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(m) = m {
                cfg.m = m;
            }
            if let Some(j) = jitter {
                cfg.jitter_ratio = j;
            }
            if let Some(list) = modes {
                cfg.modes = parse_list::<Mode>(&list, "mode")?;
            }
            if let Some(list) = degradations {
                cfg.degradations = parse_list::<DegradationSetting>(&list, "degradation setting")?;
            }
            if let Some(cmd) = backend_cmd {
                let command: Vec<String> =
                    cmd.split_whitespace().map(str::to_owned).collect();
                cfg.backend = BackendChoice::External { command };
            }
            if record_timing {
                cfg.record_timing = true;
            }
            if no_artifacts {
                cfg.write_artifacts = false;
            }
            let summary = run_experiment(&cfg)?;
            print_summary(&summary);
        }
    }
    Ok(())
}

/// Parses a comma-separated list through each item's FromStr.
fn parse_list<T>(list: &str, what: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::fmt::Display,
{
    let mut out = Vec::new();
    for item in list.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        match item.parse() {
            Ok(v) => out.push(v),
            Err(e) => bail!("bad {what} {item:?}: {e}"),
        }
    }
    if out.is_empty() {
        bail!("empty {what} list");
    }
    Ok(out)
}

/// Loads every `*.pmap` in a directory (sorted by file name) as one
/// prediction set over full-image prompts.
fn load_prediction_set(dir: &Path) -> Result<PredictionSet> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("pmap"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .pmap files in {}", dir.display());
    }
    let mut maps = Vec::with_capacity(paths.len());
    for path in &paths {
        maps.push(ProbabilityMap::new(load_raster_f32(path)?)?);
    }
    let boxes = vec![BoxPrompt::full_image(maps[0].width(), maps[0].height()); maps.len()];
    Ok(PredictionSet::new(maps, boxes)?)
}

fn print_summary(summary: &ExperimentSummary) {
    println!(
        "{:<16} {:<22} {:>9} {:>10} {:>9} {:>9} {:>4}",
        "degradation", "mode", "dice", "ece", "sm", "wfm", "n"
    );
    for c in &summary.cells {
        println!(
            "{:<16} {:<22} {:>9.6} {:>10.6} {:>9.6} {:>9.6} {:>4}",
            c.degradation, c.mode, c.dice, c.ece, c.sm, c.wfm, c.n_images
        );
    }
    for d in &summary.deltas {
        let ece = if d.ece_reduced {
            format!("({:.6})", -d.ece)
        } else {
            format!("{:+.6}", d.ece)
        };
        println!(
            "{:<16} {:<22} {:>+9.6} {:>10} {:>+9.6} {:>+9.6}",
            d.degradation,
            format!("delta({} vs {})", d.mode, d.baseline),
            d.dice,
            ece,
            d.sm,
            d.wfm
        );
    }
    if !summary.failures.is_empty() {
        println!(
            "{} cell(s) failed; see {}",
            summary.failures.len(),
            summary.out_dir.join("failures.csv").display()
        );
    }
    println!("reports written to {}", summary.out_dir.display());
}
