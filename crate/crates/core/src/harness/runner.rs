//! Grid execution and report writing.
//!
//! `run_experiment` walks image x degradation x mode cells in a fixed order
//! (images sorted by id, then settings and modes in config order), so every
//! report byte is a pure function of config and dataset. A failing cell is
//! recorded in `failures.csv` and never aborts the batch.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::colormap::render_raster;
use crate::degradation::{degrade, DegradationCode, DegradationParams};
use crate::fusion::{binarize, fuse_mean, PredictionSet};
use crate::imaging::{
    load_image, load_mask, save_image, save_raster_f32, BinaryMask, Image, ImagingError,
    ProbabilityMap,
};
use crate::metrics::{dice, ece, s_measure, weighted_fmeasure, MetricError, MetricReport};
use crate::numeric::pairwise_mean;
use crate::prompts::{gt_bounding_box, jitter_boxes, PromptConfig};
use crate::rng::{derive_seed, fnv1a};
use crate::segmenter::external::ExternalBackend;
use crate::segmenter::oracle::{OracleParams, SyntheticOracle};
use crate::segmenter::{select_best_mask, BackendInput, SegmenterBackend};
use crate::uncertainty::{expected_entropy, predictive_entropy, variance_map, UncertaintyMap};

use super::{
    BackendChoice, DegradationSetting, ExperimentConfig, FailureRecord, HarnessError, Mode,
    RunRecord,
};

/// Role tag for the per-image oracle seed ("IMGO").
const TAG_IMG_ORACLE: u64 = 0x494d_474f;
/// Role tag for the per-image prompt-jitter seed ("IMGP").
const TAG_IMG_PROMPT: u64 = 0x494d_4750;
/// Role tag for the per-image degradation seed ("IMGD"). All settings of one
/// image share it, so noise draws are paired across sigma levels.
const TAG_IMG_DEGRADE: u64 = 0x494d_4744;

/// Mean of each metric over one grid cell.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateCell {
    pub degradation: String,
    pub mode: String,
    pub dice: f64,
    pub ece: f64,
    pub sm: f64,
    pub wfm: f64,
    /// Number of images that produced a metric row in this cell.
    pub n_images: usize,
}

/// Difference row: a mode's cell means minus the baseline mode's.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateDelta {
    pub degradation: String,
    pub mode: String,
    pub baseline: String,
    pub dice: f64,
    pub ece: f64,
    pub sm: f64,
    pub wfm: f64,
    /// True when this mode lowered ECE relative to the baseline; the CSV
    /// then shows the reduction magnitude in parentheses.
    pub ece_reduced: bool,
}

/// Everything a finished run produced, with the output directory the report
/// files were written into.
#[derive(Debug)]
pub struct ExperimentSummary {
    pub cells: Vec<AggregateCell>,
    pub deltas: Vec<AggregateDelta>,
    pub records: Vec<RunRecord>,
    pub failures: Vec<FailureRecord>,
    pub out_dir: PathBuf,
}

impl ExperimentSummary {
    /// Looks up one aggregate cell by degradation label and mode.
    pub fn cell(&self, degradation: &str, mode: Mode) -> Option<&AggregateCell> {
        self.cells
            .iter()
            .find(|c| c.degradation == degradation && c.mode == mode.label())
    }

    /// Looks up one difference row by degradation label and mode.
    pub fn delta(&self, degradation: &str, mode: Mode) -> Option<&AggregateDelta> {
        self.deltas
            .iter()
            .find(|d| d.degradation == degradation && d.mode == mode.label())
    }
}

/// One image/mask pair found in the dataset directory.
struct DatasetEntry {
    id: String,
    image_path: PathBuf,
    mask_path: PathBuf,
}

/// Collects `<stem>.png` files with a `<stem>_mask.pgm` sibling, sorted by
/// stem so run order never depends on directory iteration order.
fn scan_dataset(dir: &Path) -> Result<Vec<DatasetEntry>, HarnessError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s.to_owned(),
            None => continue,
        };
        if stem.ends_with("_mask") {
            continue;
        }
        let mask_path = dir.join(format!("{stem}_mask.pgm"));
        if !mask_path.is_file() {
            continue;
        }
        out.push(DatasetEntry { id: stem, image_path: path, mask_path });
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    if out.is_empty() {
        return Err(HarnessError::EmptyDataset(dir.to_path_buf()));
    }
    Ok(out)
}

/// Applies one degradation setting. All settings of one image share `seed`,
/// so the underlying standard-normal draws are paired across noise levels.
fn apply_setting(
    image: &Image,
    setting: DegradationSetting,
    base: &DegradationParams,
    seed: u64,
) -> Image {
    match setting {
        DegradationSetting::Clean => {
            degrade(image, DegradationCode::CLEAN, &DegradationParams { seed, ..*base })
        }
        DegradationSetting::Gaussian(sigma) => {
            let code = DegradationCode { illumination: false, blur: false, noise: true };
            degrade(image, code, &DegradationParams { sigma_noise: sigma, seed, ..*base })
        }
        DegradationSetting::Coded(code) => {
            degrade(image, code, &DegradationParams { seed, ..*base })
        }
    }
}

/// Scores a probability map with the configured threshold and bin count.
fn score(
    prob: &ProbabilityMap,
    gt: &BinaryMask,
    threshold: f32,
    ece_bins: usize,
) -> Result<MetricReport, MetricError> {
    let hard = binarize(prob, threshold);
    Ok(MetricReport {
        dice: dice(&hard, gt)?,
        ece: ece(prob, gt, ece_bins)?,
        sm: s_measure(prob, gt, 0.5)?,
        wfm: weighted_fmeasure(prob, gt, 1.0)?,
    })
}

/// What one successful cell yields before it is written anywhere.
struct CellOutput {
    evaluated: ProbabilityMap,
    metrics: MetricReport,
    m_used: usize,
    uncertainty: Option<[UncertaintyMap; 3]>,
}

/// Runs a single grid cell against the backend.
fn run_cell(
    backend: &mut dyn SegmenterBackend,
    input: &BackendInput,
    gt: &BinaryMask,
    mode: Mode,
    cfg: &ExperimentConfig,
    prompt_seed: u64,
) -> Result<CellOutput, HarnessError> {
    match mode {
        Mode::Everything => {
            let cands = backend.predict_everything(input)?;
            let sel = select_best_mask(&cands, gt, cfg.threshold)?;
            let m_used = cands.len();
            let evaluated = cands
                .into_iter()
                .nth(sel.index)
                .expect("selection index is in bounds");
            let metrics = score(&evaluated, gt, cfg.threshold, cfg.ece_bins)?;
            Ok(CellOutput { evaluated, metrics, m_used, uncertainty: None })
        }
        Mode::Box => {
            let base = gt_bounding_box(gt)?;
            let evaluated = backend.predict(input, base)?;
            let metrics = score(&evaluated, gt, cfg.threshold, cfg.ece_bins)?;
            Ok(CellOutput { evaluated, metrics, m_used: 1, uncertainty: None })
        }
        Mode::Multibox => {
            let base = gt_bounding_box(gt)?;
            let prompt_cfg = PromptConfig {
                m: cfg.m,
                jitter_ratio: cfg.jitter_ratio,
                seed: prompt_seed,
            };
            let boxes = jitter_boxes(base, &prompt_cfg, input.width(), input.height());
            let mut maps = Vec::with_capacity(boxes.len());
            for b in &boxes {
                maps.push(backend.predict(input, *b)?);
            }
            let set = PredictionSet::new(maps, boxes)?;
            let evaluated = fuse_mean(&set);
            let metrics = score(&evaluated, gt, cfg.threshold, cfg.ece_bins)?;
            let uncertainty =
                Some([predictive_entropy(&set), expected_entropy(&set), variance_map(&set)]);
            Ok(CellOutput { evaluated, metrics, m_used: set.len(), uncertainty })
        }
    }
}

/// Writes the per-cell artifact rasters for one successful cell.
fn write_cell_artifacts(
    out_dir: &Path,
    image_id: &str,
    setting: DegradationSetting,
    mode: Mode,
    cell: &CellOutput,
) -> Result<(), HarnessError> {
    let dir = out_dir
        .join(image_id)
        .join(setting.dir_label())
        .join(mode.label());
    fs::create_dir_all(&dir)?;
    save_raster_f32(cell.evaluated.raster(), &dir.join("evaluated.pmap"))?;
    if let Some(maps) = &cell.uncertainty {
        for map in maps {
            let stem = format!("u_{}", map.kind().label());
            save_raster_f32(map.raster(), &dir.join(format!("{stem}.pmap")))?;
            save_image(&render_raster(map.raster()), &dir.join(format!("{stem}.png")))?;
        }
    }
    Ok(())
}

/// Runs the full grid and writes `runs.csv`, `failures.csv`,
/// `aggregate.csv`, `aggregate.json`, and (optionally) map artifacts under
/// the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary, HarnessError> {
    cfg.validate()?;
    let entries = scan_dataset(&cfg.dataset_dir)?;
    fs::create_dir_all(&cfg.out_dir)?;

    let scratch = cfg.out_dir.join("scratch");
    let mut external = match &cfg.backend {
        BackendChoice::Synthetic => None,
        BackendChoice::External { command } => {
            fs::create_dir_all(&scratch)?;
            Some(ExternalBackend::spawn(command, &scratch)?)
        }
    };

    let mut records: Vec<RunRecord> = Vec::new();
    let mut failures: Vec<FailureRecord> = Vec::new();

    for entry in &entries {
        let loaded = load_image(&entry.image_path)
            .and_then(|image| Ok((image, load_mask(&entry.mask_path)?)))
            .and_then(|(image, gt)| {
                if image.width() == gt.width() && image.height() == gt.height() {
                    Ok((image, gt))
                } else {
                    Err(ImagingError::DimensionMismatch(format!(
                        "{} is {}x{} but its mask is {}x{}",
                        entry.id,
                        image.width(),
                        image.height(),
                        gt.width(),
                        gt.height()
                    )))
                }
            });
        let (image, gt) = match loaded {
            Ok(pair) => pair,
            Err(e) => {
                // The whole image is unusable: record every cell it blocks.
                for setting in &cfg.degradations {
                    for mode in &cfg.modes {
                        failures.push(FailureRecord {
                            image_id: entry.id.clone(),
                            mode: *mode,
                            degradation: setting.label(),
                            error: e.to_string(),
                        });
                    }
                }
                continue;
            }
        };

        let id_hash = fnv1a(entry.id.as_bytes());
        let oracle_seed = derive_seed(cfg.seed, &[TAG_IMG_ORACLE, id_hash]);
        let prompt_seed = derive_seed(cfg.seed, &[TAG_IMG_PROMPT, id_hash]);
        let degrade_seed = derive_seed(cfg.seed, &[TAG_IMG_DEGRADE, id_hash]);

        let mut per_image_oracle = match &cfg.backend {
            BackendChoice::Synthetic => Some(SyntheticOracle::new(
                gt.clone(),
                OracleParams { seed: oracle_seed, ..cfg.oracle },
            )),
            BackendChoice::External { .. } => None,
        };

        for setting in &cfg.degradations {
            let degraded =
                apply_setting(&image, *setting, &cfg.degradation_params, degrade_seed);
            let input = match &cfg.backend {
                BackendChoice::Synthetic => BackendInput::in_memory(degraded),
                BackendChoice::External { .. } => {
                    let path =
                        scratch.join(format!("{}_{}.png", entry.id, setting.dir_label()));
                    match save_image(&degraded, &path) {
                        Ok(()) => BackendInput::with_path(degraded, path),
                        Err(e) => {
                            for mode in &cfg.modes {
                                failures.push(FailureRecord {
                                    image_id: entry.id.clone(),
                                    mode: *mode,
                                    degradation: setting.label(),
                                    error: e.to_string(),
                                });
                            }
                            continue;
                        }
                    }
                }
            };

            for mode in &cfg.modes {
                let backend: &mut dyn SegmenterBackend = match per_image_oracle.as_mut() {
                    Some(oracle) => oracle,
                    None => external.as_mut().expect("external backend was spawned"),
                };
                let started = Instant::now();
                match run_cell(backend, &input, &gt, *mode, cfg, prompt_seed) {
                    Ok(cell) => {
                        let wall_time_s = if cfg.record_timing {
                            started.elapsed().as_secs_f64()
                        } else {
                            0.0
                        };
                        if cfg.write_artifacts {
                            write_cell_artifacts(&cfg.out_dir, &entry.id, *setting, *mode, &cell)?;
                        }
                        records.push(RunRecord {
                            image_id: entry.id.clone(),
                            mode: *mode,
                            degradation: setting.label(),
                            metrics: cell.metrics,
                            m_used: cell.m_used,
                            wall_time_s,
                        });
                    }
                    Err(e) => failures.push(FailureRecord {
                        image_id: entry.id.clone(),
                        mode: *mode,
                        degradation: setting.label(),
                        error: e.to_string(),
                    }),
                }
            }
        }
    }

    let (cells, deltas) = aggregate(cfg, &records);

    fs::write(cfg.out_dir.join("runs.csv"), runs_csv(&records))?;
    fs::write(cfg.out_dir.join("failures.csv"), failures_csv(&failures))?;
    fs::write(cfg.out_dir.join("aggregate.csv"), aggregate_csv(&cells, &deltas))?;
    fs::write(
        cfg.out_dir.join("aggregate.json"),
        aggregate_json(&cells, &deltas)?,
    )?;

    Ok(ExperimentSummary {
        cells,
        deltas,
        records,
        failures,
        out_dir: cfg.out_dir.clone(),
    })
}

/// Builds per-cell means plus difference rows against the baseline mode.
/// The baseline is `everything` when configured, else the first mode.
fn aggregate(
    cfg: &ExperimentConfig,
    records: &[RunRecord],
) -> (Vec<AggregateCell>, Vec<AggregateDelta>) {
    let mut cells = Vec::new();
    for setting in &cfg.degradations {
        let label = setting.label();
        for mode in &cfg.modes {
            let mut dices = Vec::new();
            let mut eces = Vec::new();
            let mut sms = Vec::new();
            let mut wfms = Vec::new();
            for r in records {
                if r.mode == *mode && r.degradation == label {
                    dices.push(r.metrics.dice);
                    eces.push(r.metrics.ece);
                    sms.push(r.metrics.sm);
                    wfms.push(r.metrics.wfm);
                }
            }
            if dices.is_empty() {
                continue;
            }
            cells.push(AggregateCell {
                degradation: label.clone(),
                mode: mode.label().to_owned(),
                dice: pairwise_mean(&dices),
                ece: pairwise_mean(&eces),
                sm: pairwise_mean(&sms),
                wfm: pairwise_mean(&wfms),
                n_images: dices.len(),
            });
        }
    }

    let baseline = if cfg.modes.contains(&Mode::Everything) {
        Mode::Everything
    } else {
        cfg.modes[0]
    };

    let mut deltas = Vec::new();
    for setting in &cfg.degradations {
        let label = setting.label();
        let base = cells
            .iter()
            .find(|c| c.degradation == label && c.mode == baseline.label());
        let base = match base {
            Some(b) => b.clone(),
            None => continue,
        };
        for mode in &cfg.modes {
            if *mode == baseline {
                continue;
            }
            if let Some(cell) = cells
                .iter()
                .find(|c| c.degradation == label && c.mode == mode.label())
            {
                deltas.push(AggregateDelta {
                    degradation: label.clone(),
                    mode: mode.label().to_owned(),
                    baseline: baseline.label().to_owned(),
                    dice: cell.dice - base.dice,
                    ece: cell.ece - base.ece,
                    sm: cell.sm - base.sm,
                    wfm: cell.wfm - base.wfm,
                    ece_reduced: cell.ece < base.ece,
                });
            }
        }
    }
    (cells, deltas)
}

fn runs_csv(records: &[RunRecord]) -> String {
    let mut text = String::from("image_id,mode,degradation,dice,ece,sm,wfm,m_used,wall_time_s\n");
    for r in records {
        writeln!(
            text,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{},{:.3}",
            r.image_id,
            r.mode.label(),
            r.degradation,
            r.metrics.dice,
            r.metrics.ece,
            r.metrics.sm,
            r.metrics.wfm,
            r.m_used,
            r.wall_time_s
        )
        .expect("string writes cannot fail");
    }
    text
}

fn failures_csv(failures: &[FailureRecord]) -> String {
    let mut text = String::from("image_id,mode,degradation,error\n");
    for f in failures {
        // Commas inside error text would shift columns; quote the field.
        writeln!(
            text,
            "{},{},{},\"{}\"",
            f.image_id,
            f.mode.label(),
            f.degradation,
            f.error.replace('"', "'")
        )
        .expect("string writes cannot fail");
    }
    text
}

/// The ECE column of a difference row: a parenthesized reduction when the
/// mode lowered ECE, a signed difference otherwise.
fn delta_ece_text(d: &AggregateDelta) -> String {
    if d.ece_reduced {
        format!("({:.6})", -d.ece)
    } else {
        format!("{:+.6}", d.ece)
    }
}

fn aggregate_csv(cells: &[AggregateCell], deltas: &[AggregateDelta]) -> String {
    let mut text = String::from("degradation,mode,dice,ece,sm,wfm,n_images\n");
    for c in cells {
        writeln!(
            text,
            "{},{},{:.6},{:.6},{:.6},{:.6},{}",
            c.degradation, c.mode, c.dice, c.ece, c.sm, c.wfm, c.n_images
        )
        .expect("string writes cannot fail");
    }
    for d in deltas {
        writeln!(
            text,
            "{},delta({} vs {}),{:+.6},{},{:+.6},{:+.6},",
            d.degradation,
            d.mode,
            d.baseline,
            d.dice,
            delta_ece_text(d),
            d.sm,
            d.wfm
        )
        .expect("string writes cannot fail");
    }
    text
}

#[derive(Serialize)]
struct AggregateFile<'a> {
    cells: &'a [AggregateCell],
    deltas: &'a [AggregateDelta],
}

fn aggregate_json(
    cells: &[AggregateCell],
    deltas: &[AggregateDelta],
) -> Result<String, HarnessError> {
    let mut text = serde_json::to_string_pretty(&AggregateFile { cells, deltas })
        .map_err(|e| HarnessError::InvalidConfig(format!("aggregate serialization: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::gen_synthetic_dataset;

    fn small_config(dataset: &Path, out: &Path) -> ExperimentConfig {
        ExperimentConfig {
            dataset_dir: dataset.to_path_buf(),
            out_dir: out.to_path_buf(),
            write_artifacts: false,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tmp.path().join("data");
        fs::create_dir_all(&data).unwrap();
        let cfg = small_config(&data, &tmp.path().join("out"));
        match run_experiment(&cfg) {
            Err(HarnessError::EmptyDataset(_)) => {}
            other => panic!("expected EmptyDataset, got {other:?}"),
        }
    }

    #[test]
    fn multibox_with_zero_jitter_and_zero_kappa_matches_box() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tmp.path().join("data");
        gen_synthetic_dataset(&data, 3, 64, 7).unwrap();
        let mut cfg = small_config(&data, &tmp.path().join("out"));
        cfg.modes = vec![Mode::Box, Mode::Multibox];
        cfg.degradations = vec![DegradationSetting::Clean];
        cfg.jitter_ratio = 0.0;
        cfg.oracle.kappa = 0.0;
        let summary = run_experiment(&cfg).unwrap();
        assert!(summary.failures.is_empty(), "failures: {:?}", summary.failures);
        let b = summary.cell("clean", Mode::Box).unwrap();
        let m = summary.cell("clean", Mode::Multibox).unwrap();
        // Identical boxes and a noise-free oracle make every member map equal
        // to the box prediction, so the fused mean matches it too.
        assert!((b.dice - m.dice).abs() < 1e-6, "box {} multibox {}", b.dice, m.dice);
        assert!((b.ece - m.ece).abs() < 1e-6);
    }

    #[test]
    fn row_accounting_matches_the_grid() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tmp.path().join("data");
        gen_synthetic_dataset(&data, 5, 64, 3).unwrap();
        let mut cfg = small_config(&data, &tmp.path().join("out"));
        cfg.modes = vec![Mode::Box, Mode::Multibox];
        cfg.degradations = vec![DegradationSetting::Clean];
        let summary = run_experiment(&cfg).unwrap();
        assert_eq!(summary.records.len(), 10);
        assert_eq!(summary.cells.len(), 2);
        assert_eq!(summary.deltas.len(), 1);
        let runs = fs::read_to_string(summary.out_dir.join("runs.csv")).unwrap();
        assert_eq!(runs.lines().count(), 11);
        let agg = fs::read_to_string(summary.out_dir.join("aggregate.csv")).unwrap();
        assert_eq!(agg.lines().count(), 4);
        // Baseline falls back to the first configured mode when everything
        // is absent.
        assert_eq!(summary.deltas[0].baseline, "box");
        assert_eq!(summary.deltas[0].mode, "multibox");
        assert_eq!(summary.cells[0].n_images, 5);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tmp.path().join("data");
        gen_synthetic_dataset(&data, 2, 64, 5).unwrap();
        let mut cfg_a = small_config(&data, &tmp.path().join("out_a"));
        cfg_a.degradations =
            vec![DegradationSetting::Clean, DegradationSetting::Gaussian(0.05)];
        let mut cfg_b = cfg_a.clone();
        cfg_b.out_dir = tmp.path().join("out_b");
        run_experiment(&cfg_a).unwrap();
        run_experiment(&cfg_b).unwrap();
        for name in ["runs.csv", "failures.csv", "aggregate.csv", "aggregate.json"] {
            let a = fs::read(cfg_a.out_dir.join(name)).unwrap();
            let b = fs::read(cfg_b.out_dir.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
    }

    #[test]
    fn delta_ece_text_parenthesizes_reductions() {
        let mut d = AggregateDelta {
            degradation: "clean".into(),
            mode: "multibox".into(),
            baseline: "everything".into(),
            dice: 0.0,
            ece: -0.034,
            sm: 0.0,
            wfm: 0.0,
            ece_reduced: true,
        };
        assert_eq!(delta_ece_text(&d), "(0.034000)");
        d.ece = 0.0125;
        d.ece_reduced = false;
        assert_eq!(delta_ece_text(&d), "+0.012500");
    }

    #[test]
    fn dataset_scan_requires_mask_siblings() {
        let tmp = tempfile::tempdir().unwrap();
        let data = tmp.path().join("data");
        gen_synthetic_dataset(&data, 2, 64, 1).unwrap();
        // An unpaired image must be skipped, not treated as a dataset entry.
        fs::write(data.join("stray.png"), b"not even a real png").unwrap();
        let entries = scan_dataset(&data).unwrap();
        let ids: Vec<&str> = entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["synth_000", "synth_001"]);
    }
}
