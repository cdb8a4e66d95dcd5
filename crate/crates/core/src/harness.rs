//! Experiment harness behind the CLI: reproducible end-to-end runs,
//! line-delimited run reports, Pareto-front extraction and cross-run
//! comparison tables.
//!
//! A run report is JSON-lines: one header object, then one record per
//! evaluated solution. Front and comparison tables are CSV with 12
//! significant digits. All file writes go through write-temp-then-rename.

use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{run_gd_logloss, run_sa_ba, BaselineError, SgdConfig};
use crate::data::{
    split_70_30, AnnealConfig, DataError, Dataset, ModelParams, ObjectiveValues, Solution,
};
use crate::datasets::{
    builtin_preset, generate_synthetic, load_csv, parse_preset, standardize, to_csv, IngestError,
    SyntheticConfig,
};
use crate::metrics::{
    balanced_accuracy, confusion, disparate_impact, underestimation_score, MetricsError,
};
use crate::model::{predict, ModelError};
use crate::optimizer::{finalize_archive, run_psa, OptimError, DECISION_THRESHOLD};

pub const REPORT_FORMAT: &str = "fairanneal-report-v1";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    BadConfig(String),
    #[error("{path}: not a psa report (optimizer is {found})")]
    NotAPsaReport { path: PathBuf, found: String },
    #[error("reports are not comparable: {0}")]
    SplitMismatch(String),
    #[error("bad report: {0}")]
    BadReport(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("report encoding: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// CLI exit code: 1 for validation problems (bad configs, bad data,
    /// incompatible reports), 2 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::BadConfig(_)
            | HarnessError::NotAPsaReport { .. }
            | HarnessError::SplitMismatch(_)
            | HarnessError::BadReport(_)
            | HarnessError::Data(_) => 1,
            HarnessError::Ingest(e) => match e {
                IngestError::Io(_) | IngestError::Csv(_) => 2,
                _ => 1,
            },
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Psa,
    SaBa,
    GdLogloss,
}

impl OptimizerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptimizerKind::Psa => "psa",
            OptimizerKind::SaBa => "sa_ba",
            OptimizerKind::GdLogloss => "gd_logloss",
        }
    }
}

/// A full experiment description. The TOML config file mirrors this
/// struct exactly; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// "synthetic", "adult", "recidivism", or a path to a CSV file.
    pub dataset: String,
    /// Raw data file; required for adult/recidivism/CSV datasets.
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    /// Column-mapping preset path; required for plain CSV datasets,
    /// optional override for the named presets.
    #[serde(default)]
    pub preset_path: Option<PathBuf>,
    pub optimizer: OptimizerKind,
    pub split_seed: u64,
    pub output_dir: PathBuf,
    /// Generator overrides, only meaningful for the synthetic dataset.
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
    /// Required (and only allowed) for psa and sa_ba.
    #[serde(default)]
    pub anneal: Option<AnnealConfig>,
    /// Required (and only allowed) for gd_logloss.
    #[serde(default)]
    pub sgd: Option<SgdConfig>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| HarnessError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml_str(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let needs_anneal = matches!(self.optimizer, OptimizerKind::Psa | OptimizerKind::SaBa);
        if needs_anneal && self.anneal.is_none() {
            return Err(HarnessError::BadConfig(format!(
                "optimizer {} requires an [anneal] section",
                self.optimizer.as_str()
            )));
        }
        if !needs_anneal && self.anneal.is_some() {
            return Err(HarnessError::BadConfig(
                "[anneal] section is only valid for psa and sa_ba".into(),
            ));
        }
        if self.optimizer == OptimizerKind::GdLogloss && self.sgd.is_none() {
            return Err(HarnessError::BadConfig(
                "optimizer gd_logloss requires an [sgd] section".into(),
            ));
        }
        if self.optimizer != OptimizerKind::GdLogloss && self.sgd.is_some() {
            return Err(HarnessError::BadConfig(
                "[sgd] section is only valid for gd_logloss".into(),
            ));
        }
        if let Some(anneal) = &self.anneal {
            anneal.validate()?;
        }
        if let Some(sgd) = &self.sgd {
            sgd.validate()?;
        }
        if let Some(synth) = &self.synthetic {
            synth.validate()?;
            if self.dataset != "synthetic" {
                return Err(HarnessError::BadConfig(
                    "[synthetic] section is only valid with dataset = \"synthetic\"".into(),
                ));
            }
        }
        if self.dataset != "synthetic" && self.csv_path.is_none() {
            return Err(HarnessError::BadConfig(format!(
                "dataset '{}' needs csv_path pointing at the raw file",
                self.dataset
            )));
        }
        if builtin_preset(&self.dataset).is_none()
            && self.dataset != "synthetic"
            && self.preset_path.is_none()
        {
            return Err(HarnessError::BadConfig(format!(
                "dataset '{}' is not a built-in preset; preset_path is required",
                self.dataset
            )));
        }
        Ok(())
    }

    /// Stable hash of the full config; identical configs hash equal.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config always serializes");
        format!("{:016x}", fnv1a64(canonical.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100_0000_01b3);
    }
    h
}

/// First line of a run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub format: String,
    pub dataset: String,
    pub optimizer: OptimizerKind,
    pub split_seed: u64,
    pub config_hash: String,
    pub n_train: usize,
    pub n_test: usize,
    pub n_records: usize,
    /// The only non-deterministic field, kept last.
    pub wall_clock_seconds: f64,
}

/// One evaluated solution in a run report. Test-side metrics are null
/// when their denominator is degenerate on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub chain_id: u32,
    pub step: u64,
    pub theta: Vec<f64>,
    pub train_ba: f64,
    pub train_us_raw: f64,
    pub train_us_dev: f64,
    pub test_ba: Option<f64>,
    pub test_us_raw: Option<f64>,
    pub test_us_dev: Option<f64>,
    pub test_di: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report_path: PathBuf,
    pub n_records: usize,
    pub config_hash: String,
    pub wall_clock_seconds: f64,
}

/// Writes `contents` atomically (temp file in the target directory,
/// then rename).
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), std::io::Error> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("out"),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Loads (or generates) the dataset named by the config.
pub fn resolve_dataset(cfg: &ExperimentConfig) -> Result<Dataset, HarnessError> {
    resolve_dataset_parts(
        &cfg.dataset,
        cfg.csv_path.as_deref(),
        cfg.preset_path.as_deref(),
        cfg.synthetic.as_ref(),
    )
}

/// Dataset resolution shared by `run` and `validate`: a preset name
/// ("synthetic" generates in memory, "adult"/"recidivism" load a CSV
/// through the built-in preset) or any CSV path plus a preset file.
pub fn resolve_dataset_parts(
    dataset: &str,
    csv_path: Option<&Path>,
    preset_path: Option<&Path>,
    synthetic: Option<&SyntheticConfig>,
) -> Result<Dataset, HarnessError> {
    if dataset == "synthetic" && csv_path.is_none() {
        let cfg = synthetic.cloned().unwrap_or_default();
        return Ok(generate_synthetic(&cfg)?);
    }
    let csv = csv_path
        .ok_or_else(|| HarnessError::BadConfig(format!("dataset '{dataset}' needs csv_path")))?;
    let spec = match preset_path {
        Some(p) => parse_preset(&fs::read_to_string(p)?)?,
        None => {
            let text = builtin_preset(dataset).ok_or_else(|| {
                HarnessError::BadConfig(format!(
                    "dataset '{dataset}' is not a built-in preset and no preset_path was given"
                ))
            })?;
            parse_preset(text)?
        }
    };
    let outcome = load_csv(csv, &spec)?;
    Ok(outcome.dataset)
}

/// (ba, us_raw, us_dev, di) on the test split; None where degenerate.
type HeldOutMetrics = (Option<f64>, Option<f64>, Option<f64>, Option<f64>);

fn test_metrics(params: &ModelParams, test: &Dataset) -> Result<HeldOutMetrics, HarnessError> {
    let labels = predict(params, test, DECISION_THRESHOLD)?;
    let gc = confusion(test.target(), &labels, test.sensitive())?;
    let ba = balanced_accuracy(&gc).ok();
    let us_raw = underestimation_score(&gc).ok();
    let us_dev = us_raw.map(|u| (1.0 - u).abs());
    let di = disparate_impact(&gc).ok();
    Ok((ba, us_raw, us_dev, di))
}

/// Runs the configured experiment end to end: load, split 70:30,
/// standardize on train statistics, optimize on the train split,
/// evaluate every produced solution on both splits, and write the
/// report to `output_dir/report_<optimizer>.jsonl`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary, HarnessError> {
    cfg.validate()?;
    let started = Instant::now();

    let dataset = resolve_dataset(cfg)?;
    let split = split_70_30(&dataset, cfg.split_seed)?;
    let (scaled, _scaling) = standardize(&dataset, &split.train)?;
    let train = scaled.subset(&split.train)?;
    let test = scaled.subset(&split.test)?;

    let solutions: Vec<Solution> = match cfg.optimizer {
        OptimizerKind::Psa => {
            let anneal = cfg.anneal.as_ref().expect("validated");
            run_psa(&train, anneal)?.into_entries()
        }
        OptimizerKind::SaBa => {
            let anneal = cfg.anneal.as_ref().expect("validated");
            vec![run_sa_ba(&train, anneal)?]
        }
        OptimizerKind::GdLogloss => {
            let sgd = cfg.sgd.as_ref().expect("validated");
            vec![run_gd_logloss(&train, sgd)?]
        }
    };

    let mut records = Vec::with_capacity(solutions.len());
    for sol in &solutions {
        let (test_ba, test_us_raw, test_us_dev, test_di) = test_metrics(&sol.params, &test)?;
        records.push(ReportRecord {
            chain_id: sol.chain_id,
            step: sol.step,
            theta: sol.params.theta().to_vec(),
            train_ba: sol.objectives.ba,
            train_us_raw: sol.objectives.us_raw,
            train_us_dev: sol.objectives.us_dev,
            test_ba,
            test_us_raw,
            test_us_dev,
            test_di,
        });
    }

    let header = ReportHeader {
        format: REPORT_FORMAT.into(),
        dataset: dataset.name().to_string(),
        optimizer: cfg.optimizer,
        split_seed: cfg.split_seed,
        config_hash: cfg.hash(),
        n_train: train.n_samples(),
        n_test: test.n_samples(),
        n_records: records.len(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };

    let mut out = String::new();
    out.push_str(&serde_json::to_string(&header)?);
    out.push('\n');
    for r in &records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    let report_path = cfg
        .output_dir
        .join(format!("report_{}.jsonl", cfg.optimizer.as_str()));
    write_atomic(&report_path, out.as_bytes())?;

    Ok(RunSummary {
        report_path,
        n_records: records.len(),
        config_hash: header.config_hash,
        wall_clock_seconds: header.wall_clock_seconds,
    })
}

/// Parses a report file back into its header and records.
pub fn read_report(path: &Path) -> Result<(ReportHeader, Vec<ReportRecord>), HarnessError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| HarnessError::BadReport(format!("{}: empty file", path.display())))?;
    let header: ReportHeader = serde_json::from_str(header_line)?;
    if header.format != REPORT_FORMAT {
        return Err(HarnessError::BadReport(format!(
            "{}: unknown format '{}'",
            path.display(),
            header.format
        )));
    }
    let mut records = Vec::with_capacity(header.n_records);
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(line)?);
    }
    if records.len() != header.n_records {
        return Err(HarnessError::BadReport(format!(
            "{}: header says {} records, found {}",
            path.display(),
            header.n_records,
            records.len()
        )));
    }
    Ok((header, records))
}

/// Formats with 12 significant digits, the table output precision.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

fn opt_sig12(x: Option<f64>) -> String {
    x.map(sig12).unwrap_or_default()
}

pub const FRONT_COLUMNS: &str = "ba_train,us_train,us_dev_train,ba_test,us_test,di_test";

/// Extracts the non-dominated train-objective front from a psa report,
/// sorted by train balanced accuracy descending, as CSV.
pub fn front_table(report_path: &Path) -> Result<String, HarnessError> {
    let (header, records) = read_report(report_path)?;
    if header.optimizer != OptimizerKind::Psa {
        return Err(HarnessError::NotAPsaReport {
            path: report_path.to_path_buf(),
            found: header.optimizer.as_str().to_string(),
        });
    }
    let mut solutions = Vec::with_capacity(records.len());
    let mut by_key: HashMap<(u32, u64), &ReportRecord> = HashMap::new();
    for r in &records {
        by_key.insert((r.chain_id, r.step), r);
        solutions.push(Solution {
            params: ModelParams::new(r.theta.clone())?,
            objectives: ObjectiveValues::new(r.train_ba, r.train_us_raw),
            chain_id: r.chain_id,
            step: r.step,
        });
    }
    let archive = finalize_archive(solutions)?;

    let mut out = String::from(FRONT_COLUMNS);
    out.push('\n');
    for sol in archive.entries() {
        let r = by_key[&(sol.chain_id, sol.step)];
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sig12(r.train_ba),
            sig12(r.train_us_raw),
            sig12(r.train_us_dev),
            opt_sig12(r.test_ba),
            opt_sig12(r.test_us_raw),
            opt_sig12(r.test_di),
        ));
    }
    Ok(out)
}

pub const COMPARE_COLUMNS: &str = "optimizer,ba_test,us_test,di_test";

/// Picks the report's headline solution: for psa the archived solution
/// with minimal train underestimation deviation (ties broken by higher
/// train balanced accuracy, then earliest), otherwise the single record.
pub fn select_record(header: &ReportHeader, records: &[ReportRecord]) -> Option<usize> {
    if records.is_empty() {
        return None;
    }
    match header.optimizer {
        OptimizerKind::Psa => (0..records.len()).min_by(|&a, &b| {
            let (ra, rb) = (&records[a], &records[b]);
            ra.train_us_dev
                .total_cmp(&rb.train_us_dev)
                .then(rb.train_ba.total_cmp(&ra.train_ba))
                .then(ra.chain_id.cmp(&rb.chain_id))
                .then(ra.step.cmp(&rb.step))
        }),
        _ => Some(0),
    }
}

/// Builds the cross-optimizer comparison table. All reports must come
/// from the same dataset and split seed.
pub fn compare_table(report_paths: &[PathBuf]) -> Result<String, HarnessError> {
    if report_paths.len() < 2 {
        return Err(HarnessError::BadReport(
            "compare needs at least two reports".into(),
        ));
    }
    let mut parsed = Vec::new();
    for path in report_paths {
        parsed.push((path, read_report(path)?));
    }
    let (first_path, (first_header, _)) = &parsed[0];
    for (path, (header, _)) in &parsed[1..] {
        if header.dataset != first_header.dataset || header.split_seed != first_header.split_seed {
            return Err(HarnessError::SplitMismatch(format!(
                "{} is ({}, split_seed {}) but {} is ({}, split_seed {})",
                first_path.display(),
                first_header.dataset,
                first_header.split_seed,
                path.display(),
                header.dataset,
                header.split_seed
            )));
        }
    }

    let mut out = String::from(COMPARE_COLUMNS);
    out.push('\n');
    for (path, (header, records)) in &parsed {
        let idx = select_record(header, records).ok_or_else(|| {
            HarnessError::BadReport(format!("{}: no records to compare", path.display()))
        })?;
        let r = &records[idx];
        out.push_str(&format!(
            "{},{},{},{}\n",
            header.optimizer.as_str(),
            opt_sig12(r.test_ba),
            opt_sig12(r.test_us_raw),
            opt_sig12(r.test_di),
        ));
    }
    Ok(out)
}

/// Generates the synthetic dataset and writes it as CSV with a
/// generation-parameter comment header.
pub fn write_synthetic_csv(cfg: &SyntheticConfig, out_path: &Path) -> Result<(), HarnessError> {
    let dataset = generate_synthetic(cfg)?;
    let comment = format!(
        "synthetic dataset: n_samples={} minority_fraction={} bias_strength={} noise_sd={} seed={}",
        cfg.n_samples, cfg.minority_fraction, cfg.bias_strength, cfg.noise_sd, cfg.seed
    );
    let text = to_csv(&dataset, Some(&comment))?;
    write_atomic(out_path, text.as_bytes())?;
    Ok(())
}

/// Summary printed by the `validate` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub name: String,
    pub n_samples: usize,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub minority_share: f64,
    pub positive_share: f64,
    /// Row counts indexed [target][sensitive].
    pub cell_counts: [[usize; 2]; 2],
}

pub fn validation_summary(d: &Dataset) -> ValidationSummary {
    ValidationSummary {
        name: d.name().to_string(),
        n_samples: d.n_samples(),
        n_features: d.n_features(),
        feature_names: d.feature_names().to_vec(),
        minority_share: d.minority_share(),
        positive_share: d.positive_share(),
        cell_counts: d.cell_counts(),
    }
}
