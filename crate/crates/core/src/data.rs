//! Core data model: datasets, model parameters, objective values and
//! annealing configuration.
//!
//! All types here are immutable after construction; constructors perform
//! the validation so the rest of the crate can rely on the invariants
//! (binary columns, non-empty groups, finite parameters) without
//! re-checking.

use std::cmp::Ordering;
use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream_rng, STREAM_SPLIT};

/// One violated dataset invariant. `Dataset::new` collects all of them
/// instead of stopping at the first.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A column has the wrong number of rows.
    ShapeMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    /// A target or sensitive entry is neither 0 nor 1.
    NonBinaryColumn {
        column: String,
        row: usize,
        value: u8,
    },
    /// A sensitive group or target class has zero rows, which would make
    /// the fairness metrics divide by zero.
    EmptyGroup { description: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ShapeMismatch {
                what,
                expected,
                got,
            } => write!(
                f,
                "shape mismatch: {what} has {got} rows, expected {expected}"
            ),
            Violation::NonBinaryColumn { column, row, value } => {
                write!(
                    f,
                    "non-binary value {value} in column '{column}' at row {row}"
                )
            }
            Violation::EmptyGroup { description } => write!(f, "empty group: {description}"),
        }
    }
}

/// Errors from the data model.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("dataset validation failed: {}", format_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("need at least {min} samples for a 70:30 split, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("model parameters contain a non-finite entry at index {index}")]
    NonFiniteParam { index: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// NaN-rejecting check for "must be > 0" validations.
pub(crate) fn not_positive(x: f64) -> bool {
    x.is_nan() || x <= 0.0
}

/// NaN-rejecting check for "must be >= 0" validations.
pub(crate) fn is_negative(x: f64) -> bool {
    x.is_nan() || x < 0.0
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// A binary-classification dataset with a binary sensitive attribute.
///
/// Encoding conventions used across the crate:
/// * `target = 1` is the desirable outcome,
/// * `sensitive = 1` is the majority (privileged) group, `0` the protected
///   minority.
///
/// Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    target: Vec<u8>,
    sensitive: Vec<u8>,
    feature_names: Vec<String>,
    name: String,
}

impl Dataset {
    /// Builds a dataset, returning every violated invariant on failure.
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        target: Vec<u8>,
        sensitive: Vec<u8>,
        feature_names: Vec<String>,
        name: impl Into<String>,
    ) -> Result<Self, DataError> {
        let mut violations = Vec::new();
        let n_samples = target.len();

        if n_features == 0 {
            violations.push(Violation::ShapeMismatch {
                what: "features (columns)".into(),
                expected: 1,
                got: 0,
            });
        } else {
            if !features.len().is_multiple_of(n_features) {
                violations.push(Violation::ShapeMismatch {
                    what: "features (ragged matrix)".into(),
                    expected: n_samples * n_features,
                    got: features.len(),
                });
            }
            let rows = features.len() / n_features;
            if rows != n_samples {
                violations.push(Violation::ShapeMismatch {
                    what: "features".into(),
                    expected: n_samples,
                    got: rows,
                });
            }
        }
        if sensitive.len() != n_samples {
            violations.push(Violation::ShapeMismatch {
                what: "sensitive".into(),
                expected: n_samples,
                got: sensitive.len(),
            });
        }
        if feature_names.len() != n_features {
            violations.push(Violation::ShapeMismatch {
                what: "feature_names".into(),
                expected: n_features,
                got: feature_names.len(),
            });
        }

        for (column, values) in [("target", &target), ("sensitive", &sensitive)] {
            for (row, &value) in values.iter().enumerate() {
                if value > 1 {
                    violations.push(Violation::NonBinaryColumn {
                        column: column.into(),
                        row,
                        value,
                    });
                }
            }
        }

        for (description, values, wanted) in [
            (
                "no rows with sensitive = 0 (protected minority)",
                &sensitive,
                0u8,
            ),
            ("no rows with sensitive = 1 (majority)", &sensitive, 1u8),
            ("no rows with target = 0", &target, 0u8),
            ("no rows with target = 1", &target, 1u8),
        ] {
            if !values.contains(&wanted) {
                violations.push(Violation::EmptyGroup {
                    description: description.into(),
                });
            }
        }

        if violations.is_empty() {
            Ok(Dataset {
                features,
                n_features,
                target,
                sensitive,
                feature_names,
                name: name.into(),
            })
        } else {
            Err(DataError::Invalid(violations))
        }
    }

    pub fn n_samples(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn feature_column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    pub fn target(&self) -> &[u8] {
        &self.target
    }

    pub fn sensitive(&self) -> &[u8] {
        &self.sensitive
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Share of rows in the protected minority (`sensitive = 0`).
    pub fn minority_share(&self) -> f64 {
        let minority = self.sensitive.iter().filter(|&&s| s == 0).count();
        minority as f64 / self.n_samples() as f64
    }

    /// Share of rows with the desirable outcome (`target = 1`).
    pub fn positive_share(&self) -> f64 {
        let positives = self.target.iter().filter(|&&y| y == 1).count();
        positives as f64 / self.n_samples() as f64
    }

    /// Row counts of the four (target, sensitive) cells, indexed
    /// `[target][sensitive]`.
    pub fn cell_counts(&self) -> [[usize; 2]; 2] {
        let mut cells = [[0usize; 2]; 2];
        for (&y, &s) in self.target.iter().zip(&self.sensitive) {
            cells[y as usize][s as usize] += 1;
        }
        cells
    }

    /// Materializes the given rows as a new dataset. The subset is
    /// re-validated, so selections that empty a group or class are
    /// rejected.
    pub fn subset(&self, rows: &[usize]) -> Result<Dataset, DataError> {
        let mut features = Vec::with_capacity(rows.len() * self.n_features);
        let mut target = Vec::with_capacity(rows.len());
        let mut sensitive = Vec::with_capacity(rows.len());
        for &i in rows {
            features.extend_from_slice(self.row(i));
            target.push(self.target[i]);
            sensitive.push(self.sensitive[i]);
        }
        Dataset::new(
            features,
            self.n_features,
            target,
            sensitive,
            self.feature_names.clone(),
            self.name.clone(),
        )
    }
}

/// Train/test row indices produced by [`split_70_30`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Deterministic stratified 70:30 split.
///
/// Stratification is over the (target, sensitive) cross so that every
/// populated cell appears in both halves whenever it has at least two
/// rows; this keeps the metric denominators non-zero on both splits.
/// The total train size is round(0.7 * n) up to the cell-bound clamping.
pub fn split_70_30(d: &Dataset, seed: u64) -> Result<SplitIndices, DataError> {
    let n = d.n_samples();
    if n < 10 {
        return Err(DataError::TooFewSamples { min: 10, got: n });
    }

    // Cells in fixed (target, sensitive) order: 00, 01, 10, 11.
    let mut cells: [Vec<usize>; 4] = Default::default();
    for i in 0..n {
        let key = (d.target()[i] as usize) * 2 + d.sensitive()[i] as usize;
        cells[key].push(i);
    }

    let target_train = (0.7 * n as f64).round() as usize;

    // Largest-remainder allocation of train slots across cells.
    let mut take: [usize; 4] = [0; 4];
    let mut remainders: Vec<(usize, f64)> = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        let ideal = 0.7 * cell.len() as f64;
        take[k] = ideal.floor() as usize;
        remainders.push((k, ideal - ideal.floor()));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut leftover = target_train.saturating_sub(take.iter().sum::<usize>());
    for &(k, _) in &remainders {
        if leftover == 0 {
            break;
        }
        if !cells[k].is_empty() {
            take[k] += 1;
            leftover -= 1;
        }
    }

    // Clamp so populated cells land in both halves where possible, then
    // rebalance toward the exact target.
    let bounds = |k: usize| -> (usize, usize) {
        match cells[k].len() {
            0 => (0, 0),
            1 => (1, 1),
            m => (1, m - 1),
        }
    };
    for (k, slot) in take.iter_mut().enumerate() {
        let (lo, hi) = bounds(k);
        *slot = (*slot).clamp(lo, hi);
    }
    loop {
        let total: usize = take.iter().sum();
        match total.cmp(&target_train) {
            Ordering::Equal => break,
            Ordering::Less => {
                let Some(k) = (0..4).find(|&k| take[k] < bounds(k).1) else {
                    break;
                };
                take[k] += 1;
            }
            Ordering::Greater => {
                let Some(k) = (0..4).find(|&k| take[k] > bounds(k).0) else {
                    break;
                };
                take[k] -= 1;
            }
        }
    }

    let mut rng = stream_rng(seed, 0, STREAM_SPLIT);
    let mut train = Vec::with_capacity(target_train);
    let mut test = Vec::with_capacity(n - target_train);
    for (k, cell) in cells.iter().enumerate() {
        let mut shuffled = cell.clone();
        shuffled.shuffle(&mut rng);
        train.extend_from_slice(&shuffled[..take[k]]);
        test.extend_from_slice(&shuffled[take[k]..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// A linear classifier's parameter vector. The last entry is the
/// intercept; the leading entries align with the dataset's feature
/// columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    theta: Vec<f64>,
}

impl ModelParams {
    pub fn new(theta: Vec<f64>) -> Result<Self, DataError> {
        if let Some(index) = theta.iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFiniteParam { index });
        }
        Ok(ModelParams { theta })
    }

    pub fn zeros(n_features: usize) -> Self {
        ModelParams {
            theta: vec![0.0; n_features + 1],
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of feature weights, excluding the intercept.
    pub fn n_features(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.theta[..self.theta.len() - 1]
    }

    pub fn bias(&self) -> f64 {
        self.theta[self.theta.len() - 1]
    }
}

/// The two optimized quantities for one candidate, plus the raw
/// underestimation score for reporting.
///
/// `us_dev = |1 - us_raw|` is the minimized form of the underestimation
/// objective; it induces the same preference order as maximizing
/// `1 / |1 - US|` without the singularity at `US = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValues {
    pub ba: f64,
    pub us_dev: f64,
    pub us_raw: f64,
}

impl ObjectiveValues {
    pub fn new(ba: f64, us_raw: f64) -> Self {
        debug_assert!(
            (0.0..=1.0).contains(&ba),
            "balanced accuracy out of range: {ba}"
        );
        debug_assert!(
            us_raw.is_finite() && us_raw >= 0.0,
            "bad US value: {us_raw}"
        );
        ObjectiveValues {
            ba,
            us_dev: (1.0 - us_raw).abs(),
            us_raw,
        }
    }

    /// Total order by balanced accuracy descending, then underestimation
    /// deviation ascending. Ready for sorting candidate lists before
    /// dominance filtering.
    pub fn cmp_ba_desc_usdev_asc(&self, other: &Self) -> Ordering {
        other
            .ba
            .total_cmp(&self.ba)
            .then(self.us_dev.total_cmp(&other.us_dev))
    }
}

/// One evaluated candidate: parameters, their cached objectives on the
/// split they were trained on, and where in the search they were found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub params: ModelParams,
    pub objectives: ObjectiveValues,
    pub chain_id: u32,
    pub step: u64,
}

/// Knobs for the annealing optimizers.
///
/// Two initial temperatures because the two objectives live on different
/// scales: balanced accuracy in [0, 1], underestimation deviation in
/// [0, inf).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealConfig {
    pub t_ba: f64,
    pub t_us: f64,
    /// Geometric cooling rate applied to both temperatures per epoch.
    pub alpha: f64,
    /// Std-dev of the Gaussian noise added to one coordinate per move.
    pub beta: f64,
    pub lambda_ba: f64,
    pub lambda_us: f64,
    pub n_chains: u32,
    pub iters_per_temp: u32,
    pub t_min: f64,
    pub seed: u64,
}

impl Default for AnnealConfig {
    fn default() -> Self {
        AnnealConfig {
            t_ba: 0.2,
            t_us: 1.0,
            alpha: 0.95,
            beta: 0.5,
            lambda_ba: 1.0,
            lambda_us: 1.0,
            n_chains: 10,
            iters_per_temp: 100,
            t_min: 1e-4,
            seed: 42,
        }
    }
}

impl AnnealConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        if not_positive(self.t_ba) {
            problems.push(format!("t_ba must be > 0, got {}", self.t_ba));
        }
        if not_positive(self.t_us) {
            problems.push(format!("t_us must be > 0, got {}", self.t_us));
        }
        if not_positive(self.alpha) || self.alpha >= 1.0 {
            problems.push(format!("alpha must be in (0,1), got {}", self.alpha));
        }
        // beta = 0 is admitted as the degenerate "no movement" case.
        if is_negative(self.beta) {
            problems.push(format!("beta must be >= 0, got {}", self.beta));
        }
        if is_negative(self.lambda_ba) {
            problems.push(format!("lambda_ba must be >= 0, got {}", self.lambda_ba));
        }
        if is_negative(self.lambda_us) {
            problems.push(format!("lambda_us must be >= 0, got {}", self.lambda_us));
        }
        if self.n_chains < 1 {
            problems.push("n_chains must be >= 1".into());
        }
        if self.iters_per_temp < 1 {
            problems.push("iters_per_temp must be >= 1".into());
        }
        if not_positive(self.t_min) {
            problems.push(format!("t_min must be > 0, got {}", self.t_min));
        }
        if self.t_min.is_nan() || self.t_min >= self.t_ba.min(self.t_us) {
            problems.push(format!(
                "t_min ({}) must be below both initial temperatures ({}, {})",
                self.t_min, self.t_ba, self.t_us
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DataError::InvalidConfig(problems.join("; ")))
        }
    }
}
