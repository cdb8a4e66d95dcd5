//! Dataset production: the parameterized synthetic generator, CSV
//! loading with per-column role mappings, standardization, and the
//! preset files describing the three evaluation datasets.
//!
//! CSV conventions: comma-separated UTF-8, first non-comment row is the
//! header, `#` starts a comment line, quoted fields allowed, `?` and
//! empty strings are missing values. Rows with missing or unparseable
//! cells in used columns are dropped and counted.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{is_negative, not_positive, DataError, Dataset};
use crate::rng::{stream_rng, STREAM_SYNTHETIC};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("column '{0}' not found in CSV header")]
    MissingColumn(String),
    #[error("unmappable value '{value}' in column '{column}' at data row {row}")]
    UnmappableValue {
        column: String,
        row: usize,
        value: String,
    },
    #[error("no rows left after filtering (read {read}, dropped {dropped})")]
    EmptyAfterFiltering { read: usize, dropped: usize },
    #[error("bad preset: {0}")]
    BadPreset(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parameters of the synthetic generator. The defaults produce the
/// 5000 x 3 evaluation shape with a 50% minority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_samples: usize,
    pub minority_fraction: f64,
    /// Gap injected between the groups' proxy-score distributions.
    pub bias_strength: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_samples: 5000,
            minority_fraction: 0.5,
            bias_strength: 2.0,
            noise_sd: 1.0,
            seed: 13,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        if self.n_samples < 10 {
            problems.push(format!("n_samples must be >= 10, got {}", self.n_samples));
        }
        if not_positive(self.minority_fraction) || self.minority_fraction >= 1.0 {
            problems.push(format!(
                "minority_fraction must be in (0,1), got {}",
                self.minority_fraction
            ));
        }
        if is_negative(self.bias_strength) {
            problems.push(format!(
                "bias_strength must be >= 0, got {}",
                self.bias_strength
            ));
        }
        if not_positive(self.noise_sd) {
            problems.push(format!("noise_sd must be > 0, got {}", self.noise_sd));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DataError::InvalidConfig(problems.join("; ")))
        }
    }
}

/// Generates the synthetic dataset.
///
/// Columns: `merit` (a group-blind latent score), `proxy` (the group-
/// shifted score plus noise) and `group` (the sensitive indicator,
/// 1 = majority). Both the proxy and the label score carry the same
/// `bias_strength * (s - 1/2)` shift, so the minority's desirable-
/// outcome base rate sits below the majority's (the negative-legacy
/// signal) while `merit` alone carries no group information. With
/// `bias_strength = 0` the two groups are indistinguishable.
///
/// Accuracy-driven classifiers thresholded at 0.5 under-predict
/// desirable outcomes for the low-base-rate minority here: label noise
/// pulls the actual rate toward 1/2 but not the rate of confident
/// predictions, which is what the underestimation objective corrects.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Dataset, IngestError> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0, STREAM_SYNTHETIC);
    let n = cfg.n_samples;
    let mut features = Vec::with_capacity(n * 3);
    let mut target = Vec::with_capacity(n);
    let mut sensitive = Vec::with_capacity(n);
    for _ in 0..n {
        let s: u8 = if rng.random::<f64>() < 1.0 - cfg.minority_fraction {
            1
        } else {
            0
        };
        let merit: f64 = rng.sample(StandardNormal);
        let proxy_noise: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.noise_sd;
        let label_noise: f64 = rng.sample::<f64, _>(StandardNormal) * cfg.noise_sd;
        let shift = cfg.bias_strength * (s as f64 - 0.5);
        let proxy = merit + shift + proxy_noise;
        features.extend_from_slice(&[merit, proxy, s as f64]);
        target.push(u8::from(merit + shift + label_noise > 0.0));
        sensitive.push(s);
    }
    Ok(Dataset::new(
        features,
        3,
        target,
        sensitive,
        vec!["merit".into(), "proxy".into(), "group".into()],
        "synthetic",
    )?)
}

/// What to do with one CSV column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ColumnRole {
    /// Parse as a real-valued feature.
    Feature,
    /// Binary indicator feature: 1 when the raw value equals `one`.
    BinaryFeature { one: String },
    /// The target column. `positive` maps to 1; `negative`, when given,
    /// maps to 0 and any other value is an error. Without `negative`
    /// every non-positive value maps to 0.
    Target {
        positive: String,
        negative: Option<String>,
    },
    /// The sensitive column. Same matching rules with
    /// `majority` -> 1 and `minority` -> 0.
    Sensitive {
        majority: String,
        minority: Option<String>,
    },
    /// Explicitly ignored (unlisted columns are ignored too).
    Drop,
}

/// One column mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub csv_column: String,
    pub role: ColumnRole,
}

/// Full mapping from a CSV layout to a [`Dataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub columns: Vec<ColumnSpec>,
    /// When true the binarized sensitive column is appended as the last
    /// feature, matching the evaluation protocol where the sensitive
    /// attribute stays in the model's inputs.
    pub sensitive_as_feature: bool,
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<(), IngestError> {
        let targets = self
            .columns
            .iter()
            .filter(|c| matches!(c.role, ColumnRole::Target { .. }))
            .count();
        let sensitives = self
            .columns
            .iter()
            .filter(|c| matches!(c.role, ColumnRole::Sensitive { .. }))
            .count();
        if targets != 1 {
            return Err(IngestError::BadPreset(format!(
                "expected exactly one target column, found {targets}"
            )));
        }
        if sensitives != 1 {
            return Err(IngestError::BadPreset(format!(
                "expected exactly one sensitive column, found {sensitives}"
            )));
        }
        Ok(())
    }
}

/// Loader result: the dataset plus how many raw rows were read and how
/// many were dropped for missing/unparseable used cells.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub dataset: Dataset,
    pub rows_read: usize,
    pub rows_dropped: usize,
}

fn is_missing(raw: &str) -> bool {
    raw.is_empty() || raw == "?"
}

/// Match key for target/sensitive values: surrounding whitespace and a
/// single trailing period are ignored (the canonical Census Income test
/// file writes labels as ">50K.").
fn normalize_label(raw: &str) -> &str {
    let t = raw.trim();
    t.strip_suffix('.').unwrap_or(t)
}

fn map_binary(
    raw: &str,
    one: &str,
    zero: Option<&str>,
    column: &str,
    row: usize,
) -> Result<u8, IngestError> {
    let v = normalize_label(raw);
    if v == normalize_label(one) {
        return Ok(1);
    }
    match zero {
        None => Ok(0),
        Some(z) if v == normalize_label(z) => Ok(0),
        Some(_) => Err(IngestError::UnmappableValue {
            column: column.to_string(),
            row,
            value: raw.to_string(),
        }),
    }
}

/// Loads a CSV through a [`DatasetSpec`].
pub fn load_csv(path: &Path, spec: &DatasetSpec) -> Result<LoadOutcome, IngestError> {
    let file = fs::File::open(path)?;
    load_csv_reader(file, spec)
}

/// Same as [`load_csv`] for any reader (used by tests and round-trips).
pub fn load_csv_reader<R: std::io::Read>(
    reader: R,
    spec: &DatasetSpec,
) -> Result<LoadOutcome, IngestError> {
    spec.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers()?.clone();
    let col_index = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };

    // Resolve the used columns in spec order.
    struct Used {
        index: usize,
        spec: ColumnSpec,
    }
    let mut used: Vec<Used> = Vec::new();
    for c in &spec.columns {
        if matches!(c.role, ColumnRole::Drop) {
            // Verify the column exists even if dropped.
            col_index(&c.csv_column)?;
            continue;
        }
        used.push(Used {
            index: col_index(&c.csv_column)?,
            spec: c.clone(),
        });
    }

    let mut feature_names: Vec<String> = used
        .iter()
        .filter(|u| {
            matches!(
                u.spec.role,
                ColumnRole::Feature | ColumnRole::BinaryFeature { .. }
            )
        })
        .map(|u| u.spec.csv_column.clone())
        .collect();
    let sensitive_name = used
        .iter()
        .find(|u| matches!(u.spec.role, ColumnRole::Sensitive { .. }))
        .map(|u| u.spec.csv_column.clone())
        .expect("validated above");
    if spec.sensitive_as_feature {
        feature_names.push(sensitive_name);
    }
    let n_features = feature_names.len();

    let mut features = Vec::new();
    let mut target = Vec::new();
    let mut sensitive = Vec::new();
    let mut rows_read = 0usize;
    let mut rows_dropped = 0usize;

    'rows: for (row_idx, record) in rdr.records().enumerate() {
        let record = record?;
        rows_read += 1;
        let mut row_features = Vec::with_capacity(n_features);
        let mut row_target = None;
        let mut row_sensitive = None;
        for u in &used {
            let raw = record.get(u.index).unwrap_or("");
            if is_missing(raw) {
                rows_dropped += 1;
                continue 'rows;
            }
            match &u.spec.role {
                ColumnRole::Feature => match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => row_features.push(v),
                    _ => {
                        rows_dropped += 1;
                        continue 'rows;
                    }
                },
                ColumnRole::BinaryFeature { one } => {
                    let v = map_binary(raw, one, None, &u.spec.csv_column, row_idx)?;
                    row_features.push(v as f64);
                }
                ColumnRole::Target { positive, negative } => {
                    row_target = Some(map_binary(
                        raw,
                        positive,
                        negative.as_deref(),
                        &u.spec.csv_column,
                        row_idx,
                    )?);
                }
                ColumnRole::Sensitive { majority, minority } => {
                    row_sensitive = Some(map_binary(
                        raw,
                        majority,
                        minority.as_deref(),
                        &u.spec.csv_column,
                        row_idx,
                    )?);
                }
                ColumnRole::Drop => unreachable!("drop columns are filtered out"),
            }
        }
        let s = row_sensitive.expect("sensitive column present");
        if spec.sensitive_as_feature {
            row_features.push(s as f64);
        }
        features.extend_from_slice(&row_features);
        target.push(row_target.expect("target column present"));
        sensitive.push(s);
    }

    if target.is_empty() {
        return Err(IngestError::EmptyAfterFiltering {
            read: rows_read,
            dropped: rows_dropped,
        });
    }
    let dataset = Dataset::new(
        features,
        n_features,
        target,
        sensitive,
        feature_names,
        spec.name.clone(),
    )?;
    Ok(LoadOutcome {
        dataset,
        rows_read,
        rows_dropped,
    })
}

/// Serializes a dataset in the loadable CSV format: all feature columns,
/// then `target`, then `sensitive`, with an optional leading comment.
/// Fields are quoted as needed. Two format limits: surrounding
/// whitespace in column names is not significant (the loader trims it),
/// and feature columns named `target` or `sensitive` would make the
/// header ambiguous on reload, so they are rejected.
pub fn to_csv(d: &Dataset, comment: Option<&str>) -> Result<String, IngestError> {
    for name in d.feature_names() {
        if name == "target" || name == "sensitive" {
            return Err(IngestError::BadPreset(format!(
                "feature column '{name}' collides with a reserved output column"
            )));
        }
    }
    let mut out = String::new();
    if let Some(comment) = comment {
        for line in comment.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = d.feature_names().to_vec();
    header.push("target".into());
    header.push("sensitive".into());
    writer.write_record(&header).expect("in-memory write");
    for i in 0..d.n_samples() {
        let mut cells: Vec<String> = d.row(i).iter().map(|v| format!("{v}")).collect();
        cells.push(d.target()[i].to_string());
        cells.push(d.sensitive()[i].to_string());
        writer.write_record(&cells).expect("in-memory write");
    }
    let body = writer.into_inner().expect("in-memory flush");
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

/// The spec that reads [`to_csv`] output back, byte-for-byte faithful.
pub fn reload_spec(d: &Dataset) -> DatasetSpec {
    let mut columns: Vec<ColumnSpec> = d
        .feature_names()
        .iter()
        .map(|n| ColumnSpec {
            csv_column: n.clone(),
            role: ColumnRole::Feature,
        })
        .collect();
    columns.push(ColumnSpec {
        csv_column: "target".into(),
        role: ColumnRole::Target {
            positive: "1".into(),
            negative: Some("0".into()),
        },
    });
    columns.push(ColumnSpec {
        csv_column: "sensitive".into(),
        role: ColumnRole::Sensitive {
            majority: "1".into(),
            minority: Some("0".into()),
        },
    });
    DatasetSpec {
        name: d.name().to_string(),
        columns,
        sensitive_as_feature: false,
    }
}

/// How one feature column was scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub kind: ScalingKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalingKind {
    /// (x - mean) / sd applied to all rows with train statistics.
    Standardized,
    /// Binary {0,1} column left untouched (covers the sensitive
    /// indicator and other binarized columns).
    Binary,
    /// Zero train variance: passed through with a warning.
    ConstantPassthrough,
}

/// Computes train-row statistics and standardizes the continuous
/// feature columns of the full dataset. Binary columns and zero-variance
/// columns pass through untouched (the latter flagged).
pub fn standardize(
    d: &Dataset,
    train_idx: &[usize],
) -> Result<(Dataset, Vec<FeatureScaling>), IngestError> {
    assert!(!train_idx.is_empty(), "train index set is empty");
    let mut table = Vec::with_capacity(d.n_features());
    for j in 0..d.n_features() {
        let name = d.feature_names()[j].clone();
        let train_vals: Vec<f64> = train_idx.iter().map(|&i| d.row(i)[j]).collect();
        let binary = train_vals.iter().all(|&v| v == 0.0 || v == 1.0);
        if binary {
            table.push(FeatureScaling {
                name,
                mean: 0.0,
                sd: 1.0,
                kind: ScalingKind::Binary,
            });
            continue;
        }
        let n = train_vals.len() as f64;
        let mean = train_vals.iter().sum::<f64>() / n;
        let var = train_vals
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / n;
        let sd = var.sqrt();
        if sd == 0.0 {
            table.push(FeatureScaling {
                name,
                mean,
                sd: 1.0,
                kind: ScalingKind::ConstantPassthrough,
            });
        } else {
            table.push(FeatureScaling {
                name,
                mean,
                sd,
                kind: ScalingKind::Standardized,
            });
        }
    }
    Ok((apply_scaling(d, &table)?, table))
}

/// Applies a scaling table to every row of a dataset.
pub fn apply_scaling(d: &Dataset, table: &[FeatureScaling]) -> Result<Dataset, IngestError> {
    assert_eq!(table.len(), d.n_features(), "scaling table width mismatch");
    let mut features = Vec::with_capacity(d.n_samples() * d.n_features());
    for row in d.rows() {
        for (j, &v) in row.iter().enumerate() {
            let f = &table[j];
            features.push(match f.kind {
                ScalingKind::Standardized => (v - f.mean) / f.sd,
                _ => v,
            });
        }
    }
    Ok(Dataset::new(
        features,
        d.n_features(),
        d.target().to_vec(),
        d.sensitive().to_vec(),
        d.feature_names().to_vec(),
        d.name().to_string(),
    )?)
}

// ---------------------------------------------------------------------
// Preset files
// ---------------------------------------------------------------------

pub const ADULT_PRESET: &str = include_str!("../../../presets/adult.preset");
pub const RECIDIVISM_PRESET: &str = include_str!("../../../presets/recidivism.preset");
pub const SYNTHETIC_PRESET: &str = include_str!("../../../presets/synthetic.preset");

/// Returns the built-in preset text for `adult`, `recidivism` or
/// `synthetic`.
pub fn builtin_preset(name: &str) -> Option<&'static str> {
    match name {
        "adult" => Some(ADULT_PRESET),
        "recidivism" => Some(RECIDIVISM_PRESET),
        "synthetic" => Some(SYNTHETIC_PRESET),
        _ => None,
    }
}

/// Parses the preset key-value format.
///
/// Recognized keys: `name`, `feature`, `binary_feature` (as
/// `column:one_value`), `target`, `positive_value`, `negative_value`,
/// `sensitive`, `majority_value`, `minority_value`, `drop`,
/// `sensitive_as_feature`. Unknown keys are errors.
pub fn parse_preset(text: &str) -> Result<DatasetSpec, IngestError> {
    let mut name: Option<String> = None;
    let mut features: Vec<(String, Option<String>)> = Vec::new();
    let mut drops: Vec<String> = Vec::new();
    let mut target_col: Option<String> = None;
    let mut positive: Option<String> = None;
    let mut negative: Option<String> = None;
    let mut sensitive_col: Option<String> = None;
    let mut majority: Option<String> = None;
    let mut minority: Option<String> = None;
    let mut sensitive_as_feature = true;

    let set_once = |slot: &mut Option<String>, key: &str, value: &str| {
        if slot.is_some() {
            return Err(IngestError::BadPreset(format!("duplicate key '{key}'")));
        }
        *slot = Some(value.to_string());
        Ok(())
    };

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            IngestError::BadPreset(format!("line {}: expected 'key = value'", lineno + 1))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "name" => set_once(&mut name, key, value)?,
            "feature" => features.push((value.to_string(), None)),
            "binary_feature" => {
                let (col, one) = value.split_once(':').ok_or_else(|| {
                    IngestError::BadPreset(format!(
                        "line {}: binary_feature needs 'column:one_value'",
                        lineno + 1
                    ))
                })?;
                features.push((col.trim().to_string(), Some(one.trim().to_string())));
            }
            "target" => set_once(&mut target_col, key, value)?,
            "positive_value" => set_once(&mut positive, key, value)?,
            "negative_value" => set_once(&mut negative, key, value)?,
            "sensitive" => set_once(&mut sensitive_col, key, value)?,
            "majority_value" => set_once(&mut majority, key, value)?,
            "minority_value" => set_once(&mut minority, key, value)?,
            "drop" => drops.push(value.to_string()),
            "sensitive_as_feature" => {
                sensitive_as_feature = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(IngestError::BadPreset(format!(
                            "line {}: sensitive_as_feature must be true/false, got '{other}'",
                            lineno + 1
                        )))
                    }
                };
            }
            other => {
                return Err(IngestError::BadPreset(format!(
                    "line {}: unknown key '{other}'",
                    lineno + 1
                )))
            }
        }
    }

    let name = name.ok_or_else(|| IngestError::BadPreset("missing 'name'".into()))?;
    let target_col = target_col.ok_or_else(|| IngestError::BadPreset("missing 'target'".into()))?;
    let positive =
        positive.ok_or_else(|| IngestError::BadPreset("missing 'positive_value'".into()))?;
    let sensitive_col =
        sensitive_col.ok_or_else(|| IngestError::BadPreset("missing 'sensitive'".into()))?;
    let majority =
        majority.ok_or_else(|| IngestError::BadPreset("missing 'majority_value'".into()))?;

    let mut columns: Vec<ColumnSpec> = features
        .into_iter()
        .map(|(col, one)| ColumnSpec {
            csv_column: col,
            role: match one {
                None => ColumnRole::Feature,
                Some(one) => ColumnRole::BinaryFeature { one },
            },
        })
        .collect();
    columns.push(ColumnSpec {
        csv_column: target_col,
        role: ColumnRole::Target { positive, negative },
    });
    columns.push(ColumnSpec {
        csv_column: sensitive_col,
        role: ColumnRole::Sensitive { majority, minority },
    });
    columns.extend(drops.into_iter().map(|col| ColumnSpec {
        csv_column: col,
        role: ColumnRole::Drop,
    }));

    let spec = DatasetSpec {
        name,
        columns,
        sensitive_as_feature,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{run_gd_logloss, SgdConfig};
    use crate::data::split_70_30;
    use crate::metrics::{confusion, disparate_impact};
    use crate::model::predict;

    #[test]
    fn synthetic_default_shape() {
        let d = generate_synthetic(&SyntheticConfig::default()).unwrap();
        assert_eq!(d.n_samples(), 5000);
        assert_eq!(d.n_features(), 3);
        let share = d.minority_share();
        assert!((share - 0.5).abs() <= 0.02, "minority share {share}");
    }

    #[test]
    fn synthetic_is_deterministic() {
        let cfg = SyntheticConfig {
            n_samples: 200,
            ..SyntheticConfig::default()
        };
        assert_eq!(
            generate_synthetic(&cfg).unwrap(),
            generate_synthetic(&cfg).unwrap()
        );
        let other = SyntheticConfig {
            seed: cfg.seed + 1,
            ..cfg.clone()
        };
        assert_ne!(
            generate_synthetic(&cfg).unwrap(),
            generate_synthetic(&other).unwrap()
        );
    }

    #[test]
    fn synthetic_minority_share_concentrates() {
        let cfg = SyntheticConfig {
            n_samples: 50_000,
            minority_fraction: 0.3,
            ..SyntheticConfig::default()
        };
        let d = generate_synthetic(&cfg).unwrap();
        assert!((d.minority_share() - 0.3).abs() <= 0.01);
    }

    #[test]
    fn synthetic_without_bias_yields_parity_for_gd() {
        let cfg = SyntheticConfig {
            n_samples: 4000,
            bias_strength: 0.0,
            ..SyntheticConfig::default()
        };
        let d = generate_synthetic(&cfg).unwrap();
        let split = split_70_30(&d, 7).unwrap();
        let (scaled, _) = standardize(&d, &split.train).unwrap();
        let train = scaled.subset(&split.train).unwrap();
        let sol = run_gd_logloss(&train, &SgdConfig::default()).unwrap();
        let preds = predict(&sol.params, &train, 0.5).unwrap();
        let gc = confusion(train.target(), &preds, train.sensitive()).unwrap();
        let di = disparate_impact(&gc).unwrap();
        assert!((0.9..=1.1).contains(&di), "DI = {di}");
    }

    const FIXTURE: &str = "\
age,job,income,sex
39,clerk,>50K,Male
20,nurse,<=50K,Female
61,clerk,<=50K,Male
";

    fn fixture_spec() -> DatasetSpec {
        DatasetSpec {
            name: "fixture".into(),
            columns: vec![
                ColumnSpec {
                    csv_column: "age".into(),
                    role: ColumnRole::Feature,
                },
                ColumnSpec {
                    csv_column: "income".into(),
                    role: ColumnRole::Target {
                        positive: ">50K".into(),
                        negative: Some("<=50K".into()),
                    },
                },
                ColumnSpec {
                    csv_column: "sex".into(),
                    role: ColumnRole::Sensitive {
                        majority: "Male".into(),
                        minority: Some("Female".into()),
                    },
                },
            ],
            sensitive_as_feature: true,
        }
    }

    #[test]
    fn loads_hand_written_fixture_exactly() {
        let out = load_csv_reader(FIXTURE.as_bytes(), &fixture_spec()).unwrap();
        let d = &out.dataset;
        assert_eq!(out.rows_read, 3);
        assert_eq!(out.rows_dropped, 0);
        assert_eq!(d.n_features(), 2);
        assert_eq!(d.feature_names(), &["age".to_string(), "sex".to_string()]);
        assert_eq!(d.row(0), &[39.0, 1.0]);
        assert_eq!(d.row(1), &[20.0, 0.0]);
        assert_eq!(d.row(2), &[61.0, 1.0]);
        assert_eq!(d.target(), &[1, 0, 0]);
        assert_eq!(d.sensitive(), &[1, 0, 1]);
    }

    #[test]
    fn trailing_period_labels_match() {
        let csv =
            "age,income,sex\n30,>50K.,Male\n31,<=50K.,Female\n32,<=50K,Female\n40,>50K,Male\n";
        let out = load_csv_reader(csv.as_bytes(), &fixture_spec()).unwrap();
        assert_eq!(out.dataset.target(), &[1, 0, 0, 1]);
    }

    #[test]
    fn missing_cells_drop_rows_with_count() {
        let csv = "age,income,sex\n30,>50K,Male\n?,<=50K,Female\n33,,Female\n41,<=50K,Female\n";
        let out = load_csv_reader(csv.as_bytes(), &fixture_spec()).unwrap();
        assert_eq!(out.rows_read, 4);
        assert_eq!(out.rows_dropped, 2);
        assert_eq!(out.dataset.n_samples(), 2);
    }

    #[test]
    fn all_rows_filtered_is_error() {
        let csv = "age,income,sex\n?,>50K,Male\n,<=50K,Female\nnot-a-number,<=50K,Female\n";
        match load_csv_reader(csv.as_bytes(), &fixture_spec()) {
            Err(IngestError::EmptyAfterFiltering { read, dropped }) => {
                assert_eq!(read, 3);
                assert_eq!(dropped, 3);
            }
            other => panic!("expected EmptyAfterFiltering, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_is_error() {
        let csv = "age,salary,sex\n30,>50K,Male\n";
        match load_csv_reader(csv.as_bytes(), &fixture_spec()) {
            Err(IngestError::MissingColumn(col)) => assert_eq!(col, "income"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn unmappable_target_value_is_error() {
        let csv = "age,income,sex\n30,50K-ish,Male\n31,<=50K,Female\n";
        match load_csv_reader(csv.as_bytes(), &fixture_spec()) {
            Err(IngestError::UnmappableValue { column, value, .. }) => {
                assert_eq!(column, "income");
                assert_eq!(value, "50K-ish");
            }
            other => panic!("expected UnmappableValue, got {other:?}"),
        }
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let d = generate_synthetic(&SyntheticConfig {
            n_samples: 120,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let text = to_csv(&d, Some("round trip")).unwrap();
        let reloaded = load_csv_reader(text.as_bytes(), &reload_spec(&d)).unwrap();
        assert_eq!(reloaded.dataset, d);
        // Second trip is byte-stable.
        let text2 = to_csv(&reloaded.dataset, Some("round trip")).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn fixture_load_serialize_load_is_idempotent() {
        let out = load_csv_reader(FIXTURE.as_bytes(), &fixture_spec()).unwrap();
        let text = to_csv(&out.dataset, None).unwrap();
        let again = load_csv_reader(text.as_bytes(), &reload_spec(&out.dataset)).unwrap();
        assert_eq!(again.dataset, out.dataset);
        let text2 = to_csv(&again.dataset, None).unwrap();
        assert_eq!(text, text2);
    }

    #[test]
    fn to_csv_rejects_reserved_feature_names() {
        let d = Dataset::new(
            vec![0.0, 1.0, 2.0, 3.0],
            1,
            vec![1, 0, 1, 0],
            vec![1, 1, 0, 0],
            vec!["target".into()],
            "clash",
        )
        .unwrap();
        assert!(matches!(to_csv(&d, None), Err(IngestError::BadPreset(_))));
    }

    proptest::proptest! {
        // Serialize -> reload is the identity for arbitrary datasets,
        // including awkward feature names and extreme values.
        #[test]
        fn csv_round_trip_property(
            rows in proptest::collection::vec(
                (proptest::collection::vec(-1e12f64..1e12, 2), 0..2u8, 0..2u8),
                8..40,
            ),
            name_salt in "[a-z,\"]{0,8}",
        ) {
            let n = rows.len();
            let target: Vec<u8> = (0..n).map(|i| if i < 2 { (i % 2) as u8 } else { rows[i].1 }).collect();
            let sensitive: Vec<u8> = (0..n).map(|i| if i < 4 { ((i / 2) % 2) as u8 } else { rows[i].2 }).collect();
            let features: Vec<f64> = rows.iter().flat_map(|r| r.0.iter().copied()).collect();
            let names = vec![format!("a{name_salt}"), format!("b{name_salt}")];
            let d = Dataset::new(features, 2, target, sensitive, names, "prop").unwrap();
            let text = to_csv(&d, Some("prop")).unwrap();
            let reloaded = load_csv_reader(text.as_bytes(), &reload_spec(&d)).unwrap();
            proptest::prop_assert_eq!(reloaded.dataset, d);
        }
    }

    #[test]
    fn standardize_scales_train_to_unit_moments() {
        let d = generate_synthetic(&SyntheticConfig {
            n_samples: 300,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let split = split_70_30(&d, 3).unwrap();
        let (scaled, table) = standardize(&d, &split.train).unwrap();
        for (j, f) in table.iter().enumerate() {
            if f.kind != ScalingKind::Standardized {
                continue;
            }
            let vals: Vec<f64> = split.train.iter().map(|&i| scaled.row(i)[j]).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-10, "column {j} mean {mean}");
            assert!((sd - 1.0).abs() < 1e-10, "column {j} sd {sd}");
        }
        // The binary group column is untouched.
        assert_eq!(table[2].kind, ScalingKind::Binary);
        for i in 0..d.n_samples() {
            assert_eq!(scaled.row(i)[2], d.row(i)[2]);
        }
    }

    #[test]
    fn standardize_passes_constant_feature_through() {
        let d = Dataset::new(
            vec![5.0, 1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0, 5.0, 5.0, 6.0],
            2,
            vec![1, 0, 1, 0, 1, 0],
            vec![0, 0, 0, 1, 1, 1],
            vec!["const".into(), "x".into()],
            "const-test",
        )
        .unwrap();
        let idx: Vec<usize> = (0..6).collect();
        let (scaled, table) = standardize(&d, &idx).unwrap();
        assert_eq!(table[0].kind, ScalingKind::ConstantPassthrough);
        for i in 0..6 {
            assert_eq!(scaled.row(i)[0], 5.0);
        }
    }

    #[test]
    fn test_rows_use_train_statistics() {
        // 10-row fixture, train = first 7 rows of column x.
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 100.0, -3.0, 0.5];
        let features: Vec<f64> = xs.to_vec();
        let d = Dataset::new(
            features,
            1,
            vec![1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
            vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1],
            vec!["x".into()],
            "fixture",
        )
        .unwrap();
        let train: Vec<usize> = (0..7).collect();
        let (scaled, table) = standardize(&d, &train).unwrap();
        let mean = 4.0; // (1..=7) mean
        let sd = (xs[..7].iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 7.0).sqrt();
        assert!((table[0].mean - mean).abs() < 1e-12);
        assert!((table[0].sd - sd).abs() < 1e-12);
        // Spot-check a test row by hand.
        assert!((scaled.row(7)[0] - (100.0 - mean) / sd).abs() < 1e-12);
    }

    #[test]
    fn scaling_composition_is_affine() {
        let d = generate_synthetic(&SyntheticConfig {
            n_samples: 100,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let idx: Vec<usize> = (0..70).collect();
        let (_, table) = standardize(&d, &idx).unwrap();
        let twice = apply_scaling(&apply_scaling(&d, &table).unwrap(), &table).unwrap();
        // Composed parameters: x -> ((x - m)/s - m)/s = (x - (m + s*m)) / s^2.
        let composed: Vec<FeatureScaling> = table
            .iter()
            .map(|f| match f.kind {
                ScalingKind::Standardized => FeatureScaling {
                    name: f.name.clone(),
                    mean: f.mean + f.sd * f.mean,
                    sd: f.sd * f.sd,
                    kind: ScalingKind::Standardized,
                },
                _ => f.clone(),
            })
            .collect();
        let once_composed = apply_scaling(&d, &composed).unwrap();
        for i in 0..d.n_samples() {
            for j in 0..d.n_features() {
                assert!((twice.row(i)[j] - once_composed.row(i)[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn builtin_presets_parse_and_validate() {
        for name in ["adult", "recidivism", "synthetic"] {
            let spec = parse_preset(builtin_preset(name).unwrap()).unwrap();
            assert_eq!(spec.name, name);
        }
        assert!(builtin_preset("nope").is_none());
    }

    #[test]
    fn preset_parser_rejects_unknown_keys() {
        let text = "name = x\ntarget = t\npositive_value = 1\nsensitive = s\nmajority_value = 1\nfrobnicate = yes\n";
        match parse_preset(text) {
            Err(IngestError::BadPreset(msg)) => assert!(msg.contains("frobnicate")),
            other => panic!("expected BadPreset, got {other:?}"),
        }
    }

    #[test]
    fn preset_parser_requires_target_and_sensitive() {
        let text = "name = x\nfeature = a\n";
        assert!(matches!(parse_preset(text), Err(IngestError::BadPreset(_))));
    }
}
