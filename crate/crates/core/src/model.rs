//! Logistic predictor: probabilities, thresholded labels and the
//! analytic log-loss gradient used by the gradient-descent baseline.
//!
//! The `_parts` functions work on a raw row-major matrix; the plain
//! variants are conveniences over [`Dataset`].

use thiserror::Error;

use crate::data::{Dataset, ModelParams};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("parameter vector has {params} weights + bias but data has {features} features")]
    DimensionMismatch { params: usize, features: usize },
    #[error("matrix of {len} values is not divisible into rows of {n_features}")]
    RaggedMatrix { len: usize, n_features: usize },
    #[error("labels length {labels} != row count {rows}")]
    LabelMismatch { labels: usize, rows: usize },
    #[error("threshold must lie in (0,1), got {0}")]
    BadThreshold(f64),
}

/// Probabilities with their thresholded labels.
///
/// Invariant: `labels[i] = 1` exactly when `probs[i] >= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionBatch {
    pub probs: Vec<f64>,
    pub labels: Vec<u8>,
    pub threshold: f64,
}

impl PredictionBatch {
    pub fn from_probs(probs: Vec<f64>, threshold: f64) -> Self {
        let labels = probs
            .iter()
            .map(|&p| if p >= threshold { 1 } else { 0 })
            .collect();
        PredictionBatch {
            probs,
            labels,
            threshold,
        }
    }
}

/// Overflow-safe sigmoid. Exact for z = 0; monotone over the full f64
/// range (annealing can push scores far outside [-30, 30]).
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_matrix(
    params: &ModelParams,
    features: &[f64],
    n_features: usize,
) -> Result<usize, ModelError> {
    if params.n_features() != n_features {
        return Err(ModelError::DimensionMismatch {
            params: params.n_features(),
            features: n_features,
        });
    }
    if n_features == 0 || !features.len().is_multiple_of(n_features) {
        return Err(ModelError::RaggedMatrix {
            len: features.len(),
            n_features,
        });
    }
    Ok(features.len() / n_features)
}

fn score(params: &ModelParams, row: &[f64]) -> f64 {
    let mut z = params.bias();
    for (w, x) in params.weights().iter().zip(row) {
        z += w * x;
    }
    z
}

/// P(Y = 1 | x) for every row of a raw row-major matrix.
pub fn predict_proba_parts(
    params: &ModelParams,
    features: &[f64],
    n_features: usize,
) -> Result<Vec<f64>, ModelError> {
    check_matrix(params, features, n_features)?;
    Ok(features
        .chunks_exact(n_features)
        .map(|row| sigmoid(score(params, row)))
        .collect())
}

/// P(Y = 1 | x) for every dataset row.
pub fn predict_proba(params: &ModelParams, d: &Dataset) -> Result<Vec<f64>, ModelError> {
    let mut probs = Vec::with_capacity(d.n_samples());
    if params.n_features() != d.n_features() {
        return Err(ModelError::DimensionMismatch {
            params: params.n_features(),
            features: d.n_features(),
        });
    }
    for row in d.rows() {
        probs.push(sigmoid(score(params, row)));
    }
    Ok(probs)
}

/// Thresholded binary predictions (threshold-inclusive: probability
/// exactly at the threshold predicts 1).
pub fn predict(params: &ModelParams, d: &Dataset, threshold: f64) -> Result<Vec<u8>, ModelError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(ModelError::BadThreshold(threshold));
    }
    let probs = predict_proba(params, d)?;
    Ok(PredictionBatch::from_probs(probs, threshold).labels)
}

/// Gradient of the mean log-loss with respect to theta, bias term last:
/// (1/n) * X_aug^T (p - y).
pub fn log_loss_gradient_parts(
    params: &ModelParams,
    features: &[f64],
    n_features: usize,
    y_true: &[u8],
) -> Result<Vec<f64>, ModelError> {
    let rows = check_matrix(params, features, n_features)?;
    if y_true.len() != rows {
        return Err(ModelError::LabelMismatch {
            labels: y_true.len(),
            rows,
        });
    }
    let mut grad = vec![0.0; params.theta().len()];
    for (row, &y) in features.chunks_exact(n_features).zip(y_true) {
        let residual = sigmoid(score(params, row)) - y as f64;
        for (g, x) in grad.iter_mut().zip(row) {
            *g += residual * x;
        }
        *grad.last_mut().unwrap() += residual;
    }
    for g in &mut grad {
        *g /= rows as f64;
    }
    Ok(grad)
}

/// Gradient of the mean log-loss on a dataset.
pub fn log_loss_gradient(params: &ModelParams, d: &Dataset) -> Result<Vec<f64>, ModelError> {
    let features: Vec<f64> = d.rows().flatten().copied().collect();
    log_loss_gradient_parts(params, &features, d.n_features(), d.target())
}
