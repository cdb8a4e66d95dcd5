//! Fairness and accuracy metrics computed from binary predictions.
//!
//! Everything routes through [`GroupConfusion`], the per-group confusion
//! counts. Degenerate denominators surface as explicit errors rather
//! than infinities so callers (in particular the optimizer) can reject
//! such candidates deterministically.

use thiserror::Error;

use crate::data::ObjectiveValues;

/// Probability clip for log-loss, guarding log(0).
pub const LOG_LOSS_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{what}: expected length {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} has non-binary value {value} at row {row}")]
    NonBinaryValue {
        what: &'static str,
        row: usize,
        value: u8,
    },
    #[error("degenerate denominator: {quantity} is zero")]
    DegenerateDenominator { quantity: &'static str },
    #[error("degenerate class: no actual {class} samples")]
    DegenerateClass { class: &'static str },
}

/// Confusion counts for one sensitive group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCells {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCells {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn predicted_positive(&self) -> usize {
        self.tp + self.fp
    }

    pub fn actual_positive(&self) -> usize {
        self.tp + self.fn_
    }
}

/// Confusion counts split by sensitive group (index 0 = protected
/// minority, 1 = majority).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupConfusion {
    groups: [ConfusionCells; 2],
}

impl GroupConfusion {
    pub fn group(&self, g: u8) -> &ConfusionCells {
        &self.groups[g as usize]
    }

    pub fn total(&self) -> usize {
        self.groups[0].total() + self.groups[1].total()
    }

    /// Pooled counts over both groups as (tp, fp, tn, fn).
    pub fn pooled(&self) -> (usize, usize, usize, usize) {
        let [a, b] = &self.groups;
        (a.tp + b.tp, a.fp + b.fp, a.tn + b.tn, a.fn_ + b.fn_)
    }

    /// Swaps the two group labels. Useful for symmetry checks.
    pub fn swap_groups(&self) -> GroupConfusion {
        GroupConfusion {
            groups: [self.groups[1], self.groups[0]],
        }
    }
}

fn check_binary(what: &'static str, values: &[u8]) -> Result<(), MetricsError> {
    for (row, &value) in values.iter().enumerate() {
        if value > 1 {
            return Err(MetricsError::NonBinaryValue { what, row, value });
        }
    }
    Ok(())
}

/// Counts the per-group confusion cells.
pub fn confusion(y_true: &[u8], y_pred: &[u8], s: &[u8]) -> Result<GroupConfusion, MetricsError> {
    if y_pred.len() != y_true.len() {
        return Err(MetricsError::ShapeMismatch {
            what: "y_pred",
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if s.len() != y_true.len() {
        return Err(MetricsError::ShapeMismatch {
            what: "s",
            expected: y_true.len(),
            got: s.len(),
        });
    }
    check_binary("y_true", y_true)?;
    check_binary("y_pred", y_pred)?;
    check_binary("s", s)?;

    let mut gc = GroupConfusion::default();
    for i in 0..y_true.len() {
        let cell = &mut gc.groups[s[i] as usize];
        match (y_true[i], y_pred[i]) {
            (1, 1) => cell.tp += 1,
            (0, 1) => cell.fp += 1,
            (0, 0) => cell.tn += 1,
            (1, 0) => cell.fn_ += 1,
            _ => unreachable!("binary checked above"),
        }
    }
    Ok(gc)
}

/// Disparate impact: predicted desirable-outcome rate of the minority
/// over that of the majority. Values below 0.8 fail the 80% rule.
pub fn disparate_impact(gc: &GroupConfusion) -> Result<f64, MetricsError> {
    let minority = gc.group(0);
    let majority = gc.group(1);
    if minority.total() == 0 {
        return Err(MetricsError::DegenerateDenominator {
            quantity: "minority group size",
        });
    }
    if majority.total() == 0 {
        return Err(MetricsError::DegenerateDenominator {
            quantity: "majority group size",
        });
    }
    let majority_rate = majority.predicted_positive() as f64 / majority.total() as f64;
    if majority_rate == 0.0 {
        return Err(MetricsError::DegenerateDenominator {
            quantity: "majority predicted-positive rate",
        });
    }
    let minority_rate = minority.predicted_positive() as f64 / minority.total() as f64;
    Ok(minority_rate / majority_rate)
}

/// Underestimation score: predicted desirable-outcome rate of the
/// minority over the rate actually present in the data. Below 1 means
/// the classifier under-predicts desirable outcomes for the minority.
pub fn underestimation_score(gc: &GroupConfusion) -> Result<f64, MetricsError> {
    let minority = gc.group(0);
    if minority.total() == 0 {
        return Err(MetricsError::DegenerateDenominator {
            quantity: "minority group size",
        });
    }
    let actual_rate = minority.actual_positive() as f64 / minority.total() as f64;
    if actual_rate == 0.0 {
        return Err(MetricsError::DegenerateDenominator {
            quantity: "minority actual-positive rate",
        });
    }
    let predicted_rate = minority.predicted_positive() as f64 / minority.total() as f64;
    Ok(predicted_rate / actual_rate)
}

/// Balanced accuracy: mean of the pooled true-positive and true-negative
/// rates.
pub fn balanced_accuracy(gc: &GroupConfusion) -> Result<f64, MetricsError> {
    let (tp, fp, tn, fn_) = gc.pooled();
    if tp + fn_ == 0 {
        return Err(MetricsError::DegenerateClass { class: "positive" });
    }
    if tn + fp == 0 {
        return Err(MetricsError::DegenerateClass { class: "negative" });
    }
    let tpr = tp as f64 / (tp + fn_) as f64;
    let tnr = tn as f64 / (tn + fp) as f64;
    Ok(0.5 * (tpr + tnr))
}

/// Mean negative log-likelihood of binary labels under predicted
/// probabilities, with probabilities clipped to
/// `[LOG_LOSS_EPS, 1 - LOG_LOSS_EPS]`.
pub fn log_loss(y_true: &[u8], p: &[f64]) -> Result<f64, MetricsError> {
    if p.len() != y_true.len() {
        return Err(MetricsError::ShapeMismatch {
            what: "p",
            expected: y_true.len(),
            got: p.len(),
        });
    }
    check_binary("y_true", y_true)?;
    if y_true.is_empty() {
        return Err(MetricsError::ShapeMismatch {
            what: "y_true",
            expected: 1,
            got: 0,
        });
    }
    let mut sum = 0.0;
    for (&y, &prob) in y_true.iter().zip(p) {
        let prob = prob.clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS);
        sum += if y == 1 {
            -prob.ln()
        } else {
            -(1.0 - prob).ln()
        };
    }
    Ok(sum / y_true.len() as f64)
}

/// Bundles the two optimization objectives for one prediction vector:
/// balanced accuracy and the underestimation deviation.
pub fn objectives(y_true: &[u8], y_pred: &[u8], s: &[u8]) -> Result<ObjectiveValues, MetricsError> {
    let gc = confusion(y_true, y_pred, s)?;
    let ba = balanced_accuracy(&gc)?;
    let us_raw = underestimation_score(&gc)?;
    Ok(ObjectiveValues::new(ba, us_raw))
}
