//! Comparison optimizers: single-objective simulated annealing on
//! balanced accuracy, and full-batch gradient descent on log-loss.

use rand::Rng;
use thiserror::Error;

use crate::data::{
    is_negative, not_positive, AnnealConfig, DataError, Dataset, ModelParams, Solution,
};
use crate::metrics::{log_loss, objectives, MetricsError};
use crate::model::{log_loss_gradient, predict, predict_proba, ModelError};
use crate::optimizer::{perturb, random_init, OptimError, DECISION_THRESHOLD};
use crate::rng::{stream_rng, STREAM_CHAIN, STREAM_INIT};
use serde::{Deserialize, Serialize};

/// Knobs for the gradient-descent baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub max_epochs: u32,
    /// Stop once the per-epoch loss improvement falls below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            learning_rate: 0.1,
            max_epochs: 10_000,
            tol: 1e-8,
            seed: 42,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let mut problems = Vec::new();
        if is_negative(self.learning_rate) {
            problems.push(format!(
                "learning_rate must be >= 0, got {}",
                self.learning_rate
            ));
        }
        if self.max_epochs < 1 {
            problems.push("max_epochs must be >= 1".into());
        }
        if not_positive(self.tol) {
            problems.push(format!("tol must be > 0, got {}", self.tol));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(DataError::InvalidConfig(problems.join("; ")))
        }
    }
}

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("gradient descent diverged: loss rose for 10 consecutive epochs (epoch {epoch}, loss {loss})")]
    Divergence { epoch: u32, loss: f64 },
    #[error("objectives are undefined on this data: {0}")]
    DegenerateObjective(MetricsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] DataError),
}

/// Full accepted-state trace of single-objective SA on balanced
/// accuracy, initial solution included.
///
/// The walk mirrors the multi-objective chains move for move (same
/// seed derivation, same perturbation draws, one uniform draw per
/// iteration) so that with `lambda_us = 0` the two searches make
/// identical acceptance decisions. Acceptance follows the Boltzmann
/// rule min{1, exp((cand.ba - cur.ba) / t_ba)}.
pub fn run_sa_ba_trace(train: &Dataset, cfg: &AnnealConfig) -> Result<Vec<Solution>, OptimError> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0, STREAM_CHAIN);
    let mut init_rng = stream_rng(cfg.seed, 0, STREAM_INIT);
    let init = random_init(train.n_features() + 1, &mut init_rng);

    let eval = |params: &ModelParams| -> Result<_, OptimError> {
        let labels = predict(params, train, DECISION_THRESHOLD)?;
        Ok(objectives(train.target(), &labels, train.sensitive()))
    };

    let init_objectives = eval(&init)?.map_err(OptimError::DegenerateObjective)?;
    let mut current = Solution {
        params: init,
        objectives: init_objectives,
        chain_id: 0,
        step: 0,
    };
    let mut trace = vec![current.clone()];
    let mut t_ba = cfg.t_ba;
    let mut step: u64 = 0;

    loop {
        let mut accepted_in_epoch = 0u32;
        for _ in 0..cfg.iters_per_temp {
            step += 1;
            let cand_params = perturb(&current.params, cfg.beta, &mut rng);
            let cand_objectives = eval(&cand_params)?;
            let u: f64 = rng.random();
            let Ok(cand_objectives) = cand_objectives else {
                continue;
            };
            let delta = cand_objectives.ba - current.objectives.ba;
            let accept = delta >= 0.0 || u < (delta / t_ba).exp();
            if accept {
                current = Solution {
                    params: cand_params,
                    objectives: cand_objectives,
                    chain_id: 0,
                    step,
                };
                trace.push(current.clone());
                accepted_in_epoch += 1;
            }
        }
        t_ba *= cfg.alpha;
        if t_ba <= cfg.t_min || accepted_in_epoch == 0 {
            break;
        }
    }
    Ok(trace)
}

/// Single-objective SA on balanced accuracy; returns the best-BA
/// solution encountered (earliest on ties).
pub fn run_sa_ba(train: &Dataset, cfg: &AnnealConfig) -> Result<Solution, OptimError> {
    let trace = run_sa_ba_trace(train, cfg)?;
    Ok(trace
        .into_iter()
        .reduce(|best, s| {
            if s.objectives.ba > best.objectives.ba {
                s
            } else {
                best
            }
        })
        .expect("trace contains at least the initial solution"))
}

/// Full-batch gradient descent on the logistic log-loss from a zero
/// initialization. Stops at `max_epochs` or when the loss improvement
/// drops below `tol`; aborts if the loss rises for 10 consecutive
/// epochs.
pub fn run_gd_logloss(train: &Dataset, cfg: &SgdConfig) -> Result<Solution, BaselineError> {
    cfg.validate()?;
    let (theta, epochs, _losses) = gd_loop(train, cfg)?;
    let labels = predict(&theta, train, DECISION_THRESHOLD)?;
    let objs = objectives(train.target(), &labels, train.sensitive())
        .map_err(BaselineError::DegenerateObjective)?;
    Ok(Solution {
        params: theta,
        objectives: objs,
        chain_id: 0,
        step: epochs as u64,
    })
}

fn gd_loop(
    train: &Dataset,
    cfg: &SgdConfig,
) -> Result<(ModelParams, u32, Vec<f64>), BaselineError> {
    let mut theta = ModelParams::zeros(train.n_features());
    let loss_of = |p: &ModelParams| -> Result<f64, BaselineError> {
        let probs = predict_proba(p, train)?;
        Ok(log_loss(train.target(), &probs).expect("shapes match"))
    };
    let mut prev_loss = loss_of(&theta)?;
    let mut losses = vec![prev_loss];
    let mut rising_epochs = 0u32;
    let mut epochs = 0u32;

    for epoch in 1..=cfg.max_epochs {
        let grad = log_loss_gradient(&theta, train)?;
        let stepped: Vec<f64> = theta
            .theta()
            .iter()
            .zip(&grad)
            .map(|(t, g)| t - cfg.learning_rate * g)
            .collect();
        theta = ModelParams::new(stepped).map_err(BaselineError::Config)?;
        let loss = loss_of(&theta)?;
        losses.push(loss);
        epochs = epoch;
        if loss > prev_loss {
            rising_epochs += 1;
            if rising_epochs >= 10 {
                return Err(BaselineError::Divergence { epoch, loss });
            }
        } else {
            rising_epochs = 0;
            if prev_loss - loss < cfg.tol {
                prev_loss = loss;
                break;
            }
        }
        prev_loss = loss;
    }
    let _ = prev_loss;
    Ok((theta, epochs, losses))
}
