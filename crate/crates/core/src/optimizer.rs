//! Pareto Simulated Annealing over linear-classifier parameters.
//!
//! Two objectives are optimized jointly: balanced accuracy (maximized)
//! and underestimation deviation (minimized). Each chain performs a
//! Metropolis walk whose acceptance rule combines the per-objective
//! improvements, each divided by its own temperature; the two scales
//! differ, so each objective cools independently from its own starting
//! temperature. Every accepted state is archived; the final archive is
//! the non-dominated filter over all chains.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::{AnnealConfig, DataError, Dataset, ModelParams, ObjectiveValues, Solution};
use crate::metrics::{objectives, MetricsError};
use crate::model::{predict, ModelError};
use crate::rng::{stream_rng, STREAM_CHAIN, STREAM_INIT};

/// Decision threshold used when evaluating candidates.
pub const DECISION_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("objectives are undefined on this data: {0}")]
    DegenerateObjective(MetricsError),
    #[error("cannot finalize an empty archive")]
    EmptyArchive,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Config(#[from] DataError),
}

/// True when `a` is at least as good as `b` on both objectives and
/// strictly better on at least one.
pub fn dominates(a: &ObjectiveValues, b: &ObjectiveValues) -> bool {
    weakly_dominates(a, b) && (a.ba > b.ba || a.us_dev < b.us_dev)
}

/// True when `a` is at least as good as `b` on both objectives
/// (identical objective pairs weakly dominate each other).
pub fn weakly_dominates(a: &ObjectiveValues, b: &ObjectiveValues) -> bool {
    a.ba >= b.ba && a.us_dev <= b.us_dev
}

/// Adds Gaussian noise of scale `beta` to one uniformly chosen
/// coordinate of theta. Consumes exactly one index draw and one normal
/// draw from `rng` regardless of `beta`.
pub fn perturb(params: &ModelParams, beta: f64, rng: &mut impl Rng) -> ModelParams {
    let mut theta = params.theta().to_vec();
    let coord = rng.random_range(0..theta.len());
    let noise: f64 = rng.sample(StandardNormal);
    theta[coord] += beta * noise;
    ModelParams::new(theta).expect("finite + finite noise stays finite")
}

/// Draws an initial parameter vector with i.i.d. standard-normal
/// coordinates (features are standardized, so unit scale is appropriate).
pub fn random_init(dim: usize, rng: &mut impl Rng) -> ModelParams {
    let theta: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    ModelParams::new(theta).expect("normal draws are finite")
}

/// Probability of accepting `cand` from `cur`:
/// min{1, exp(lambda_ba * (cand.ba - cur.ba) / t_ba
///          + lambda_us * (cur.us_dev - cand.us_dev) / t_us)}.
///
/// Each term is that objective's improvement over its own temperature;
/// the deviation term enters sign-flipped because it is minimized.
pub fn acceptance_probability(
    cur: &ObjectiveValues,
    cand: &ObjectiveValues,
    t_ba: f64,
    t_us: f64,
    lambda_ba: f64,
    lambda_us: f64,
) -> f64 {
    let exponent =
        lambda_ba * (cand.ba - cur.ba) / t_ba + lambda_us * (cur.us_dev - cand.us_dev) / t_us;
    exponent.exp().min(1.0)
}

/// Accepted solutions of all chains, filtered down to the mutually
/// non-dominated set.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoArchive {
    entries: Vec<Solution>,
    capacity: Option<usize>,
}

impl ParetoArchive {
    /// Non-dominated entries, sorted by balanced accuracy descending.
    pub fn entries(&self) -> &[Solution] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn into_entries(self) -> Vec<Solution> {
        self.entries
    }

    /// Entry with the smallest underestimation deviation, ties broken by
    /// higher balanced accuracy then earliest (chain, step).
    pub fn best_underestimation(&self) -> Option<&Solution> {
        self.entries.iter().min_by(|a, b| {
            a.objectives
                .us_dev
                .total_cmp(&b.objectives.us_dev)
                .then(b.objectives.ba.total_cmp(&a.objectives.ba))
                .then(a.chain_id.cmp(&b.chain_id))
                .then(a.step.cmp(&b.step))
        })
    }

    /// Shrinks the archive to `capacity` entries, dropping the most
    /// crowded interior points first; the extreme points of the front are
    /// always kept.
    pub fn with_capacity(mut self, capacity: usize) -> ParetoArchive {
        self.capacity = Some(capacity.max(2));
        while self.entries.len() > self.capacity.unwrap() {
            let crowding = crowding_distances(&self.entries);
            let victim = crowding
                .iter()
                .enumerate()
                .filter(|(_, c)| c.is_finite())
                .min_by(|(_, a), (_, b)| a.total_cmp(b))
                .map(|(i, _)| i);
            match victim {
                Some(i) => {
                    self.entries.remove(i);
                }
                None => break,
            }
        }
        self
    }
}

/// NSGA-style crowding distance on the (ba, us_dev) plane. Assumes the
/// entries are sorted by ba descending (finalized archives are).
fn crowding_distances(entries: &[Solution]) -> Vec<f64> {
    let n = entries.len();
    let mut crowding = vec![0.0; n];
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    crowding[0] = f64::INFINITY;
    crowding[n - 1] = f64::INFINITY;
    let ba_span = (entries[0].objectives.ba - entries[n - 1].objectives.ba)
        .abs()
        .max(1e-12);
    let us_span = (entries[n - 1].objectives.us_dev - entries[0].objectives.us_dev)
        .abs()
        .max(1e-12);
    for i in 1..n - 1 {
        crowding[i] = (entries[i - 1].objectives.ba - entries[i + 1].objectives.ba).abs() / ba_span
            + (entries[i + 1].objectives.us_dev - entries[i - 1].objectives.us_dev).abs() / us_span;
    }
    crowding
}

/// Filters the entries down to the set not weakly dominated by any
/// other; among identical objective pairs the earliest (chain_id, step)
/// survives. Output is sorted by balanced accuracy descending.
pub fn finalize_archive(mut entries: Vec<Solution>) -> Result<ParetoArchive, OptimError> {
    if entries.is_empty() {
        return Err(OptimError::EmptyArchive);
    }
    entries.sort_by(|a, b| {
        a.objectives
            .cmp_ba_desc_usdev_asc(&b.objectives)
            .then(a.chain_id.cmp(&b.chain_id))
            .then(a.step.cmp(&b.step))
    });
    // One sweep: everything seen so far has ba >= current, so the current
    // entry survives iff it strictly improves the best us_dev seen.
    let mut kept: Vec<Solution> = Vec::new();
    let mut best_us = f64::INFINITY;
    for sol in entries {
        if sol.objectives.us_dev < best_us {
            best_us = sol.objectives.us_dev;
            kept.push(sol);
        }
    }
    Ok(ParetoArchive {
        entries: kept,
        capacity: None,
    })
}

struct Chain {
    current: Solution,
    t_ba: f64,
    t_us: f64,
    accepted_in_epoch: u32,
}

fn evaluate(
    params: &ModelParams,
    train: &Dataset,
) -> Result<Result<ObjectiveValues, MetricsError>, ModelError> {
    let labels = predict(params, train, DECISION_THRESHOLD)?;
    Ok(objectives(train.target(), &labels, train.sensitive()))
}

/// Runs one annealing chain on the train split and returns every
/// accepted solution, the initial one included.
///
/// The walk: perturb one coordinate, evaluate, accept when the candidate
/// weakly dominates the current state, otherwise accept with
/// [`acceptance_probability`] against a uniform draw. Candidates whose
/// metrics hit a degenerate denominator are rejected outright. Both
/// temperatures cool geometrically each epoch; the chain stops when
/// either reaches `t_min` or a full epoch passes without an acceptance.
pub fn run_chain(
    train: &Dataset,
    init: ModelParams,
    cfg: &AnnealConfig,
    chain_id: u32,
) -> Result<Vec<Solution>, OptimError> {
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, chain_id as u64, STREAM_CHAIN);

    let init_objectives = evaluate(&init, train)?.map_err(OptimError::DegenerateObjective)?;
    let mut chain = Chain {
        current: Solution {
            params: init,
            objectives: init_objectives,
            chain_id,
            step: 0,
        },
        t_ba: cfg.t_ba,
        t_us: cfg.t_us,
        accepted_in_epoch: 0,
    };
    let mut accepted = vec![chain.current.clone()];
    let mut step: u64 = 0;

    loop {
        chain.accepted_in_epoch = 0;
        for _ in 0..cfg.iters_per_temp {
            step += 1;
            let cand_params = perturb(&chain.current.params, cfg.beta, &mut rng);
            let cand_objectives = evaluate(&cand_params, train)?;
            // The uniform draw happens every iteration so the random
            // stream does not depend on which acceptance branch fires.
            let u: f64 = rng.random();
            let Ok(cand_objectives) = cand_objectives else {
                continue; // degenerate candidate: rejected outright
            };
            let accept = weakly_dominates(&cand_objectives, &chain.current.objectives)
                || u < acceptance_probability(
                    &chain.current.objectives,
                    &cand_objectives,
                    chain.t_ba,
                    chain.t_us,
                    cfg.lambda_ba,
                    cfg.lambda_us,
                );
            if accept {
                chain.current = Solution {
                    params: cand_params,
                    objectives: cand_objectives,
                    chain_id,
                    step,
                };
                accepted.push(chain.current.clone());
                chain.accepted_in_epoch += 1;
            }
        }
        chain.t_ba *= cfg.alpha;
        chain.t_us *= cfg.alpha;
        if chain.t_ba <= cfg.t_min || chain.t_us <= cfg.t_min || chain.accepted_in_epoch == 0 {
            break;
        }
    }
    Ok(accepted)
}

/// Runs `cfg.n_chains` independent chains (in parallel) from random
/// initial parameters and returns the non-dominated archive over all
/// accepted solutions.
///
/// Each chain's randomness derives only from `(cfg.seed, chain_id)`, so
/// the archive is identical regardless of thread scheduling.
pub fn run_psa(train: &Dataset, cfg: &AnnealConfig) -> Result<ParetoArchive, OptimError> {
    cfg.validate()?;
    let dim = train.n_features() + 1;
    let traces: Vec<Vec<Solution>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|chain_id| {
            let mut init_rng = stream_rng(cfg.seed, chain_id as u64, STREAM_INIT);
            let init = random_init(dim, &mut init_rng);
            run_chain(train, init, cfg, chain_id)
        })
        .collect::<Result<_, _>>()?;
    finalize_archive(traces.into_iter().flatten().collect())
}
