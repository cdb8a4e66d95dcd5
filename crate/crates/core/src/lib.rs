//! Training linear classifiers with Pareto Simulated Annealing,
//! jointly optimizing balanced accuracy and the underestimation of
//! desirable outcomes for a protected minority.
//!
//! The crate provides:
//!
//! * [`data`]: datasets, parameter vectors, objective values,
//!   stratified 70:30 splitting and the annealing configuration;
//! * [`metrics`]: disparate impact, underestimation score, balanced
//!   accuracy, log-loss and per-group confusion counts;
//! * [`model`]: the logistic predictor and its log-loss gradient;
//! * [`optimizer`]: multi-objective simulated annealing with dual
//!   temperatures and a non-dominated archive;
//! * [`baselines`]: single-objective annealing on balanced accuracy
//!   and batch gradient descent on log-loss;
//! * [`datasets`]: the synthetic generator, CSV ingestion with column
//!   presets, and feature standardization;
//! * [`harness`]: reproducible end-to-end experiment runs, reports
//!   and comparison tables (the engine behind the CLI).

pub mod baselines;
pub mod data;
pub mod datasets;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod optimizer;
pub mod rng;

pub use baselines::{run_gd_logloss, run_sa_ba, run_sa_ba_trace, BaselineError, SgdConfig};
pub use data::{
    split_70_30, AnnealConfig, DataError, Dataset, ModelParams, ObjectiveValues, Solution,
    SplitIndices,
};
pub use datasets::{
    generate_synthetic, load_csv, parse_preset, standardize, DatasetSpec, IngestError,
    SyntheticConfig,
};
pub use harness::{
    compare_table, front_table, run_experiment, ExperimentConfig, HarnessError, OptimizerKind,
    ReportHeader, ReportRecord,
};
pub use metrics::{
    balanced_accuracy, confusion, disparate_impact, log_loss, objectives, underestimation_score,
    GroupConfusion, MetricsError,
};
pub use model::{log_loss_gradient, predict, predict_proba, ModelError, PredictionBatch};
pub use optimizer::{
    acceptance_probability, dominates, finalize_archive, perturb, run_chain, run_psa, OptimError,
    ParetoArchive,
};
