//! Experiment CLI: run an optimizer on a dataset, extract Pareto
//! fronts, compare optimizers, generate the synthetic dataset and
//! validate inputs.
//!
//! Exit codes: 0 success, 1 validation/config error, 2 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairanneal::data::split_70_30;
use fairanneal::harness::{
    self, compare_table, front_table, resolve_dataset_parts, run_experiment, validation_summary,
    ExperimentConfig, HarnessError, OptimizerKind,
};
use fairanneal::SyntheticConfig;

#[derive(Parser)]
#[command(
    name = "fairanneal",
    about = "Train linear classifiers with Pareto Simulated Annealing, optimizing balanced accuracy and underestimation jointly",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a config file and write a run report.
    Run(RunArgs),
    /// Print the non-dominated train front of a psa report as CSV.
    Front(FrontArgs),
    /// Compare the selected solution of two or more reports as CSV.
    Compare(CompareArgs),
    /// Generate the synthetic dataset and write it as CSV.
    GenSynthetic(GenArgs),
    /// Load a dataset, check its invariants and print a summary.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config (see README for the schema).
    #[arg(long)]
    config: PathBuf,
    /// Override the optimizer seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FrontArgs {
    /// Run report produced by `run` with the psa optimizer.
    #[arg(long)]
    report: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more run reports over the same dataset and split seed.
    #[arg(required = true, num_args = 2..)]
    reports: Vec<PathBuf>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SyntheticConfig::default().n_samples)]
    n_samples: usize,
    #[arg(long, default_value_t = SyntheticConfig::default().minority_fraction)]
    minority_fraction: f64,
    #[arg(long, default_value_t = SyntheticConfig::default().bias_strength)]
    bias_strength: f64,
    #[arg(long, default_value_t = SyntheticConfig::default().noise_sd)]
    noise_sd: f64,
    #[arg(long, default_value_t = SyntheticConfig::default().seed)]
    seed: u64,
}

#[derive(Args)]
struct ValidateArgs {
    /// "synthetic", "adult", "recidivism", or a CSV path (with --preset).
    #[arg(long)]
    dataset: String,
    /// Raw CSV file for named presets or custom datasets.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Column-mapping preset file (overrides the built-in preset).
    #[arg(long)]
    preset: Option<PathBuf>,
    /// Also check the 70:30 split with this seed.
    #[arg(long)]
    split_seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), HarnessError> {
    match out {
        Some(path) => {
            harness::write_atomic(path, text.as_bytes())?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn dispatch(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Run(args) => {
            let mut cfg = ExperimentConfig::from_path(&args.config)?;
            if let Some(seed) = args.seed {
                match cfg.optimizer {
                    OptimizerKind::Psa | OptimizerKind::SaBa => {
                        if let Some(anneal) = cfg.anneal.as_mut() {
                            anneal.seed = seed;
                        }
                    }
                    OptimizerKind::GdLogloss => {
                        if let Some(sgd) = cfg.sgd.as_mut() {
                            sgd.seed = seed;
                        }
                    }
                }
            }
            if let Some(out) = args.out {
                cfg.output_dir = out;
            }
            let summary = run_experiment(&cfg)?;
            println!(
                "{} solutions in {:.1}s (config {}) -> {}",
                summary.n_records,
                summary.wall_clock_seconds,
                summary.config_hash,
                summary.report_path.display()
            );
            Ok(())
        }
        Command::Front(args) => {
            let table = front_table(&args.report)?;
            emit(&table, args.out.as_ref())
        }
        Command::Compare(args) => {
            let table = compare_table(&args.reports)?;
            emit(&table, args.out.as_ref())
        }
        Command::GenSynthetic(args) => {
            let cfg = SyntheticConfig {
                n_samples: args.n_samples,
                minority_fraction: args.minority_fraction,
                bias_strength: args.bias_strength,
                noise_sd: args.noise_sd,
                seed: args.seed,
            };
            harness::write_synthetic_csv(&cfg, &args.out)?;
            println!("wrote {}", args.out.display());
            Ok(())
        }
        Command::Validate(args) => {
            let dataset = resolve_dataset_parts(
                &args.dataset,
                args.csv.as_deref(),
                args.preset.as_deref(),
                None,
            )?;
            let summary = validation_summary(&dataset);
            println!("dataset:        {}", summary.name);
            println!("samples:        {}", summary.n_samples);
            println!(
                "features:       {} ({})",
                summary.n_features,
                summary.feature_names.join(", ")
            );
            println!("minority share: {:.4}", summary.minority_share);
            println!("positive share: {:.4}", summary.positive_share);
            println!(
                "cells [y][s]:   y0s0={} y0s1={} y1s0={} y1s1={}",
                summary.cell_counts[0][0],
                summary.cell_counts[0][1],
                summary.cell_counts[1][0],
                summary.cell_counts[1][1]
            );
            if let Some(seed) = args.split_seed {
                let split = split_70_30(&dataset, seed)?;
                println!(
                    "split (seed {seed}): train={} test={}",
                    split.train.len(),
                    split.test.len()
                );
            }
            println!("ok: all dataset invariants hold");
            Ok(())
        }
    }
}
