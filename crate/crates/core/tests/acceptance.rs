//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its runtime. Tolerances are pinned in the asserts.
//!
//! Run with `cargo test -p fairanneal --test acceptance -- --nocapture`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;

use fairanneal::data::{
    split_70_30, AnnealConfig, Dataset, ModelParams, ObjectiveValues, Solution,
};
use fairanneal::datasets::{
    builtin_preset, generate_synthetic, load_csv, parse_preset, standardize, SyntheticConfig,
};
use fairanneal::harness::{
    compare_table, read_report, run_experiment, ExperimentConfig, ReportHeader,
};
use fairanneal::metrics::{
    balanced_accuracy, confusion, disparate_impact, log_loss, objectives, underestimation_score,
    LOG_LOSS_EPS,
};
use fairanneal::model::{log_loss_gradient_parts, predict, predict_proba_parts};
use fairanneal::optimizer::{acceptance_probability, finalize_archive, run_psa};
use fairanneal::rng::stream_rng;

fn pass(criterion: u8, label: &str, started: Instant) {
    println!(
        "ACCEPTANCE {criterion} ({label}): PASS [{:.2}s]",
        started.elapsed().as_secs_f64()
    );
}

// ---------------------------------------------------------------------
// Criterion 1: metric oracle equivalence on 500 random instances.
// ---------------------------------------------------------------------

#[test]
fn criterion_1_metric_oracles() {
    let started = Instant::now();
    let mut rng = stream_rng(101, 0, 1);
    let mut checked = 0;
    while checked < 500 {
        let n = rng.random_range(4..=100);
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let yp: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let s: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();

        // Independent per-row oracles.
        let count = |f: &dyn Fn(usize) -> bool| (0..n).filter(|&i| f(i)).count() as f64;
        let n0 = count(&|i| s[i] == 0);
        let n1 = count(&|i| s[i] == 1);
        let pred0 = count(&|i| s[i] == 0 && yp[i] == 1);
        let pred1 = count(&|i| s[i] == 1 && yp[i] == 1);
        let act0 = count(&|i| s[i] == 0 && y[i] == 1);
        let pos = count(&|i| y[i] == 1);
        let neg = count(&|i| y[i] == 0);
        if n0 == 0.0 || n1 == 0.0 || pred1 == 0.0 || act0 == 0.0 || pos == 0.0 || neg == 0.0 {
            continue; // degenerate denominators are covered by error-path tests
        }
        checked += 1;

        let gc = confusion(&y, &yp, &s).unwrap();

        let oracle_di = (pred0 / n0) / (pred1 / n1);
        assert!((disparate_impact(&gc).unwrap() - oracle_di).abs() < 1e-12);

        let oracle_us = (pred0 / n0) / (act0 / n0);
        assert!((underestimation_score(&gc).unwrap() - oracle_us).abs() < 1e-12);

        let tp = count(&|i| y[i] == 1 && yp[i] == 1);
        let tn = count(&|i| y[i] == 0 && yp[i] == 0);
        let oracle_ba = 0.5 * (tp / pos + tn / neg);
        assert!((balanced_accuracy(&gc).unwrap() - oracle_ba).abs() < 1e-12);

        let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let mut oracle_ll = 0.0;
        for i in 0..n {
            let pi = p[i].clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS);
            oracle_ll -= y[i] as f64 * pi.ln() + (1.0 - y[i] as f64) * (1.0 - pi).ln();
        }
        oracle_ll /= n as f64;
        assert!((log_loss(&y, &p).unwrap() - oracle_ll).abs() < 1e-12);
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "criterion 1 runtime");
    pass(1, "metric oracle equivalence", started);
}

// ---------------------------------------------------------------------
// Criterion 2: analytic gradient vs central finite differences.
// ---------------------------------------------------------------------

#[test]
fn criterion_2_gradient_check() {
    let started = Instant::now();
    let mut rng = stream_rng(102, 0, 1);
    for _ in 0..100 {
        let n = rng.random_range(4..=20);
        let k = rng.random_range(1..=5usize);
        // Standardized-feature scale; keeps |score| below the log-loss
        // clipping threshold so the loss stays smooth for differencing.
        let features: Vec<f64> = (0..n * k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let theta: Vec<f64> = (0..=k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let params = ModelParams::new(theta.clone()).unwrap();
        let grad = log_loss_gradient_parts(&params, &features, k, &y).unwrap();

        let loss_at = |t: &[f64]| {
            let p =
                predict_proba_parts(&ModelParams::new(t.to_vec()).unwrap(), &features, k).unwrap();
            log_loss(&y, &p).unwrap()
        };
        let h = 1e-6;
        for j in 0..=k {
            let mut plus = theta.clone();
            plus[j] += h;
            let mut minus = theta.clone();
            minus[j] -= h;
            let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
            // Relative error with a 1e-4 floor so saturated near-zero
            // components do not amplify finite-difference roundoff.
            let denom = fd.abs().max(grad[j].abs()).max(1e-4);
            assert!(
                ((grad[j] - fd) / denom).abs() < 1e-5,
                "gradient component {j}: analytic {} vs finite difference {}",
                grad[j],
                fd
            );
        }
    }
    assert!(started.elapsed().as_secs_f64() < 5.0, "criterion 2 runtime");
    pass(2, "gradient vs finite differences", started);
}

// ---------------------------------------------------------------------
// Criterion 3: archive filter vs the quadratic dominance oracle.
// ---------------------------------------------------------------------

fn solution(ba: f64, us_dev: f64, chain_id: u32, step: u64) -> Solution {
    Solution {
        params: ModelParams::zeros(1),
        objectives: ObjectiveValues::new(ba, 1.0 - us_dev),
        chain_id,
        step,
    }
}

fn quadratic_front(entries: &[Solution]) -> Vec<(u32, u64)> {
    let dominates = |a: &ObjectiveValues, b: &ObjectiveValues| {
        a.ba >= b.ba && a.us_dev <= b.us_dev && (a.ba > b.ba || a.us_dev < b.us_dev)
    };
    let mut kept = Vec::new();
    for e in entries {
        let dead = entries.iter().any(|o| {
            dominates(&o.objectives, &e.objectives)
                || (o.objectives.ba == e.objectives.ba
                    && o.objectives.us_dev == e.objectives.us_dev
                    && (o.chain_id, o.step) < (e.chain_id, e.step))
        });
        if !dead {
            kept.push((e.chain_id, e.step));
        }
    }
    kept.sort_unstable();
    kept
}

#[test]
fn criterion_3_pareto_filter_oracle() {
    let started = Instant::now();
    let mut rng = stream_rng(103, 0, 1);
    for round in 0..100 {
        let n = rng.random_range(1..=1000);
        let grid: f64 = if round % 2 == 0 { 64.0 } else { 1024.0 };
        let entries: Vec<Solution> = (0..n)
            .map(|i| {
                let ba = rng.random_range(0..grid as u32) as f64 / grid;
                let us_dev = rng.random_range(0..grid as u32) as f64 / grid;
                solution(ba, us_dev, (i % 13) as u32, (i / 13) as u64)
            })
            .collect();
        let archive = finalize_archive(entries.clone()).unwrap();
        let mut got: Vec<(u32, u64)> = archive
            .entries()
            .iter()
            .map(|s| (s.chain_id, s.step))
            .collect();
        got.sort_unstable();
        assert_eq!(got, quadratic_front(&entries), "round {round} (n = {n})");
    }
    assert!(
        started.elapsed().as_secs_f64() < 10.0,
        "criterion 3 runtime"
    );
    pass(3, "pareto filter vs quadratic oracle", started);
}

// ---------------------------------------------------------------------
// Criterion 4: acceptance-rule properties.
// ---------------------------------------------------------------------

#[test]
fn criterion_4_acceptance_rule() {
    let started = Instant::now();
    let obj = |ba: f64, us_dev: f64| ObjectiveValues::new(ba, 1.0 - us_dev);

    // Dominating candidates are accepted with probability exactly 1.
    let mut rng = stream_rng(104, 0, 1);
    for _ in 0..200 {
        let cur = obj(rng.random_range(0.0..0.9), rng.random_range(0.1..1.0));
        let cand = obj(
            cur.ba + rng.random_range(0.0..0.1),
            cur.us_dev * rng.random_range(0.0..1.0),
        );
        let p = acceptance_probability(&cur, &cand, 0.05, 0.05, 1.0, 1.0);
        assert_eq!(p, 1.0);
    }

    // Near-zero temperature: a 0.01-worse candidate is essentially never
    // accepted.
    let p = acceptance_probability(&obj(0.8, 0.2), &obj(0.79, 0.2), 1e-9, 1e-9, 1.0, 1.0);
    assert!(p < 1e-6, "zero-temperature limit: {p}");
    let p = acceptance_probability(&obj(0.8, 0.2), &obj(0.8, 0.21), 1e-9, 1e-9, 1.0, 1.0);
    assert!(p < 1e-6, "zero-temperature limit (us side): {p}");

    // Near-infinite temperature: the same candidate is almost always
    // accepted.
    let p = acceptance_probability(&obj(0.8, 0.2), &obj(0.79, 0.21), 1e9, 1e9, 1.0, 1.0);
    assert!(p > 0.999, "high-temperature limit: {p}");

    // Monotone in each objective delta over a grid.
    let cur = obj(0.6, 0.3);
    for t in [0.01, 0.1, 1.0] {
        let mut prev = -1.0;
        for i in 0..=100 {
            let cand = obj(0.3 + 0.006 * i as f64, 0.5);
            let p = acceptance_probability(&cur, &cand, t, t, 1.0, 1.0);
            assert!(p >= prev, "not monotone in ba at t={t}");
            prev = p;
        }
        let mut prev = 2.0;
        for i in 0..=100 {
            let cand = obj(0.5, 0.006 * i as f64);
            let p = acceptance_probability(&cur, &cand, t, t, 1.0, 1.0);
            assert!(p <= prev, "not monotone in us_dev at t={t}");
            prev = p;
        }
    }
    pass(4, "acceptance-rule properties", started);
}

// ---------------------------------------------------------------------
// Criterion 5: PSA vs the exhaustive parameter-grid front on a tiny
// dataset.
// ---------------------------------------------------------------------

/// 20 rows, 2 features. x0 carries the label signal with the minority's
/// positives sitting lower; x1 is an exact group indicator, so per-group
/// calibration is representable and the two objectives genuinely trade
/// off.
fn tiny_dataset() -> Dataset {
    #[rustfmt::skip]
    let rows: [(f64, f64, u8, u8); 20] = [
        (1.5, 1.0, 1, 1), (1.2, 1.0, 1, 1), (0.9, 1.0, 1, 1), (0.8, 1.0, 1, 1), (0.6, 1.0, 1, 1),
        (-0.2, 1.0, 0, 1), (-0.5, 1.0, 0, 1), (-0.8, 1.0, 0, 1), (-1.1, 1.0, 0, 1), (-1.6, 1.0, 0, 1),
        (0.3, 0.0, 1, 0), (0.1, 0.0, 1, 0), (-0.1, 0.0, 1, 0),
        (-0.3, 0.0, 0, 0), (-0.6, 0.0, 0, 0), (-0.7, 0.0, 0, 0), (-0.9, 0.0, 0, 0),
        (-1.2, 0.0, 0, 0), (-1.4, 0.0, 0, 0), (-1.7, 0.0, 0, 0),
    ];
    let mut features = Vec::with_capacity(40);
    let mut target = Vec::with_capacity(20);
    let mut sensitive = Vec::with_capacity(20);
    for (x0, x1, y, s) in rows {
        features.extend_from_slice(&[x0, x1]);
        target.push(y);
        sensitive.push(s);
    }
    Dataset::new(
        features,
        2,
        target,
        sensitive,
        vec!["x0".into(), "x1".into()],
        "tiny",
    )
    .unwrap()
}

#[test]
fn criterion_5_small_instance_grid_optimality() {
    let started = Instant::now();
    let data = tiny_dataset();

    // Exhaustive oracle: theta in [-2, 2]^3, step 0.25.
    let axis: Vec<f64> = (0..17).map(|i| -2.0 + 0.25 * i as f64).collect();
    let mut grid_points: Vec<ObjectiveValues> = Vec::with_capacity(17 * 17 * 17);
    for &w0 in &axis {
        for &w1 in &axis {
            for &b in &axis {
                let params = ModelParams::new(vec![w0, w1, b]).unwrap();
                let labels = predict(&params, &data, 0.5).unwrap();
                let obj = objectives(data.target(), &labels, data.sensitive()).unwrap();
                grid_points.push(obj);
            }
        }
    }
    // Quadratic-oracle front over the deduplicated objective pairs.
    grid_points.sort_by(|a, b| a.ba.total_cmp(&b.ba).then(a.us_dev.total_cmp(&b.us_dev)));
    grid_points.dedup_by(|a, b| a.ba == b.ba && a.us_dev == b.us_dev);
    let grid_front: Vec<ObjectiveValues> = grid_points
        .iter()
        .filter(|e| {
            !grid_points.iter().any(|o| {
                o.ba >= e.ba && o.us_dev <= e.us_dev && (o.ba > e.ba || o.us_dev < e.us_dev)
            })
        })
        .copied()
        .collect();
    assert!(!grid_front.is_empty());

    let cfg = AnnealConfig {
        n_chains: 6,
        iters_per_temp: 80,
        t_ba: 0.2,
        t_us: 0.5,
        alpha: 0.9,
        beta: 0.5,
        t_min: 1e-3,
        seed: 815,
        ..AnnealConfig::default()
    };
    let archive = run_psa(&data, &cfg).unwrap();
    let entries = archive.entries();

    let psa_best_ba = entries.iter().map(|s| s.objectives.ba).fold(0.0, f64::max);
    let grid_best_ba = grid_front.iter().map(|o| o.ba).fold(0.0, f64::max);
    assert!(
        psa_best_ba >= grid_best_ba - 0.05,
        "best ba: psa {psa_best_ba} vs grid {grid_best_ba}"
    );

    let psa_best_us = entries
        .iter()
        .map(|s| s.objectives.us_dev)
        .fold(f64::INFINITY, f64::min);
    let grid_best_us = grid_front
        .iter()
        .map(|o| o.us_dev)
        .fold(f64::INFINITY, f64::min);
    assert!(
        psa_best_us <= grid_best_us + 0.05,
        "best us_dev: psa {psa_best_us} vs grid {grid_best_us}"
    );

    // Every grid trade-off point is approximated by some archived
    // solution within 0.05 on both objectives.
    for g in &grid_front {
        let covered = entries.iter().any(|s| {
            (s.objectives.ba - g.ba).abs() <= 0.05 && (s.objectives.us_dev - g.us_dev).abs() <= 0.05
        });
        assert!(
            covered,
            "grid front point (ba {}, us_dev {}) not covered",
            g.ba, g.us_dev
        );
    }

    assert!(
        started.elapsed().as_secs_f64() < 60.0,
        "criterion 5 runtime"
    );
    pass(5, "small-instance grid optimality", started);
}

// ---------------------------------------------------------------------
// Criteria 6-8 share the default-scale synthetic pipeline.
// ---------------------------------------------------------------------

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fairanneal-accept-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn default_config(optimizer: &str, out: &Path) -> ExperimentConfig {
    let opt_section = match optimizer {
        "gd_logloss" => "[sgd]",
        _ => "[anneal]",
    };
    ExperimentConfig::from_toml_str(&format!(
        r#"
dataset = "synthetic"
optimizer = "{optimizer}"
split_seed = 42
output_dir = "{}"

{opt_section}
"#,
        out.display()
    ))
    .unwrap()
}

#[test]
fn criterion_6_front_reaches_unit_us_at_near_max_ba() {
    let started = Instant::now();
    let data = generate_synthetic(&SyntheticConfig::default()).unwrap();
    assert_eq!((data.n_samples(), data.n_features()), (5000, 3));
    let split = split_70_30(&data, 42).unwrap();
    let (scaled, _) = standardize(&data, &split.train).unwrap();
    let train = scaled.subset(&split.train).unwrap();

    let archive = run_psa(&train, &AnnealConfig::default()).unwrap();
    let max_ba = archive
        .entries()
        .iter()
        .map(|s| s.objectives.ba)
        .fold(0.0, f64::max);
    let best_calibrated = archive
        .entries()
        .iter()
        .filter(|s| s.objectives.us_dev <= 0.05)
        .map(|s| s.objectives.ba)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        best_calibrated.is_finite(),
        "no archived solution with train us_dev <= 0.05"
    );
    assert!(
        best_calibrated >= max_ba - 0.05,
        "calibrated ba {best_calibrated} more than 0.05 below front max {max_ba}"
    );
    assert!(
        started.elapsed().as_secs_f64() < 300.0,
        "criterion 6 runtime"
    );
    pass(6, "near-unit US at near-max BA on synthetic", started);
}

#[test]
fn criterion_7_psa_wins_on_test_underestimation() {
    let started = Instant::now();
    let dir = tmpdir("c7");
    let mut reports = Vec::new();
    for optimizer in ["psa", "sa_ba", "gd_logloss"] {
        let cfg = default_config(optimizer, &dir);
        reports.push(run_experiment(&cfg).unwrap().report_path);
    }
    let table = compare_table(&reports).unwrap();
    println!("{table}");
    let mut dev_by_optimizer = Vec::new();
    for line in table.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let us_test: f64 = cells[2].parse().unwrap();
        dev_by_optimizer.push((cells[0].to_string(), (1.0 - us_test).abs()));
    }
    let psa = dev_by_optimizer.iter().find(|(o, _)| o == "psa").unwrap().1;
    for (optimizer, dev) in &dev_by_optimizer {
        if optimizer != "psa" {
            assert!(
                psa < *dev,
                "psa test |1-US| = {psa} is not strictly below {optimizer}'s {dev}"
            );
        }
    }
    pass(
        7,
        "psa outperforms baselines on test underestimation",
        started,
    );
}

#[test]
fn criterion_8_reports_are_deterministic() {
    let started = Instant::now();
    let dir = tmpdir("c8");
    let cfg = ExperimentConfig::from_toml_str(&format!(
        r#"
dataset = "synthetic"
optimizer = "psa"
split_seed = 42
output_dir = "{}"

[synthetic]
n_samples = 2000

[anneal]
n_chains = 6
iters_per_temp = 60
t_min = 0.002
"#,
        dir.display()
    ))
    .unwrap();

    let strip = |text: &str| -> (ReportHeader, String) {
        let (first, rest) = text.split_once('\n').unwrap();
        let mut header: ReportHeader = serde_json::from_str(first).unwrap();
        header.wall_clock_seconds = 0.0;
        (header, rest.to_string())
    };
    let a = run_experiment(&cfg).unwrap();
    let text_a = fs::read_to_string(&a.report_path).unwrap();
    let b = run_experiment(&cfg).unwrap();
    let text_b = fs::read_to_string(&b.report_path).unwrap();
    let (ha, ra) = strip(&text_a);
    let (hb, rb) = strip(&text_b);
    assert_eq!(ha, hb, "headers differ");
    assert_eq!(ra, rb, "records differ");
    pass(8, "deterministic reports with parallel chains", started);
}

// ---------------------------------------------------------------------
// Criterion 9: Table-1 shape checks.
// ---------------------------------------------------------------------

#[test]
fn criterion_9_dataset_shapes() {
    let started = Instant::now();

    let synth = generate_synthetic(&SyntheticConfig::default()).unwrap();
    assert_eq!(synth.n_samples(), 5000);
    assert_eq!(synth.n_features(), 3);
    assert!(
        (synth.minority_share() - 0.5).abs() <= 0.02,
        "minority share {}",
        synth.minority_share()
    );

    // The raw Adult / Recidivism files are not vendored. The presets are
    // exercised against bundled fixtures with the authentic schemas; when
    // the environment provides the real files, the full row counts are
    // asserted too.
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    let adult_spec = parse_preset(builtin_preset("adult").unwrap()).unwrap();
    let adult = load_csv(&fixtures.join("adult_mini.csv"), &adult_spec).unwrap();
    assert_eq!(adult.dataset.n_features(), 7);

    let recid_spec = parse_preset(builtin_preset("recidivism").unwrap()).unwrap();
    let recid = load_csv(&fixtures.join("recidivism_mini.csv"), &recid_spec).unwrap();
    assert_eq!(recid.dataset.n_features(), 7);

    if let Ok(path) = std::env::var("FAIRANNEAL_ADULT_CSV") {
        let outcome = load_csv(Path::new(&path), &adult_spec).unwrap();
        assert_eq!(outcome.dataset.n_samples(), 48_842);
        assert_eq!(outcome.dataset.n_features(), 7);
        println!("  adult raw file: 48,842 x 7 confirmed");
    } else {
        println!("  adult raw file not provided (set FAIRANNEAL_ADULT_CSV to check 48,842 rows)");
    }
    if let Ok(path) = std::env::var("FAIRANNEAL_RECIDIVISM_CSV") {
        let outcome = load_csv(Path::new(&path), &recid_spec).unwrap();
        assert_eq!(outcome.dataset.n_samples(), 7_214);
        assert_eq!(outcome.dataset.n_features(), 7);
        println!("  recidivism raw file: 7,214 x 7 confirmed");
    } else {
        println!(
            "  recidivism raw file not provided (set FAIRANNEAL_RECIDIVISM_CSV to check 7,214 rows)"
        );
    }
    pass(9, "dataset shape checks", started);
}

// ---------------------------------------------------------------------
// Cross-cutting: every archived solution re-evaluates to its stored
// objectives (supports criteria 6-8; cheap enough to run at scale).
// ---------------------------------------------------------------------

#[test]
fn archived_solutions_reproduce_their_objectives() {
    let started = Instant::now();
    let dir = tmpdir("reproduce");
    let cfg = ExperimentConfig::from_toml_str(&format!(
        r#"
dataset = "synthetic"
optimizer = "psa"
split_seed = 7
output_dir = "{}"

[synthetic]
n_samples = 1500

[anneal]
n_chains = 4
iters_per_temp = 40
t_min = 0.003
"#,
        dir.display()
    ))
    .unwrap();
    let summary = run_experiment(&cfg).unwrap();
    let (_, records) = read_report(&summary.report_path).unwrap();

    let data = generate_synthetic(cfg.synthetic.as_ref().unwrap()).unwrap();
    let split = split_70_30(&data, 7).unwrap();
    let (scaled, _) = standardize(&data, &split.train).unwrap();
    let train = scaled.subset(&split.train).unwrap();
    for r in &records {
        let params = ModelParams::new(r.theta.clone()).unwrap();
        let labels = predict(&params, &train, 0.5).unwrap();
        let obj = objectives(train.target(), &labels, train.sensitive()).unwrap();
        assert_eq!(obj.ba, r.train_ba);
        assert_eq!(obj.us_dev, r.train_us_dev);
    }
    println!(
        "  re-evaluated {} archived solutions exactly [{:.2}s]",
        records.len(),
        started.elapsed().as_secs_f64()
    );
}
