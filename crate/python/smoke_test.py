#!/usr/bin/env python3
"""Smoke test for the fairanneal Python extension.

Build the extension first, then run this script:

    cargo build -p fairanneal-py --release
    python3 python/smoke_test.py

The script stages the built cdylib under an importable name, then
exercises the main types and operations end to end on a small synthetic
dataset.
"""

import os
import shutil
import sys
import tempfile

HERE = os.path.dirname(os.path.abspath(__file__))
REPO = os.path.dirname(HERE)


def stage_module() -> str:
    candidates = [
        os.path.join(REPO, "target", "release", "libfairanneal_py.so"),
        os.path.join(REPO, "target", "debug", "libfairanneal_py.so"),
        os.path.join(REPO, "target", "release", "libfairanneal_py.dylib"),
        os.path.join(REPO, "target", "debug", "libfairanneal_py.dylib"),
    ]
    built = next((c for c in candidates if os.path.exists(c)), None)
    if built is None:
        sys.exit("extension not built; run: cargo build -p fairanneal-py --release")
    stage = tempfile.mkdtemp(prefix="fairanneal-py-")
    shutil.copy2(built, os.path.join(stage, "fairanneal.so"))
    return stage


sys.path.insert(0, stage_module())
import fairanneal as fa  # noqa: E402


def check(label, condition):
    if not condition:
        sys.exit(f"FAIL: {label}")
    print(f"ok: {label}")


def main():
    print(f"fairanneal {fa.__version__}")

    # Dataset construction and validation.
    data = fa.Dataset.synthetic(n_samples=600, seed=3)
    check("synthetic shape", data.n_samples == 600 and data.n_features == 3)
    check("feature names", data.feature_names == ["merit", "proxy", "group"])
    try:
        fa.Dataset([[1.0], [2.0]], [1, 1], [0, 1], ["x"])
        sys.exit("FAIL: invalid dataset accepted")
    except ValueError:
        print("ok: invalid dataset rejected")

    # Split + standardize.
    train_idx, test_idx = fa.split_70_30(data, seed=7)
    check("split partition", sorted(train_idx + test_idx) == list(range(600)))
    check("split ratio", abs(len(train_idx) - 420) <= 1)
    scaled, table = fa.standardize(data, train_idx)
    check("scaling table width", len(table) == 3)
    check("group column is binary-passthrough", table[2][3] == "Binary")
    train = scaled.subset(train_idx)
    test = scaled.subset(test_idx)

    # Metrics round trip against hand values.
    check("log_loss(ln2)", abs(fa.log_loss([1, 0], [0.5, 0.5]) - 0.6931471805599453) < 1e-12)
    y = [1, 0, 1, 0]
    s = [0, 1, 0, 1]
    obj = fa.objectives(y, y, s)
    check("perfect predictor objectives", obj.ba == 1.0 and obj.us_dev == 0.0)
    check("dominance", fa.dominates(obj, fa.objectives(y, [1, 1, 1, 1], s)))

    # Optimizers.
    cfg = fa.AnnealConfig(n_chains=2, iters_per_temp=40, t_ba=0.1, t_us=0.1, t_min=1e-2, seed=5)
    archive = fa.run_psa(train, cfg)
    check("psa archive non-empty", len(archive) >= 1)
    entries = archive.entries()
    for i, a in enumerate(entries):
        for j, b in enumerate(entries):
            if i != j:
                check_ok = not fa.dominates(a.objectives, b.objectives)
                if not check_ok:
                    sys.exit("FAIL: archive contains a dominated entry")
    print("ok: archive is mutually non-dominated")
    best = archive.best_underestimation()
    check("best_underestimation", best is not None)

    sa = fa.run_sa_ba(train, cfg)
    gd = fa.run_gd_logloss(train, fa.SgdConfig(max_epochs=2000))
    check("sa solution has objectives", 0.0 <= sa.objectives.ba <= 1.0)
    check("gd solution has objectives", 0.0 <= gd.objectives.ba <= 1.0)

    # Predictions recompute the stored objectives.
    preds = fa.predict(best.theta, train)
    re_obj = fa.objectives(train.target, preds, train.sensitive)
    check("archived objectives reproduce", abs(re_obj.ba - best.objectives.ba) < 1e-15)

    # Held-out evaluation works end to end.
    test_preds = fa.predict(best.theta, test)
    _ = fa.objectives(test.target, test_preds, test.sensitive)
    _ = fa.disparate_impact(test.target, test_preds, test.sensitive)
    print("ok: held-out evaluation")

    print("SMOKE TEST PASSED")


if __name__ == "__main__":
    main()
