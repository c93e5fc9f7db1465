"""End-to-end acceptance checks.

Each check records one ``PASS``/``FAIL`` line, printed in the terminal
summary.  Reference values are the published table entries; the bands are
three standard errors widened by sqrt(5) to cover the 100-vs-500 replicate
reading of those errors.
"""

import json
import math
import shutil
from pathlib import Path

import numpy as np
import pytest

from oracles import brute_spsp, random_path
from spsp.cli import main
from spsp.io import write_table
from spsp.partition import spsp_partition
from spsp.paths import PenaltyConfig, fit_path, kkt_residuals, make_lambda_grid, ridge_coefs, standardize
from spsp.simulation import build_design, run_experiment, run_r_sweep, sample_dataset

REPS = 100
SEED = 0
WIDEN = math.sqrt(5)

REPORT = []


def record(name, ok, detail):
    REPORT.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok


def band(center, se):
    half = 3 * se * WIDEN
    return center - half, center + half


def inside(x, lo_hi):
    return lo_hi[0] <= x <= lo_hi[1]


@pytest.fixture(scope="module")
def m1():
    return run_experiment(build_design("M1"), ["lasso", "ridge"], ["spsp", "aic", "bic", "ebic"], REPS, SEED)


def test_criterion_1_m1_lasso_spsp(m1):
    c = m1.cell("lasso", "spsp")
    fp_band, fn_band = band(4.476, 0.393), band(0.37, 0.027)
    ok = inside(c.fp_mean, fp_band) and inside(c.fn_mean, fn_band)
    record(
        "criterion 1 (M1 lasso SPSP)",
        ok,
        f"FP {c.fp_mean:.3f} in [{fp_band[0]:.3f}, {fp_band[1]:.3f}], FN {c.fn_mean:.3f} in [{fn_band[0]:.3f}, {fn_band[1]:.3f}]",
    )
    assert ok


def test_criterion_2_m1_ridge_spsp(m1):
    c = m1.cell("ridge", "spsp")
    fp_band, fn_band = band(3.282, 0.621), band(0.932, 0.038)
    ok = inside(c.fp_mean, fp_band) and inside(c.fn_mean, fn_band)
    record(
        "criterion 2 (M1 ridge SPSP)",
        ok,
        f"FP {c.fp_mean:.3f} in [{fp_band[0]:.3f}, {fp_band[1]:.3f}], FN {c.fn_mean:.3f} in [{fn_band[0]:.3f}, {fn_band[1]:.3f}]",
    )
    assert ok


def test_criterion_3_m3_lasso_spsp():
    c = run_experiment(build_design("M3"), ["lasso"], ["spsp"], REPS, SEED).cell("lasso", "spsp")
    fp_band, fn_band = band(3.222, 0.311), band(2.6, 0.038)
    ok = inside(c.fp_mean, fp_band) and inside(c.fn_mean, fn_band)
    record(
        "criterion 3 (M3 lasso SPSP)",
        ok,
        f"FP {c.fp_mean:.3f} in [{fp_band[0]:.3f}, {fp_band[1]:.3f}], FN {c.fn_mean:.3f} in [{fn_band[0]:.3f}, {fn_band[1]:.3f}]",
    )
    assert ok


def test_criterion_4_orderings(m1):
    sp, aic, bic, ebic = (m1.cell("lasso", m) for m in ("spsp", "aic", "bic", "ebic"))
    ok = aic.fp_mean >= 4 * sp.fp_mean and bic.fp_mean >= 4 * sp.fp_mean and ebic.fn_mean > sp.fn_mean
    record(
        "criterion 4 (orderings, M1 lasso)",
        ok,
        f"FP SPSP {sp.fp_mean:.3f} vs AIC {aic.fp_mean:.3f} / BIC {bic.fp_mean:.3f} (need >= 4x); "
        f"FN EBIC {ebic.fn_mean:.3f} > SPSP {sp.fn_mean:.3f}",
    )
    assert ok


def test_criterion_5_m4_model_error():
    s = run_experiment(build_design("M4"), ["lasso"], ["spsp", "aic"], REPS, SEED)
    sp, aic = s.cell("lasso", "spsp"), s.cell("lasso", "aic")
    ok = sp.me_median < aic.me_median
    record("criterion 5 (M4 median ME)", ok, f"SPSP {sp.me_median:.3f} < AIC {aic.me_median:.3f}")
    assert ok


def test_criterion_6_r_sweep():
    sw = run_r_sweep(build_design("M1"), None, REPS, SEED)
    fpr0, fnr0 = sw.estimated_fpr, sw.estimated_fnr
    good = [
        abs(r.mean_fpr - fpr0) <= 0.5 * fpr0 and abs(r.mean_fnr - fnr0) <= 0.5 * fnr0
        for r in sw.rows
    ]
    frac = sum(good) / len(good)
    ok = frac >= 0.8
    curve = ", ".join(f"{r.R:g}:{r.mean_fpr:.3f}/{r.mean_fnr:.3f}" for r in sw.rows)
    record(
        "criterion 6 (R sweep, M1 lasso)",
        ok,
        f"{sum(good)}/{len(good)} grid values within 50% of FPR {fpr0:.4f} / FNR {fnr0:.4f} "
        f"at mean estimated R {sw.mean_estimated_R:.2f}; R:FPR/FNR = {curve}",
    )
    assert ok


def _property_suite(m1):
    issues = []
    # KKT on every fitted convex path, over a batch of simulated designs
    for seed in range(10):
        ds = sample_dataset(build_design("M1"), seed)
        d = standardize(ds.X, ds.y)
        for pen in (PenaltyConfig("lasso"), PenaltyConfig("elastic_net", alpha=0.5), PenaltyConfig("adaptive_lasso")):
            worst = kkt_residuals(d, fit_path(d, make_lambda_grid(d, penalty=pen), pen)).max()
            if worst > 1e-6:
                issues.append(f"KKT {pen.kind} seed {seed}: {worst:.2e}")
    # orthonormal soft-threshold oracle and ridge closed form
    rng = np.random.default_rng(0)
    for _ in range(20):
        n, p = int(rng.integers(20, 60)), int(rng.integers(1, 15))
        Z = rng.standard_normal((n, p))
        Z -= Z.mean(axis=0)
        X = np.sqrt(n) * np.linalg.qr(Z)[0]
        d = standardize(X, X @ rng.normal(0, 2, p) + rng.standard_normal(n))
        grid = make_lambda_grid(d, K=20)
        ols = d.X.T @ d.y / n
        soft = np.sign(ols) * np.maximum(np.abs(ols)[None, :] - grid.values[:, None] / 2, 0)
        if np.max(np.abs(fit_path(d, grid).coefs - soft)) > 1e-8:
            issues.append("orthonormal oracle")
        lams = grid.values
        dense = np.array([np.linalg.solve(d.X.T @ d.X / n + lam * np.eye(p), d.X.T @ d.y / n) for lam in lams])
        if np.max(np.abs(ridge_coefs(d.X, d.y, lams) - dense)) > 1e-10:
            issues.append("ridge closed form")
    # partition invariances and brute-force equivalence
    rng = np.random.default_rng(1)
    for i in range(1000):
        B = random_path(rng)
        res = spsp_partition(B)
        c = 2.0 ** int(rng.integers(-20, 21))
        scaled = spsp_partition(B * c)
        if scaled.selected != res.selected or scaled.relevant_sets != res.relevant_sets or scaled.R_used != res.R_used:
            issues.append(f"scale invariance case {i}")
        perm = rng.permutation(B.shape[1])
        back = tuple(sorted(int(perm[j]) for j in spsp_partition(B[:, perm]).selected))
        if back != res.selected:
            issues.append(f"permutation case {i}")
        if brute_spsp(B)[0] != res.selected:
            issues.append(f"brute force case {i}")
    # metric bounds on every simulated replicate
    for r in m1.records:
        if not (0 <= r.fp <= 97 and 0 <= r.fn <= 3 and r.me >= 0):
            issues.append(f"metric bounds replicate {r.replicate}")
    return issues


def test_criterion_7_property_suite(m1):
    issues = _property_suite(m1)
    record("criterion 7 (property suite)", not issues, "all properties hold" if not issues else "; ".join(issues[:10]))
    assert not issues


def _snapshot(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).iterdir())}


def test_criterion_8_manifest_rerun(tmp_path):
    rng = np.random.default_rng(3)
    X = rng.standard_normal((40, 12))
    src = tmp_path / "data.csv"
    write_table(src, [f"g{j}" for j in range(12)], X, X[:, 0] * 2 - X[:, 3] + rng.standard_normal(40))
    runs = {
        "paths": ["paths", "--input", str(src), "--k-grid", "20"],
        "paths-scad": ["paths", "--input", str(src), "--penalty", "scad"],
        "select-spsp": ["select", "--input", str(src)],
        "select-cv": ["select", "--input", str(src), "--method", "cv", "--folds", "5", "--seed", "4"],
        "select-ebic": ["select", "--input", str(src), "--method", "ebic"],
        "select-stability": ["select", "--input", str(src), "--method", "stability", "--stab-b", "12"],
        "simulate": ["simulate", "--design", "M1", "--reps", "3", "--penalty", "lasso,ridge", "--method", "spsp,cv,bic,stability", "--stab-b", "5"],
        "sweep-r": ["sweep-r", "--design", "M3", "--reps", "3"],
        "screen": ["screen", "--input", str(src), "--d", "5"],
    }
    bad = []
    for name, args in runs.items():
        out = tmp_path / name
        assert main([*args, "--output", str(out)]) == 0
        first = _snapshot(out)
        manifest = tmp_path / f"{name}.manifest.json"
        shutil.copy(out / "manifest.json", manifest)
        shutil.rmtree(out)
        assert json.loads(manifest.read_text())["config"]["output"] == str(out)
        assert main([args[0], "--config", str(manifest)]) == 0
        if _snapshot(out) != first:
            bad.append(name)
    record("criterion 8 (manifest rerun)", not bad, f"{len(runs) - len(bad)}/{len(runs)} commands reproduced bit-exactly")
    assert not bad
