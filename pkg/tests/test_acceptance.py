"""Acceptance criteria, each at its stated tolerance.

One pass/fail line per criterion is printed in the terminal summary.  The
Monte Carlo criteria are expensive on a single core (about an hour in total).
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from oracles import cf_statistic_quadrature, dcov_literal, ecg_like
from icmtest import stats
from icmtest.datagen import SETTING1_SD, SettingKind, SettingSpec, mix, sample_setting1
from icmtest.ica import Method, amari_index, estimate, residuals
from icmtest.io import format_matrix
from icmtest.resampling import (
    IcaSpec,
    ResamplingPlan,
    Scheme,
    oracle_residuals,
    permutation_pvalue,
    run_test,
)
from icmtest.simulation import replication_seed, run_cell
from icmtest.stats import StatisticSpec, WeightKernel

GAUSS = StatisticSpec.from_name("gauss")
RANK_GAUSS = StatisticSpec.from_name("rank-gauss")
FASTICA = IcaSpec(Method.FASTICA, "tanh")


def _criterion(record_property, k, detail):
    record_property("criterion", k)
    record_property("detail", detail)


def test_criterion_1_closed_form_matches_quadrature(record_property):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    cases = [(kind, p, g) for kind in ("gaussian", "laplace") for p in (2, 3) for g in (0.5, 1.0, 2.0)]
    for i in range(50):
        kind, p, g = cases[i % len(cases)]
        n = int(rng.integers(2, 9))
        Z = rng.uniform(-1, 1, size=(n, p))
        closed = stats.t_statistic(Z, WeightKernel(kind, g)).value
        quad = cf_statistic_quadrature(Z, kind, g)
        worst = max(worst, abs(closed - quad) / quad)
    elapsed = time.perf_counter() - t0
    _criterion(record_property, 1, f"max relative error {worst:.2e} (tol 1e-6), {elapsed:.1f}s")
    assert worst < 1e-6
    assert elapsed < 60


def test_criterion_2_exact_size_with_oracle_residuals(record_property):
    t0 = time.perf_counter()
    R = 1000
    rejections = 0
    for r in range(R):
        Z = oracle_residuals(sample_setting1(200, replication_seed(2, r))).values
        rep = permutation_pvalue(Z, GAUSS, ResamplingPlan(M=199, seed=replication_seed(22, r)))
        rejections += rep.p_value <= 0.05
    rate = rejections / R
    elapsed = time.perf_counter() - t0
    _criterion(record_property, 2, f"rejection rate {rate:.3f} (target 0.05 +- 0.02), {elapsed:.0f}s")
    assert abs(rate - 0.05) <= 0.02
    assert elapsed < 300


def test_criterion_3_setting1_size_fastica_gauss(record_property):
    t0 = time.perf_counter()
    row = run_cell(SettingSpec(SettingKind.INDEP_MIX, 2000), FASTICA, GAUSS,
                   Scheme.PERMUTATION, 200, M=500, alpha=0.05, seed=3)
    elapsed = time.perf_counter() - t0
    _criterion(record_property, 3,
               f"rejection rate {row.rate:.3f} over 200 reps (target [0.02, 0.09]), {elapsed / 60:.1f} min")
    assert 0.02 <= row.rate <= 0.09


def test_criterion_4_clayton_power_shape(record_property):
    t0 = time.perf_counter()
    rates = []
    for omega in (0.0, 0.5, 1.0, 1.5):
        row = run_cell(SettingSpec(SettingKind.CLAYTON, 1000, omega=omega), FASTICA, RANK_GAUSS,
                       Scheme.PERMUTATION, 200, M=500, alpha=0.05, seed=4)
        rates.append(row.rate)
    elapsed = time.perf_counter() - t0
    _criterion(record_property, 4,
               "rates at omega 0, 0.5, 1, 1.5: " + ", ".join(f"{r:.3f}" for r in rates)
               + f", {elapsed / 60:.1f} min")
    assert all(a <= b for a, b in zip(rates, rates[1:]))
    assert 0.02 <= rates[0] <= 0.09
    assert rates[-1] > 0.9


def test_criterion_5_affine_invariance_jade(record_property):
    rng = np.random.default_rng(5)
    X = sample_setting1(1000, 5)
    specs = [StatisticSpec.from_name(name) for name in ("gauss", "laplace", "rank-gauss",
                                                        "rank-laplace", "vdw-gauss")]
    base = [s(residuals(X, estimate(X, Method.JADE))).value for s in specs]
    worst = 0.0
    for _ in range(20):
        A = rng.normal(size=(3, 3))
        while abs(np.linalg.det(A)) < 1e-2:
            A = rng.normal(size=(3, 3))
        Y = mix(X, A, rng.normal(scale=5.0, size=3))
        Zy = residuals(Y, estimate(Y, Method.JADE))
        for s, b in zip(specs, base):
            worst = max(worst, abs(s(Zy).value - b) / b)
    _criterion(record_property, 5, f"max relative change {worst:.2e} (tol 1e-6)")
    assert worst < 1e-6


def test_criterion_6_ica_recovery(record_property):
    Omega = np.diag(SETTING1_SD)
    counts = {}
    for method in Method:
        good = 0
        for seed in range(100):
            X = sample_setting1(8000, replication_seed(6, seed))
            good += amari_index(estimate(X, method).unmixing, Omega) < 0.1
        counts[method.value] = good
    _criterion(record_property, 6, "seeds with Amari < 0.1 (need >= 95): "
               + ", ".join(f"{m} {c}" for m, c in counts.items()))
    assert all(c >= 95 for c in counts.values()), counts


def test_criterion_7_distance_covariance(record_property):
    rng = np.random.default_rng(7)
    worst = 0.0
    exact = True
    for _ in range(100):
        n = int(rng.integers(2, 31))
        a, b = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        xi, eta = rng.normal(size=(n, a)), rng.standard_t(3, size=(n, b))
        worst = max(worst, abs(stats.dcov_pair(xi, eta) - dcov_literal(xi, eta)))
        Z = rng.normal(size=(n, 3))
        parts = sum(stats.dcov_pair(Z[:, l], np.delete(Z, l, axis=1)) for l in range(2))
        exact &= stats.dc_statistic(Z).value == n * parts
    _criterion(record_property, 7, f"max abs error {worst:.2e} (tol 1e-12), decomposition exact: {exact}")
    assert worst < 1e-12
    assert exact


def test_criterion_8_bootstrap_agrees_with_permutation(record_property):
    t0 = time.perf_counter()
    diffs = []
    for d in range(50):
        seed = replication_seed(8, d)
        X = sample_setting1(2000, seed)
        perm = run_test(X, FASTICA, GAUSS, ResamplingPlan(Scheme.PERMUTATION, 500, seed))
        boot = run_test(X, FASTICA, GAUSS, ResamplingPlan(Scheme.BOOTSTRAP, 500, seed))
        diffs.append(abs(boot.p_value - perm.p_value))
    med = float(np.median(diffs))
    elapsed = time.perf_counter() - t0
    _criterion(record_property, 8, f"median |p_boot - p_perm| {med:.4f} (need < 0.05), "
               f"{elapsed / 60:.1f} min")
    assert med < 0.05


def _cli(*args):
    res = subprocess.run([sys.executable, "-m", "icmtest", *map(str, args)], capture_output=True)
    return res.returncode, res.stdout


def test_criterion_9_determinism(record_property, tmp_path):
    data = tmp_path / "s1.csv"
    data.write_text(format_matrix(sample_setting1(500, 9)))
    ecg = tmp_path / "ecg.csv"
    ecg.write_text(format_matrix(ecg_like(800, 9)[0]))
    commands = {
        "test perm": ["test", data, "--stat", "gauss", "--M", 99, "--seed", 12],
        "test boot": ["test", data, "--ica", "jade", "--scheme", "boot", "--M", 30, "--seed", 12],
        "test threads": ["test", data, "--stat", "dcov", "--M", 30, "--threads", 2],
        "simulate": ["simulate", "--setting", 2, "--grid", "5,inf", "--n", 100, "-R", 100,
                     "--warp-speed", "--ica", "jade"],
        "simulate full": ["simulate", "--n", 80, "-R", 3, "--M", 19, "--scheme", "boot"],
        "pipeline": ["pipeline", ecg, "--M", 19, "--columns", "1,2", "--max-order", 5],
    }
    identical = {}
    for name, argv in commands.items():
        outputs = []
        for i in range(2):
            out = tmp_path / f"{name.replace(' ', '_')}_{i}.out"
            code, _ = _cli(*argv, "-o", out)
            assert code == 0, name
            outputs.append(out.read_bytes())
        identical[name] = outputs[0] == outputs[1]
    _criterion(record_property, 9, "byte-identical reruns: "
               + ", ".join(f"{k} {'yes' if v else 'NO'}" for k, v in identical.items()))
    assert all(identical.values())
