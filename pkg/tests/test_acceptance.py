"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Desk regime throughout: recursive constructor, p=1, gamma=2, s0=1 (centers
are the triangular numbers), levels j <= 8.  Every tolerance is pinned here;
seeds are fixed, so each criterion is a deterministic check.

Run with `pytest tests/test_acceptance.py -v -s`.
"""
import json
import math
import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

import needlet_lab as nl
from needlet_lab import (
    ExperimentConfig,
    GammaSpec,
    ScaleParams,
    build_scale_sequence,
    build_weight_system,
    run_experiment,
)
from conftest import random_unit_vectors

FOUR_PI = 4.0 * math.pi


@pytest.fixture(scope="module")
def ws():
    params = ScaleParams(p=1.0, gamma=GammaSpec.constant(2.0), s0=1.0, j_max=8)
    return build_weight_system(build_scale_sequence(params))


def _report(num, ok, detail):
    print(f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'}: {detail}")
    return ok


def test_criterion_01_partition_of_unity(ws):
    residual = ws.partition_residual()
    assert _report(1, residual < 1e-10, f"max |sum_j b_j^2(l) - 1| = {residual:.3e} < 1e-10")


def test_criterion_02_reproducing_kernel():
    rng = np.random.default_rng(6021023)
    rule = nl.gauss_legendre_sphere(90)
    worst = 0.0
    for _ in range(20):
        x, y = random_unit_vectors(rng, 2)
        ell = int(rng.integers(0, 46))
        ellp = int(rng.integers(0, 46))

        def f(nodes):
            zl = (2 * ell + 1) / FOUR_PI * nl.legendre_p(ell, nodes @ x)
            zlp = (2 * ellp + 1) / FOUR_PI * nl.legendre_p(ellp, nodes @ y)
            return zl * zlp

        target = 0.0
        if ell == ellp:
            target = (2 * ell + 1) / FOUR_PI * float(nl.legendre_p(ell, float(x @ y)))
        worst = max(worst, abs(nl.integrate(rule, f) - target))
    assert _report(2, worst < 1e-9, f"cubature reproducing-kernel error = {worst:.3e} < 1e-9")


def test_criterion_03_exact_normalization(ws):
    rng = np.random.default_rng(17)
    xs = random_unit_vectors(rng, 6)
    gamma = nl.covariance(ws, 5, "field_points", points=xs)
    diag_err = float(np.max(np.abs(np.diag(gamma.entries) - 1.0)))
    rep = run_experiment(
        ws, ExperimentConfig(kind="fdd_1d", j=5, nu_t=100.0, reps=10_000, seed=51_100)
    )
    var = rep.empirical["variance"]
    se = math.sqrt((rep.empirical["cum4"] + 2.0 * var**2) / rep.reps)
    ok = diag_err < 1e-12 and abs(var - 1.0) <= 3.0 * se
    assert _report(
        3, ok, f"diag err = {diag_err:.2e} < 1e-12; MC Var = {var:.4f} within 3se = {3 * se:.4f} of 1"
    )


def test_criterion_04_sigma_sq_asymptotics(ws):
    r = ws.cb_ratios()
    jm = ws.j_max
    rel = abs(r[jm] - r[jm - 1]) / r[jm]
    assert _report(
        4, rel < 0.05, f"sigma_j^2 pi/(S_j^2 eps_j) rel change {rel:.4f} < 0.05 (C_b ~ {r[jm]:.4f})"
    )


def test_criterion_05_fourth_cumulant_oracle(ws):
    rep = run_experiment(
        ws, ExperimentConfig(kind="fdd_1d", j=4, nu_t=50.0, reps=20_000, seed=4242)
    )
    k4 = rep.empirical["cum4"]
    exact = rep.oracle["cum4_exact"]
    se = rep.empirical["cum4_se"]
    ok = abs(k4 - exact) <= 4.0 * se
    assert _report(
        5, ok, f"MC k4 = {k4:.4f} vs exact {exact:.4f}, |diff| = {abs(k4 - exact):.4f} <= 4se = {4 * se:.4f}"
    )


def test_criterion_06_functional_identities(ws):
    worst = 0.0
    for j in range(2, 9):
        for nu in (25.0, 50.0, 100.0, 200.0):
            m = nl.expected_functional_moments(ws, j, nu)
            target = FOUR_PI / nu
            worst = max(worst, abs(m.identity_residual - target) / target)
    rep = run_experiment(
        ws, ExperimentConfig(kind="functional_l2", j=3, nu_t=25.0, reps=5_000, seed=62_832)
    )
    mean = rep.empirical["norm_sq_mean"]
    se = rep.empirical["norm_sq_mean_se"]
    ok = worst < 1e-10 and abs(mean - FOUR_PI) <= 3.0 * se
    assert _report(
        6,
        ok,
        f"identity residual rel err {worst:.2e} < 1e-10 on desk grid; "
        f"MC E||Psi||^2 = {mean:.4f} within 3se = {3 * se:.4f} of 4pi",
    )


def test_criterion_07_rate_reproduction(ws):
    """Slope of empirical d_W vs nu at j=3 plus bound domination.

    The W1 estimator noise floor is sqrt(pi/(2 reps)); at the desk cap of
    2e4 replications it exceeds the true distance for nu >= 400, so the
    replication count here is raised to 4e5 (the criterion's own wall-clock
    budget accommodates it) to make the rate resolvable.  See the decisions
    ledger for the floor analysis.
    """
    nus = (25.0, 100.0, 400.0, 1600.0)
    dws, bounds, ses = [], [], []
    for nu in nus:
        rep = run_experiment(
            ws, ExperimentConfig(kind="fdd_1d", j=3, nu_t=nu, reps=400_000, seed=20240811)
        )
        dws.append(rep.empirical["d_w"])
        bounds.append(rep.bounds["wasserstein"])
        ses.append(rep.empirical["d_w_se"])
    slope = float(np.polyfit(np.log(nus), np.log(dws), 1)[0])
    dominated = all(d <= b + 3.0 * s for d, b, s in zip(dws, bounds, ses))
    ok = -0.65 <= slope <= -0.35 and dominated
    assert _report(
        7,
        ok,
        f"log-log slope = {slope:.3f} in [-0.65, -0.35]; "
        f"d_W <= bound + 3se at every nu: {dominated} (d_W = {[round(v, 5) for v in dws]})",
    )


def test_criterion_08_coefficient_clt(ws):
    rep = run_experiment(
        ws, ExperimentConfig(kind="coeff_1d_normalized", j=5, nu_t=100.0, reps=10_000, seed=808)
    )
    d_w = rep.empirical["d_w"]
    bound = rep.bounds["wasserstein"]
    se = rep.empirical["d_w_se"]
    ok = d_w <= bound + 3.0 * se
    assert _report(
        8, ok, f"d_W(beta~, N(0,1)) = {d_w:.4f} <= bound {bound:.4f} + 3se {3 * se:.4f}"
    )


def test_criterion_09_multivariate_covariance(ws):
    # relative Frobenius distance ||G^ - G||_F / ||G||_F; the absolute form
    # at reps=1e4 sits below the estimator's own expected error for d=5
    # (see decisions ledger)
    errs = {}
    for reps in (10_000, 40_000):
        rep = run_experiment(
            ws, ExperimentConfig(kind="fdd_multi", j=4, nu_t=100.0, reps=reps, seed=2718, d=5)
        )
        errs[reps] = rep.empirical["cov_error_rel"]
    ok = errs[10_000] < 0.05 and errs[40_000] < 0.03
    assert _report(
        9,
        ok,
        f"rel Frobenius error {errs[10_000]:.4f} < 0.05 at 1e4 reps, "
        f"{errs[40_000]:.4f} < 0.03 at 4e4 reps",
    )


def test_criterion_10_reconstruction_identity(ws, frame_j4):
    rng = np.random.default_rng(1010)
    xs = random_unit_vectors(rng, 20)
    worst = 0.0
    for seed in (1, 2, 3, 4):
        sample = nl.sample_poisson_field(60.0, nl.derive_seed(5150, seed))
        beta = nl.coefficients(frame_j4, sample, "raw")
        direct = nl.eval_field(ws, 4, sample, xs)
        recon = nl.reconstruct(frame_j4, beta, xs)
        worst = max(worst, float(np.max(np.abs(recon - direct) / np.maximum(1.0, np.abs(direct)))))
    assert _report(10, worst < 1e-8, f"max relative reconstruction error = {worst:.2e} < 1e-8")


def test_criterion_11_determinism_across_threads(ws, tmp_path):
    cfg = tmp_path / "desk.cfg"
    cfg.write_text(
        "scale.p = 1.0\nscale.gamma.kind = constant\nscale.gamma.value = 2.0\n"
        "scale.s0 = 1.0\nscale.constructor = recursive\nscale.j_max = 5\n"
    )
    blobs = []
    for threads, name in (("1", "t1"), ("8", "t8")):
        out = tmp_path / name
        env = dict(os.environ, NEEDLET_LAB_THREADS=threads)
        proc = subprocess.run(
            [
                sys.executable, "-m", "needlet_lab.cli", "clt",
                "--config", str(cfg), "--kind", "coeff_1d_normalized", "--j", "4",
                "--nu", "25,50", "--reps", "500", "--seed", "11", "--out", str(out),
            ],
            capture_output=True,
            env=env,
        )
        assert proc.returncode == 0, proc.stderr.decode()
        blob = b""
        for fname in (
            "report_coeff_1d_normalized_j4_nu25.json",
            "report_coeff_1d_normalized_j4_nu50.json",
            "sweep_coeff_1d_normalized.csv",
        ):
            blob += (out / fname).read_bytes()
        blobs.append(blob)
    ok = blobs[0] == blobs[1]
    assert _report(11, ok, "byte-identical JSON/CSV with NEEDLET_LAB_THREADS in {1, 8}")


def test_criterion_12_regime_tables(ws, tmp_path):
    cfg = tmp_path / "desk.cfg"
    cfg.write_text(
        "scale.p = 1.0\nscale.gamma.kind = constant\nscale.gamma.value = 2.0\n"
        "scale.s0 = 1.0\nscale.constructor = recursive\nscale.j_max = 8\n"
    )
    from needlet_lab.cli import main

    out = tmp_path / "tables"
    code = main(
        ["tables", "--config", str(cfg), "--nu", "100,1000,10000", "--alpha", "1.0", "--out", str(out)]
    )
    assert code == 0
    rows = json.loads((out / "tables.json").read_text())["rows"]

    # independent brute-force scan with exact rational centers
    exponents = {
        "coeff_1d": 2,
        "coeff_multi_raw": 4,
        "coeff_multi_normalized": 10,
        "fdd": 4,
        "sobolev": 4,  # alpha = 1
    }

    def brute(nu, e):
        s, best = Fraction(1), None
        for j in range(1, 9):
            s = s * (1 + Fraction(2, j))
            if s**e <= Fraction(int(nu)):
                best = j
        return best

    mismatches = [
        (row["context"], row["nu_t"])
        for row in rows
        if row["j_max"] != brute(row["nu_t"], exponents[row["context"]])
    ]
    assert _report(12, not mismatches, f"tables match brute-force scan for all {len(rows)} rows")
