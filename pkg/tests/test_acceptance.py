"""Acceptance gate: Monte Carlo reproduction at J = 500 plus exact checks.

The grid below is run once per session (about a quarter of an hour on one
core).  Every criterion records a PASS/FAIL line that is printed in the
terminal summary.
"""

from __future__ import annotations

import numpy as np
import pytest

from mirs.cli import main
from mirs.combine import bootstrap_combine, jackknife_combine, pseudovalues
from mirs.glm import DEFAULT_TOL, expit, fit_logistic
from mirs.harness import Cell, noise_variance, run_grid
from mirs.rng import DEFAULT_SEED, StreamKey

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

J = 500
NOISE_DRAWS = 50
JK = [Cell("jackknife", 25, m, "reimpute") for m in (1, 5, 10, 25, 50, 200)]
JK_REUSE = [Cell("jackknife", 25, m, "reuse") for m in (1, 25)]
BOOT25 = [Cell("bootstrap", 25, 1, "reimpute")] + [Cell("bootstrap", 25, m, "reuse") for m in (1, 25)]
BOOT100 = [Cell("bootstrap", 100, m, "reimpute") for m in (1, 5, 10, 25, 50)]
BOOT100_REUSE = [Cell("bootstrap", 100, m, "reuse") for m in (1, 25)]
BOOT250 = [Cell("bootstrap", 250, m, "reimpute") for m in (10, 50)]
CELLS = JK + JK_REUSE + BOOT25 + BOOT100 + BOOT100_REUSE + BOOT250

REPORT: list[str] = []


def _report(number, title, ok, detail):
    REPORT.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}")
    assert ok, f"criterion {number} ({title}) failed: {detail}"


@pytest.fixture(scope="session")
def grid():
    result = run_grid(CELLS, J, seed=DEFAULT_SEED, noise_draws=NOISE_DRAWS)
    return {(c.method, c.G_or_B, c.m, c.mode): (m, result.records[c]) for c, m in zip(result.cells, result.metrics)}


@pytest.fixture(scope="session")
def full_weight_reuse():
    cells = JK_REUSE + BOOT25[1:] + BOOT100_REUSE
    result = run_grid(cells, J, seed=DEFAULT_SEED, reuse_weights="full")
    return dict(zip(result.cells, result.metrics))


def _metrics(grid, cell):
    return grid[(cell.method, cell.G_or_B, cell.m, cell.mode)][0]


def test_criterion_01_jackknife_overcovers_at_m1(grid):
    cov = _metrics(grid, JK[0]).coverage
    _report(1, "jackknife G=25 m=1 coverage >= 0.995", cov >= 0.995, f"coverage={cov:.4f}")


def test_criterion_02_jackknife_nominal_at_m200(grid):
    cov = _metrics(grid, JK[-1]).coverage
    _report(2, "jackknife G=25 m=200 coverage in [0.91, 0.97]", 0.91 <= cov <= 0.97, f"coverage={cov:.4f}")


def test_criterion_03_jackknife_coverage_monotone(grid):
    seq = [_metrics(grid, c).coverage for c in JK]
    ok = all(b <= a + 0.02 for a, b in zip(seq, seq[1:]))
    _report(3, "jackknife coverage non-increasing in m (slack 0.02)", ok,
            "m=1,5,10,25,50,200: " + ", ".join(f"{c:.3f}" for c in seq))


def test_criterion_04_bootstrap_nominal_and_flat(grid):
    cov25 = _metrics(grid, BOOT25[0]).coverage
    flat = [_metrics(grid, c).coverage for c in BOOT100 if c.m in (1, 5, 25)]
    spread = max(flat) - min(flat)
    ok = 0.92 <= cov25 <= 0.98 and spread <= 0.04
    _report(4, "bootstrap B=25 m=1 in [0.92, 0.98]; B=100 spread over m<=0.04", ok,
            f"B=25 coverage={cov25:.4f}; B=100 m=1,5,25: {', '.join(f'{c:.3f}' for c in flat)} "
            f"(spread {spread:.3f})")


def test_bootstrap_flat_over_wider_m_range(grid):
    covs = [_metrics(grid, c).coverage for c in BOOT100]
    spread = max(covs) - min(covs)
    _report("4b", "bootstrap B=100 spread over m in {1,5,10,25,50} <= 0.04", spread <= 0.04,
            ", ".join(f"{c:.3f}" for c in covs) + f" (spread {spread:.3f})")


def test_criterion_05_reuse_undercovers(grid):
    reuse = JK_REUSE + BOOT25[1:] + BOOT100_REUSE
    covs = {f"{c.method[0]}{c.G_or_B}/m{c.m}": _metrics(grid, c).coverage for c in reuse}
    ok = all(v < 0.85 for v in covs.values())
    _report(5, "every reuse cell coverage < 0.85", ok, ", ".join(f"{k}={v:.3f}" for k, v in covs.items()))


def test_reuse_with_full_sample_weights_undercovers(full_weight_reuse):
    covs = {f"{c.method[0]}{c.G_or_B}/m{c.m}": m.coverage for c, m in full_weight_reuse.items()}
    ok = all(v < 0.85 for v in covs.values())
    _report("5b", "reuse with full-sample weights: every cell coverage < 0.85", ok,
            ", ".join(f"{k}={v:.3f}" for k, v in covs.items()))


def test_criterion_06_rmse_and_bias(grid):
    targets = [c for c in JK if c.m >= 25] + BOOT250
    rmse = {f"{c.method[0]}{c.G_or_B}/m{c.m}": _metrics(grid, c).rmse for c in targets}
    worst_bias = max(abs(_metrics(grid, c).bias) for c in CELLS)
    ok = all(0.0185 <= v <= 0.0250 for v in rmse.values()) and worst_bias < 0.003
    _report(6, "rMSE in [0.0185, 0.0250]; |bias| < 0.003 everywhere", ok,
            ", ".join(f"{k}={v:.4f}" for k, v in rmse.items()) + f"; max |bias|={worst_bias:.4f}")


def test_criterion_07_jackknife_efficiency(grid):
    jk = _metrics(grid, JK[-1]).rmse
    bs = _metrics(grid, BOOT250[-1]).rmse
    _report(7, "jackknife m=200 rMSE <= bootstrap B=250 m=50 rMSE + 0.001", jk <= bs + 0.001,
            f"jackknife={jk:.5f}, bootstrap={bs:.5f}")


def test_criterion_08_algebraic_identities():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(200):
        thetas = rng.normal(0.5, 0.05, rng.integers(2, 300))
        G = len(thetas)
        pv = [G * (sum(thetas) / G) - (G - 1) * t for t in thetas]
        pv_mean = sum(pv) / G
        pv_var = sum((v - pv_mean) ** 2 for v in pv) / (G - 1)
        jk = jackknife_combine(thetas)
        mean = sum(thetas) / G
        two_pass = sum((t - mean) ** 2 for t in thetas) / (G - 1)
        worst = max(worst,
                    abs(jk.variance - pv_var / G),
                    abs(bootstrap_combine(thetas).variance - two_pass),
                    abs(pv_mean - jk.point),
                    abs(pseudovalues(thetas).omega2_hat / G - jk.variance))
    _report(8, "combining-rule identities to 1e-12", worst < 1e-12, f"max deviation={worst:.2e}")


def test_criterion_09_noise_scales_with_m(dgp_dataset):
    K = 200
    key = StreamKey(DEFAULT_SEED, (9,))
    v1 = noise_variance(dgp_dataset, K, key.child(1), m=1)
    v10 = noise_variance(dgp_dataset, K, key.child(10), m=10)
    ratio = v1 / v10
    _report(9, "Var(m=1) / Var(m=10) in [7, 14] at K=200", 7 <= ratio <= 14,
            f"c2_hat={v1:.3e}, var(m=10)={v10:.3e}, ratio={ratio:.2f}")


def _fd_component(beta, e, X, y, w):
    """Central difference of the weighted log-likelihood along e.

    Differences are taken case by case before summing, so the large
    log-likelihood totals never cancel against each other.
    """
    up, down = X @ (beta + e), X @ (beta - e)
    per_case = y * (up - down) - (np.logaddexp(0.0, up) - np.logaddexp(0.0, down))
    return float(np.dot(w, per_case)) / (2 * np.max(np.abs(e)))


def test_criterion_10_glm_correctness():
    y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0], dtype=float)
    closed = abs(fit_logistic(np.ones((10, 1)), y).beta[0] - np.log(0.3 / 0.7))
    worst = 0.0
    for seed in range(50):
        rng = np.random.default_rng(1000 + seed)
        n = int(rng.integers(80, 400))
        X = np.column_stack([np.ones(n), rng.normal(size=(n, 3))])
        yy = (rng.random(n) < expit(X @ rng.normal(scale=0.7, size=4))).astype(float)
        w = rng.uniform(0.3, 3.0, n)
        fit = fit_logistic(X, yy, w)
        h = 1e-6
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            g = _fd_component(fit.beta, e, X, yy, w)
            worst = max(worst, abs(g))
    ok = closed < 1e-8 and worst < 10 * DEFAULT_TOL
    _report(10, "intercept MLE = logit(ybar); finite-difference score < 10 tol", ok,
            f"closed-form error={closed:.1e}, max |fd score|={worst:.1e}")


def test_criterion_11_simulate_bytes_identical_across_workers(tmp_path):
    outs = []
    for workers in (1, 2, 4):
        path = tmp_path / f"w{workers}.csv"
        code = main(["simulate", "--method", "jackknife", "--groups", "25", "--m", "1,5", "--mode", "both",
                     "--reps", "24", "--workers", str(workers), "--format", "csv", "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    _report(11, "simulate CSV byte-identical for 1, 2 and 4 workers", outs[0] == outs[1] == outs[2],
            f"{len(outs[0])} bytes")


def test_jackknife_inflation_matches_noise_theory(grid):
    _, rec1 = grid[("jackknife", 25, 1, "reimpute")]
    _, rec200 = grid[("jackknife", 25, 200, "reimpute")]
    ok_recs = [(a, b) for a, b in zip(rec1, rec200) if not (a.failed or b.failed)]
    excess = np.mean([a.variance - b.variance for a, b in ok_recs])
    c2 = np.mean([a.c2_hat for a, _ in ok_recs])
    predicted = (25 - 1) * c2 * (1 - 1 / 200)
    rel = abs(excess - predicted) / predicted
    _report("9b", "mean V(m=1) - V(m=200) = (G-1) c2 within 40%", rel <= 0.40,
            f"excess={excess:.3e}, (G-1)c2={predicted:.3e}, relative error={rel:.2f}")
