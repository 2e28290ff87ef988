"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Criterion 6 runs twenty seeded counter trials with a 100 s timeout each; it
dominates the runtime of the whole suite.
"""

import itertools
import math
import subprocess
import sys

import numpy as np
import pytest

from causalfalsify.acquisition import (
    DistPair,
    forecast_distribution,
    kl,
    psi_b,
    psi_b_prime,
    psi_b_prime_literal,
)
from causalfalsify.bayesnet import condition, marginal
from causalfalsify.gp import Dataset, KernelConfig, fit, predict, prob_positive
from causalfalsify.harness import load_config, run_experiment
from causalfalsify.stl import boolean_sat, parse_formula, robustness
from causalfalsify.systems import CounterSystem

from conftest import at_net, counter_net, sine_net
from randgen import random_formula, random_trace


@pytest.fixture
def report(capsys):
    """Print a verdict line past pytest's capture, then assert it."""

    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        assert ok, f"criterion {number}: {detail}"

    return emit


def test_criterion_1_bayesian_tables(report):
    sine_cond = condition(sine_net(), "phi", False)
    point = sine_cond.prob({"phi12": False, "phi34": False, "phi": False})
    rest = sine_cond.probs.sum() - point
    cond6 = condition(at_net(), "phi", False)
    pv = marginal(cond6, "phi_v")
    pw_ff = 1 - marginal(cond6, "phi_w")
    ok = abs(point - 1) <= 1e-12 and abs(rest) <= 1e-12 and abs(pv - 0.908) <= 5e-4 and abs(pw_ff - 0.917) <= 5e-4
    report(1, ok, f"sine-net point mass {point!r} (rest {rest:.1e}); Pr(v=tt|ff)={pv:.6f}, Pr(w=ff|ff)={pw_ff:.6f}")


def test_criterion_2_prime_coefficients(report):
    pair6 = DistPair.from_net(at_net())
    c6 = dict(zip(pair6.ids, pair6.coefficients))
    c1 = DistPair.from_net(counter_net(5)).coefficients
    err1 = max(abs(c1[t] - (1 - 0.2 ** (t + 1))) for t in range(6))
    ok = abs(c6["phi_v"] - 0.082) <= 5e-4 and abs(c6["phi_w"] - 0.817) <= 5e-4 and err1 <= 1e-12
    report(2, ok, f"transmission net v={c6['phi_v']:.6f} w={c6['phi_w']:.6f}; counter chain max error {err1:.1e}")


def test_criterion_3_point_mass_identity(report):
    pair = DistPair.from_net(sine_net())
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        q = prob_positive(rng.normal(size=3) * 2, rng.uniform(0.01, 2, size=3))
        expected = -sum(math.log(1 - qi) for qi in q)
        worst = max(worst, abs(psi_b(q, pair) - expected))
    report(3, worst <= 1e-12, f"max |psi_B + sum ln(1 - q)| over 100 forecasts = {worst:.2e}")


def _dense_solve(x, z, probes, config):
    """Posterior by explicit pairwise kernel and LU solves (no Cholesky)."""
    l2 = config.length_scale ** 2
    K = np.exp(-((x[:, None] - x[None]) ** 2).sum(-1) / (2 * l2)) + config.jitter * np.eye(len(x))
    ks = np.exp(-((probes[:, None] - x[None]) ** 2).sum(-1) / (2 * l2))
    mean = ks @ np.linalg.solve(K, z)
    var = 1.0 - np.einsum("ij,ji->i", ks, np.linalg.solve(K, ks.T))
    return mean, np.maximum(var, 0.0), np.linalg.cond(K)


def test_criterion_4_gp(report):
    rng = np.random.default_rng(4)
    cfg = KernelConfig()
    worst, failing = 0.0, []
    for _ in range(50):
        n, d = int(rng.integers(1, 31)), int(rng.integers(1, 5))
        x, z = rng.random((n, d)), rng.normal(size=n) * 3
        probes = rng.random((10, d))
        m_ref, v_ref, cond = _dense_solve(x, z, probes, cfg)
        m, v = fit(Dataset(x, z), cfg).predict_many(probes)
        err = max(np.abs(m - m_ref).max(), np.abs(v - v_ref).max())
        worst = max(worst, err)
        if err > 1e-8:
            failing.append(cond)

    grid = np.array([[0.1, 0.1], [0.9, 0.2], [0.5, 0.8], [0.2, 0.7], [0.8, 0.9]])
    zg = rng.normal(size=5) * 4
    post = fit(Dataset(grid, zg), KernelConfig(0.2, jitter=0.0))
    interp = max(max(abs(predict(post, xi)[0] - zi), predict(post, xi)[1]) for xi, zi in zip(grid, zg))

    far = fit(Dataset([[0.0, 0.0], [0.05, 0.0]], [3.0, -2.0]), KernelConfig(0.05))
    fm, fv = predict(far, [1.0, 1.0])
    prior = max(abs(fm), abs(fv - 1))
    ok = worst <= 1e-8 and interp <= 1e-6 and prior <= 1e-6
    conds = f" (condition numbers {min(failing):.0e}..{max(failing):.0e})" if failing else ""
    report(
        4,
        ok,
        f"oracle error {worst:.1e}, {len(failing)}/50 datasets over 1e-8{conds}; "
        f"interpolation error {interp:.1e}; prior deviation {prior:.1e}",
    )


def test_criterion_5_stl(report):
    rng = np.random.default_rng(5)
    incoherent = 0
    pairs = 1200
    for _ in range(pairs):
        f = random_formula(rng, depth=3)
        tr = random_trace(rng, n=30, integer=bool(rng.integers(2)))
        r, s = robustness(f, tr), boolean_sat(f, tr)
        if (r > 0 and not s) or (r < 0 and s):
            incoherent += 1

    N = 2
    system, req = CounterSystem(N), parse_formula(f"G[{N},{N}](cnt <= {N})")
    mismatches = 0
    for x in itertools.product(np.linspace(-1, 1, 5), repeat=N + 1):
        falsified = not boolean_sat(req, system.simulate(x))
        mismatches += falsified != all(abs(v) < 0.2 for v in x)
    ok = incoherent == 0 and mismatches == 0
    report(5, ok, f"{incoherent} incoherent of {pairs} pairs; {mismatches} grid mismatches of {5 ** (N + 1)}")


def test_criterion_6_counter_causality_helps(report):
    base = load_config("counter-n5").with_overrides(trials=10, seed=0, timeout=100.0)
    wins = {}
    for algo in ("gp-psat", "kl"):
        _, summary = run_experiment(base.with_overrides(algorithm=algo))
        wins[algo] = summary.success_count
    ok = wins["gp-psat"] <= 2 and wins["kl"] >= 3 and wins["kl"] > wins["gp-psat"]
    report(6, ok, f"GP-PSat {wins['gp-psat']}/10, psi_B {wins['kl']}/10 (need <= 2, >= 3, strictly more)")


def test_criterion_7_random_baseline(report):
    cfg = load_config("counter-n5")
    budget = 1000 - cfg.falsifier.init_samples  # 1000 simulations per trial in total
    _, summary = run_experiment(cfg.with_overrides(algorithm="random", trials=10, seed=0, max_iterations=budget))
    wins = summary.success_count
    note = " (single success tolerated as a flake)" if wins == 1 else ""
    report(7, wins <= 1, f"random baseline {wins}/10 with 1000 samples each{note}")


def test_criterion_8_kl_and_forecast(report):
    rng = np.random.default_rng(8)
    negatives = equality = 0.0
    for _ in range(100):
        p, q = rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))
        negatives = min(negatives, kl(p, q))
        equality = max(equality, abs(kl(p, p)))
    distinct_positive = all(kl(rng.dirichlet(np.ones(6)), rng.dirichlet(np.ones(6))) > 0 for _ in range(100))
    norm = max(abs(forecast_distribution(rng.uniform(0, 1, size=n)).sum() - 1) for n in range(1, 11))
    pair = DistPair.from_net(at_net())
    qs = rng.uniform(0.01, 0.99, size=(50, 3))
    literal = np.array([psi_b_prime_literal(q, pair) for q in qs])
    expanded = psi_b_prime(qs, pair)
    var = float(np.var(literal - expanded))
    same_argmin = int(np.argmin(literal)) == int(np.argmin(expanded))
    ok = negatives >= 0 and distinct_positive and equality <= 1e-12 and norm <= 1e-9 and var <= 1e-18 and same_argmin
    report(
        8,
        ok,
        f"min kl {negatives:.1e}, |kl(p,p)| <= {equality:.1e}, sum error {norm:.1e}, "
        f"offset variance {var:.1e}, same argmin {same_argmin}",
    )


def test_criterion_9_cli_determinism(report, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}.csv"
        cmd = [
            sys.executable, "-m", "causalfalsify.cli", "run", "--config", "counter-n5",
            "--trials", "3", "--seed", "7", "--max-iterations", "40", "--no-timing", "--out", str(out),
        ]
        subprocess.run(cmd, check=False, capture_output=True)
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    report(9, ok, f"two CLI runs byte-identical: {outs[0] == outs[1]} ({len(outs[0])} bytes)")
