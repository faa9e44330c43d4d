"""Desk-scale acceptance checks.

Each test prints exactly one ``[PASS]/[FAIL] criterion N: ...`` line
(run with ``pytest -s tests/test_acceptance.py`` to see them all) and
asserts the same text. Numbers quoted in the details are computed fresh
on every run; nothing here is loosened to fit an implementation.
"""

import math
import time

import numpy as np
import pytest

from srais import (
    EtaPolicy,
    Gaussian,
    GridDensity,
    StudentT,
    kl_divergence,
    rar_eta_from_log,
    rate_regression,
    verify_lemma2,
)
from srais.config import load_config
from srais.experiments import build_bundle, run_experiment, run_replicate

# closed form KL(N(0,1) || N(0,4)) = (log 4 + 1/4 - 1) / 2
KL_CLOSED = 0.5 * (math.log(4.0) + 0.25 - 1.0)
KL_REFERENCE = 0.318147


def _report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    print(line)
    assert ok, line


def _default_grids():
    f = GridDensity.from_density(Gaussian([0.0], 1.0), -20.0, 20.0, 8192)
    q1 = GridDensity.from_density(Gaussian([0.0], 4.0), -20.0, 20.0, 8192)
    return f, q1


@pytest.fixture(scope="module")
def toy_comparison():
    """Both exponent policies on the reduced 16-d cold start preset."""
    adaptive_cfg = load_config("cold-start-16-small")
    constant_cfg = adaptive_cfg.with_overrides(
        eta_policy=EtaPolicy(kind="constant", value=1.0)
    )
    started = time.perf_counter()
    arms = {}
    for key, cfg in (("adaptive", adaptive_cfg), ("constant", constant_cfg)):
        bundle = build_bundle(cfg)
        arms[key] = [run_replicate(cfg, bundle, i) for i in range(cfg.replicates)]
        assert not any(r.failed for r in arms[key])
    return arms, time.perf_counter() - started


@pytest.fixture(scope="module")
def blr_comparison():
    """Both exponent policies on the reduced logistic regression preset."""
    adaptive_cfg = load_config("blr-synthetic-small")
    constant_cfg = adaptive_cfg.with_overrides(
        eta_policy=EtaPolicy(kind="constant", value=1.0)
    )
    started = time.perf_counter()
    arms = {}
    majority = None
    for key, cfg in (("adaptive", adaptive_cfg), ("constant", constant_cfg)):
        bundle = build_bundle(cfg)
        majority = bundle.dataset.majority_accuracy
        arms[key] = [run_replicate(cfg, bundle, i) for i in range(cfg.replicates)]
        assert not any(r.failed for r in arms[key])
    return arms, majority, time.perf_counter() - started


def test_criterion_1_contraction_bound_on_the_default_grid():
    started = time.perf_counter()
    f, q1 = _default_grids()
    grid_kl = kl_divergence(f, q1)
    schedules = {
        "constant 0.5": [0.5] * 50,
        "0.5/k": [0.5 / k for k in range(1, 51)],
        "0.5/sqrt(k)": [0.5 / math.sqrt(k) for k in range(1, 51)],
    }
    min_slack = math.inf
    for etas in schedules.values():
        reports = verify_lemma2(f, q1, etas, tolerance=1e-6)
        min_slack = min(min_slack, min(r.slack for r in reports))
    elapsed = time.perf_counter() - started
    kl_ok = (
        abs(KL_CLOSED - KL_REFERENCE) < 5e-7 and abs(grid_kl - KL_CLOSED) < 1e-9
    )
    ok = kl_ok and min_slack >= -1e-6 and elapsed < 5.0
    _report(
        1,
        ok,
        f"tv bound held for 3 schedules x 50 steps (min slack {min_slack:.3e}), "
        f"KL(f||q1)={grid_kl:.6f} vs closed form {KL_CLOSED:.6f}, {elapsed:.2f}s",
    )


def test_criterion_2_decay_rate_under_inverse_sqrt_steps():
    started = time.perf_counter()
    f, q1 = _default_grids()
    etas = [0.5 / math.sqrt(k) for k in range(1, 51)]
    reports = verify_lemma2(f, q1, etas, tolerance=1e-6)
    steps = np.array([r.step for r in reports if 5 <= r.step <= 50], dtype=float)
    tvs = np.array([r.tv for r in reports if 5 <= r.step <= 50])
    slope, r2 = rate_regression(steps, tvs, 0.5)
    elapsed = time.perf_counter() - started
    ok = slope < 0.0 and r2 >= 0.9 and elapsed < 5.0
    _report(
        2,
        ok,
        f"log tv vs sqrt(n) over n in [5, 50]: slope {slope:.4f}, "
        f"R^2 {r2:.4f}, {elapsed:.2f}s",
    )


def test_criterion_3_tempered_weight_moments_under_student_proposal():
    started = time.perf_counter()
    rng = np.random.default_rng(2026)
    target = Gaussian([0.0], 1.0)
    proposal = StudentT([0.0], [1.0], 3.0)
    draws = proposal.sample(100_000, rng)
    lw = target.log_density(draws) - proposal.log_density(draws)
    raw = np.exp(lw)
    raw_se = raw.std(ddof=1) / math.sqrt(raw.size)
    clauses = [abs(raw.mean() - 1.0) <= 5.0 * raw_se]
    details = [f"mean(W)={raw.mean():.4f} (se {raw_se:.4f})"]
    for eta in (0.25, 0.5, 0.75):
        tempered = np.exp(eta * lw)
        se = tempered.std(ddof=1) / math.sqrt(tempered.size)
        clauses.append(tempered.mean() <= 1.0 + 3.0 * se)
        clauses.append(tempered.var(ddof=1) <= raw.var(ddof=1))
        details.append(f"eta={eta}: mean {tempered.mean():.4f}, var ratio "
                       f"{tempered.var(ddof=1) / raw.var(ddof=1):.3e}")
    elapsed = time.perf_counter() - started
    ok = all(clauses) and elapsed < 2.0
    _report(3, ok, "; ".join(details) + f", {elapsed:.2f}s")


def test_criterion_4_adaptive_exponent_range_order_and_endpoints():
    started = time.perf_counter()
    rng = np.random.default_rng(44)
    alphas = np.linspace(0.0, 1.0, 21)
    in_range = True
    alpha_one_smallest = True
    for _ in range(100):
        m = int(rng.integers(2, 65))
        lw = rng.normal(scale=rng.uniform(0.1, 30.0), size=m)
        etas = {a: rar_eta_from_log(lw, a) for a in alphas}
        in_range &= all(0.0 <= e <= 1.0 for e in etas.values())
        alpha_one_smallest &= all(etas[1.0] <= e + 1e-12 for e in etas.values())
    uniform_exact = all(
        rar_eta_from_log(np.full(m, -3.7), a) == 1.0 for m in (2, 17) for a in alphas
    )
    one_hot = np.concatenate([[0.0], np.full(9, -np.inf)])
    one_hot_exact = rar_eta_from_log(one_hot, 1.0) == 0.0
    elapsed = time.perf_counter() - started
    ok = in_range and alpha_one_smallest and uniform_exact and one_hot_exact and elapsed < 1.0
    _report(
        4,
        ok,
        f"100 fuzzed batches x 21 orders: range ok={in_range}, "
        f"alpha=1 smallest={alpha_one_smallest}, uniform exact={uniform_exact}, "
        f"one-hot exact={one_hot_exact}, {elapsed:.2f}s",
    )


def test_criterion_5_adaptive_beats_constant_on_the_cold_start(toy_comparison):
    arms, elapsed = toy_comparison
    lse = {
        key: np.log([r.records[-1].squared_error for r in reps])
        for key, reps in arms.items()
    }
    mean_adaptive = lse["adaptive"].mean()
    mean_constant = lse["constant"].mean()
    n = lse["adaptive"].size
    se_diff = math.sqrt(
        lse["adaptive"].var(ddof=1) / n + lse["constant"].var(ddof=1) / n
    )
    gap = mean_constant - mean_adaptive
    ok = mean_adaptive < mean_constant and gap > se_diff and elapsed < 600.0
    _report(
        5,
        ok,
        f"final mean log sq error: adaptive {mean_adaptive:.4f} vs constant "
        f"{mean_constant:.4f} over {n} replicates (gap {gap:.4f}, se {se_diff:.4f}), "
        f"{elapsed:.1f}s",
    )


def test_criterion_6_adaptive_exponent_rises_toward_one(toy_comparison):
    arms, _ = toy_comparison
    first = np.median([r.records[1].eta for r in arms["adaptive"]])
    final = np.median([r.records[-1].eta for r in arms["adaptive"]])
    ok = first < final and final >= 0.9
    _report(
        6,
        ok,
        f"median adaptive exponent: iteration 1 {first:.4f} -> final {final:.4f} "
        f"(needs rise and final >= 0.9)",
    )


def test_criterion_7_average_weight_converges_at_the_monte_carlo_rate():
    started = time.perf_counter()
    cfg = load_config("dn-diagnostic")
    bundle = build_bundle(cfg)
    reps = [run_replicate(cfg, bundle, i) for i in range(cfg.replicates)]
    assert not any(r.failed for r in reps)
    finals = np.array([abs(r.records[-1].d_n - 1.0) for r in reps])
    # pass 0 draws from the target itself: its average weight is exactly 1,
    # so the rate fit starts at pass 1
    ns = np.array([rec.n_particles for rec in reps[0].records[1:]], dtype=float)
    devs = np.array([[rec.d_n - 1.0 for rec in r.records[1:]] for r in reps])
    rms = np.sqrt(np.mean(devs**2, axis=0))
    slope = float(np.polyfit(np.log(ns), np.log(rms), 1)[0])
    elapsed = time.perf_counter() - started
    ok = finals.max() < 0.05 and -0.65 <= slope <= -0.35 and elapsed < 60.0
    _report(
        7,
        ok,
        f"max |D_n - 1| at n=10^4: {finals.max():.5f} over {len(reps)} replicates, "
        f"log-log slope {slope:.4f} for n in [2e2, 1e4], {elapsed:.1f}s",
    )


def test_criterion_8_logistic_accuracy_beats_majority_and_tracks_constant(blr_comparison):
    arms, majority, elapsed = blr_comparison
    acc = {
        key: float(np.mean([r.records[-1].extras["accuracy"] for r in reps]))
        for key, reps in arms.items()
    }
    ok = (
        acc["adaptive"] >= majority + 0.10
        and acc["adaptive"] >= acc["constant"] - 0.02
        and elapsed < 300.0
    )
    _report(
        8,
        ok,
        f"mean final accuracy: adaptive {acc['adaptive']:.4f}, constant "
        f"{acc['constant']:.4f}, majority {majority:.4f}, {elapsed:.1f}s",
    )


def test_criterion_9_reruns_are_byte_identical(tmp_path):
    identical = True
    checked = []
    for preset in ("cold-start-16-small", "blr-synthetic-small"):
        cfg = load_config(preset).with_overrides(replicates=1, figures=False)
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{preset}-{tag}"
            run_experiment(cfg, out_dir=out)
            outs.append(out)
        for name in ("trace_rep0.csv", "aggregate.csv", "eta_quantiles.csv"):
            same = (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
            identical &= same
            checked.append(f"{preset}/{name}: {'same' if same else 'DIFFERS'}")
    _report(9, identical, "; ".join(checked))
