"""Statistical invariant batteries, runnable from the CLI or the test suite.

Each battery returns a :class:`PropertyResult`; randomness is seeded so
results are reproducible. These are the heavier distribution-level checks
(moment bounds, divergence properties, convergence diagnostics), not unit
tests of single values.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .densities import Gaussian, StudentT
from .emd import GridDensity, kl_divergence, rate_regression, verify_lemma2
from .errors import VerificationError
from .estimators import snis_estimate
from .rar import rar_eta, renyi_divergence
from .sampler import SamplerSettings, SraisSampler, run
from .schedules import BandwidthPolicy, EtaPolicy, LambdaPolicy, Schedule


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: str


def check_regularized_weight_moments(seed=7, n=100_000):
    """Tempered weights keep mean at most 1 and never gain variance.

    Draws W = f/q with f standard normal and q Student-t, then checks
    E[W] = 1 within 5 standard errors, E[W**eta] <= 1 + 3 se, and
    Var[W**eta] <= Var[W] for eta in {0.25, 0.5, 0.75}.
    """
    rng = np.random.default_rng(seed)
    f = Gaussian([0.0], 1.0)
    q = StudentT([0.0], [1.0], 3.0)
    x = q.sample(n, rng)
    w = np.exp(f.log_density(x) - q.log_density(x))
    problems = []
    se_w = w.std(ddof=1) / np.sqrt(n)
    if abs(w.mean() - 1.0) > 5 * se_w:
        problems.append(f"mean(W)={w.mean():.5f} not within 5 se of 1")
    var_w = w.var(ddof=1)
    for eta in (0.25, 0.5, 0.75):
        we = w**eta
        se = we.std(ddof=1) / np.sqrt(n)
        if we.mean() > 1.0 + 3 * se:
            problems.append(f"mean(W^{eta})={we.mean():.5f} exceeds 1 + 3 se")
        if we.var(ddof=1) > var_w:
            problems.append(f"var(W^{eta})={we.var(ddof=1):.5f} exceeds var(W)={var_w:.5f}")
    detail = problems[0] if problems else f"mean(W)={w.mean():.4f}, var(W)={var_w:.4f}, n={n}"
    return PropertyResult("regularized-weight-moments", not problems, detail)


def check_exponent_properties(seed=11, n_batches=100):
    """Range, order monotonicity, and exact endpoints of the adaptive exponent."""
    rng = np.random.default_rng(seed)
    alphas = np.linspace(0.0, 1.0, 11)
    problems = []
    for _ in range(n_batches):
        m = int(rng.integers(2, 40))
        style = rng.integers(0, 3)
        if style == 0:
            w = rng.random(m)
        elif style == 1:
            w = np.exp(rng.normal(0.0, 5.0, size=m))
        else:
            w = rng.random(m) ** 8
            w[rng.integers(0, m)] = 0.0
        if w.sum() == 0:
            w[0] = 1.0
        w = w / w.sum()
        divs = [renyi_divergence(w, a) for a in alphas]
        if any(d2 < d1 - 1e-9 for d1, d2 in zip(divs, divs[1:])):
            problems.append("divergence not nondecreasing in alpha")
            break
        etas = [rar_eta(w, a) for a in alphas]
        if any(not 0.0 <= e <= 1.0 for e in etas):
            problems.append("eta left [0, 1]")
            break
        if any(e2 > e1 + 1e-9 for e1, e2 in zip(etas, etas[1:])):
            # eta = 1 - D/log m inherits reversed monotonicity
            problems.append("eta not nonincreasing in alpha")
            break
    for m in (2, 5, 64):
        uniform = np.full(m, 1.0 / m)
        if rar_eta(uniform, 0.5) != 1.0 or rar_eta(uniform, 1.0) != 1.0:
            problems.append(f"uniform batch of {m} did not give eta = 1 exactly")
        one_hot = np.zeros(m)
        one_hot[0] = 1.0
        if rar_eta(one_hot, 1.0) != 0.0:
            problems.append(f"one-hot batch of {m} did not give eta = 0 exactly at alpha=1")
    detail = problems[0] if problems else f"{n_batches} fuzzed batches x {len(alphas)} orders"
    return PropertyResult("adaptive-exponent-properties", not problems, detail)


def check_divergence_limits():
    """The closed forms at alpha = 0 and 1 match the interior formula nearby."""
    w = np.array([0.5, 0.2, 0.2, 0.05, 0.05])
    problems = []
    if abs(renyi_divergence(w, 0.999) - renyi_divergence(w, 1.0)) > 1e-3:
        problems.append("alpha -> 1 limit mismatch")
    if abs(renyi_divergence(w, 0.001) - renyi_divergence(w, 0.0)) > 1e-3:
        problems.append("alpha -> 0 limit mismatch")
    return PropertyResult(
        "divergence-limits", not problems, problems[0] if problems else "both limits within 1e-3"
    )


def check_uniform_batches_keep_eta_one(n_batches=1000, m=64):
    """Exactly uniform weight batches must give eta = 1 every single time."""
    bad = 0
    w = np.full(m, 1.0 / m)
    for _ in range(n_batches):
        if rar_eta(w, 0.5) != 1.0:
            bad += 1
    return PropertyResult(
        "uniform-batches-eta-one",
        bad == 0,
        f"{n_batches - bad}/{n_batches} batches exact",
    )


def check_contraction_bound():
    """The tv bound holds at every step for three step size schedules."""
    f = GridDensity.from_density(Gaussian([0.0], 1.0), -20.0, 20.0, 8192)
    q1 = GridDensity.from_density(Gaussian([0.0], 4.0), -20.0, 20.0, 8192)
    schedules = {
        "constant": [0.5] * 50,
        "inverse": [0.5 / k for k in range(1, 51)],
        "inverse-sqrt": [0.5 / np.sqrt(k) for k in range(1, 51)],
    }
    try:
        for etas in schedules.values():
            verify_lemma2(f, q1, etas)
    except VerificationError as exc:
        return PropertyResult("contraction-bound", False, str(exc))
    return PropertyResult("contraction-bound", True, "3 schedules x 50 steps, slack >= 0")


def check_contraction_rate():
    """log tv falls linearly in sqrt(n) under step sizes 0.5 / sqrt(k)."""
    f = GridDensity.from_density(Gaussian([0.0], 1.0), -20.0, 20.0, 8192)
    q1 = GridDensity.from_density(Gaussian([0.0], 4.0), -20.0, 20.0, 8192)
    etas = [0.5 / np.sqrt(k) for k in range(1, 51)]
    reports = verify_lemma2(f, q1, etas)
    steps = np.array([r.step for r in reports if 5 <= r.step <= 50])
    tvs = np.array([r.tv for r in reports if 5 <= r.step <= 50])
    slope, r2 = rate_regression(steps, tvs, 0.5)
    ok = slope < 0 and r2 >= 0.9
    return PropertyResult("contraction-rate", ok, f"slope={slope:.3f}, R^2={r2:.4f}")


def check_kl_monotone_under_recursion():
    """KL(f || q_k) never increases along the recursion."""
    from .emd import emd_step

    f = GridDensity.from_density(Gaussian([0.5], 1.0), -20.0, 20.0, 4096)
    q = GridDensity.from_density(Gaussian([0.0], 4.0), -20.0, 20.0, 4096)
    prev = kl_divergence(f, q)
    rng = np.random.default_rng(3)
    for _ in range(30):
        q = emd_step(q, f, float(rng.uniform(0.05, 0.95)))
        cur = kl_divergence(f, q)
        if cur > prev + 1e-8:
            return PropertyResult("kl-monotone", False, f"KL rose from {prev} to {cur}")
        prev = cur
    return PropertyResult("kl-monotone", True, f"final KL {prev:.3e}")


def check_snis_invariances(seed=23):
    """Estimates are invariant to particle permutation and weight rescaling."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(200, 3))
    lw = rng.normal(scale=3.0, size=200)
    base = snis_estimate(None, pts, lw)
    perm = rng.permutation(200)
    shuffled = snis_estimate(None, pts[perm], lw[perm])
    scaled = snis_estimate(None, pts, lw + 123.456)
    problems = []
    if not np.allclose(base.value, shuffled.value, rtol=0, atol=1e-12):
        problems.append("permutation changed the estimate")
    if not np.allclose(base.value, scaled.value, rtol=0, atol=1e-12):
        problems.append("log-weight shift changed the estimate")
    if not (1.0 <= base.ess <= base.n_used):
        problems.append("ess out of range")
    return PropertyResult(
        "snis-invariances", not problems, problems[0] if problems else "permutation + rescale exact"
    )


def check_safe_floor_and_weight_cap(seed=5):
    """The proposal never dips below lambda * q0 and tempered weights respect
    the cap 1 / (c * lambda) with c the probed safety ratio."""
    rng = np.random.default_rng(seed)
    target = Gaussian([0.0], 1.0)
    safe = StudentT([0.0], [1.0], 3.0)
    schedule = Schedule(
        LambdaPolicy("power", 0.5, 0.25),
        BandwidthPolicy("power", 0.5),
        EtaPolicy("rar", alpha=0.5),
        dim=1,
        n0=400,
        batch=200,
        iterations=12,
        subsample_rule="sqrt",
    )
    sampler = SraisSampler(target, safe, schedule, rng=rng)
    for _ in range(schedule.iterations + 1):
        sampler.step()
    # c = inf q0 / f probed on a wide grid
    grid = np.linspace(-30.0, 30.0, 20001)[:, None]
    c = float(np.exp(np.min(safe.log_density(grid) - target.log_density(grid))))
    lam_final = schedule.lambda_at(schedule.iterations)
    cap = -np.log(c * lam_final)
    reg = sampler.store.regularized_log()
    worst = float(np.max(reg))
    ok = worst <= cap + 1e-9
    return PropertyResult(
        "safe-floor-weight-cap",
        ok,
        f"max tempered log weight {worst:.4f} vs cap {cap:.4f} (c={c:.4f})",
    )


def check_average_weight_convergence(seed=13, replicates=8):
    """With eta = 1 and matched start, the running mean of raw weights
    approaches 1 at roughly the root-n rate."""
    target = Gaussian([0.0], 1.0)
    schedule = Schedule(
        LambdaPolicy("constant", 0.5),
        BandwidthPolicy("constant", 0.5),
        EtaPolicy("constant", 1.0),
        dim=1,
        n0=100,
        batch=100,
        iterations=49,
        subsample_rule="sqrt",
    )
    gaps = []
    for rep in range(replicates):
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(rep + 1)[rep])
        records = run(target, target, schedule, rng=rng)
        gaps.append([abs(r.d_n - 1.0) for r in records[1:]])
    gaps = np.asarray(gaps)
    ns = np.array([schedule.store_size(p) for p in range(1, schedule.iterations + 1)], dtype=float)
    rms = np.sqrt((gaps**2).mean(axis=0))
    slope, r2 = np.polyfit(np.log(ns), np.log(rms), 1)
    final = rms[-1]
    ok = final < 0.05 and -0.8 <= slope <= -0.2
    return PropertyResult(
        "average-weight-convergence",
        ok,
        f"final rms |D_n - 1| = {final:.4f}, log-log slope {slope:.3f}",
    )


def check_kde_quadrature(seed=31):
    """Weighted KDEs integrate to 1 on a wide grid."""
    from .kernels import GaussianKernel, WeightedParticles, kde_log_density

    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(50, 1)) * 2.0
    lw = rng.normal(size=50)
    cloud = WeightedParticles(pts, log_weights=lw, bandwidth=rng.uniform(0.3, 1.5, size=50))
    grid = np.linspace(-12.0, 12.0, 4001)
    vals = np.exp(kde_log_density(cloud, GaussianKernel(1), grid[:, None]))
    mass = float(np.trapezoid(vals, grid))
    ok = abs(mass - 1.0) < 1e-6
    return PropertyResult("kde-quadrature", ok, f"total mass {mass!r}")


ALL_CHECKS = (
    check_regularized_weight_moments,
    check_exponent_properties,
    check_divergence_limits,
    check_uniform_batches_keep_eta_one,
    check_contraction_bound,
    check_contraction_rate,
    check_kl_monotone_under_recursion,
    check_snis_invariances,
    check_kde_quadrature,
    check_safe_floor_and_weight_cap,
    check_average_weight_convergence,
)


def run_all(verbose=True):
    results = []
    for check in ALL_CHECKS:
        result = check()
        results.append(result)
        if verbose:
            flag = "PASS" if result.passed else "FAIL"
            print(f"[{flag}] {result.name}: {result.detail}")
    return results
