"""Mixture weight, bandwidth, and regularization exponent schedules.

A :class:`Schedule` fixes how the safe mixture weight lambda, the KDE
bandwidth h, and the weight regularization exponent eta evolve over the
run. Passes are numbered from 0 (the initialization batch); the proposal
rebuilt at the end of pass p uses ``lambda_at(p)`` and ``h_at(p)``.

The convergence requirements on these sequences (lambda in (0, 1]
nonincreasing and slowly vanishing, h shrinking no faster than the
weight floor allows, eta tending to 1) cannot be proven on a finite
horizon, so :func:`validate_assumptions` checks what it can numerically
and reports the rest as warnings rather than failures. Out-of-range
values are hard errors.
"""

import math
from dataclasses import dataclass, field

import numpy as np

_LAMBDA_KINDS = ("constant", "power", "kde_power")
_BANDWIDTH_KINDS = ("constant", "power", "kde_power")
_ETA_KINDS = ("constant", "sequence", "rar")


@dataclass(frozen=True)
class LambdaPolicy:
    """Safe mixture weight: constant, lambda0 * k^-exponent, or
    lambda0 * ell_k^(-2 / (4 + dim)) with ell_k the KDE subsample size."""

    kind: str = "constant"
    lambda0: float = 0.5
    exponent: float = 0.5


@dataclass(frozen=True)
class BandwidthPolicy:
    """KDE bandwidth: constant, h0 * k^(-1 / (4 + dim)), or
    h0 * ell_k^(-1 / (4 + dim))."""

    kind: str = "constant"
    h0: float = 1.0


@dataclass(frozen=True)
class EtaPolicy:
    """Regularization exponent: a constant, an explicit sequence indexed by
    pass, or Renyi-adaptive (computed per batch) with the given order."""

    kind: str = "constant"
    value: float = 1.0
    values: tuple = field(default_factory=tuple)
    alpha: float = 0.5


class Schedule:
    """Schedules bound to a concrete run shape.

    Parameters
    ----------
    lambda_policy, bandwidth_policy, eta_policy
    dim : int
        Dimension of the sampled space (fixes the KDE-rate exponents).
    n0, batch, iterations : int
        Initialization batch size, per-pass batch size, and number of
        adaptation passes after initialization.
    subsample_rule : str
        ``sqrt`` builds each KDE on floor(sqrt(n)) particles, ``none``
        uses the full store.
    """

    def __init__(
        self,
        lambda_policy,
        bandwidth_policy,
        eta_policy,
        *,
        dim,
        n0,
        batch,
        iterations,
        subsample_rule="sqrt",
    ):
        problems = []
        if lambda_policy.kind not in _LAMBDA_KINDS:
            problems.append(f"unknown lambda policy {lambda_policy.kind!r}")
        if not 0.0 < lambda_policy.lambda0 <= 1.0:
            problems.append(f"lambda not in (0,1]: lambda0={lambda_policy.lambda0!r}")
        if lambda_policy.kind == "power" and lambda_policy.exponent < 0:
            problems.append("lambda power exponent must be nonnegative")
        if bandwidth_policy.kind not in _BANDWIDTH_KINDS:
            problems.append(f"unknown bandwidth policy {bandwidth_policy.kind!r}")
        if not bandwidth_policy.h0 > 0:
            problems.append(f"bandwidth must be positive: h0={bandwidth_policy.h0!r}")
        if eta_policy.kind not in _ETA_KINDS:
            problems.append(f"unknown eta policy {eta_policy.kind!r}")
        if eta_policy.kind == "constant" and not 0.0 <= eta_policy.value <= 1.0:
            problems.append(f"eta not in [0,1]: {eta_policy.value!r}")
        if eta_policy.kind == "rar" and not 0.0 <= eta_policy.alpha <= 1.0:
            problems.append(f"rar order alpha not in [0,1]: {eta_policy.alpha!r}")
        if dim < 1:
            problems.append("dim must be at least 1")
        if n0 < 1:
            problems.append("initial batch size must be at least 1")
        if batch < 1:
            problems.append("batch size must be at least 1")
        if iterations < 0:
            problems.append("iterations must be nonnegative")
        if subsample_rule not in ("sqrt", "none"):
            problems.append(f"unknown subsample rule {subsample_rule!r}")
        if eta_policy.kind == "sequence":
            vals = np.asarray(eta_policy.values, dtype=float)
            if vals.size < iterations + 1:
                problems.append(
                    f"eta sequence has {vals.size} entries, needs {iterations + 1}"
                )
            elif np.any(vals < 0) or np.any(vals > 1):
                problems.append("eta sequence entries must lie in [0,1]")
        if problems:
            raise ValueError("; ".join(problems))

        self.lambda_policy = lambda_policy
        self.bandwidth_policy = bandwidth_policy
        self.eta_policy = eta_policy
        self.dim = int(dim)
        self.n0 = int(n0)
        self.batch = int(batch)
        self.iterations = int(iterations)
        self.subsample_rule = subsample_rule
        self._kde_rate = 1.0 / (4.0 + self.dim)

    def store_size(self, pass_idx):
        return self.n0 + pass_idx * self.batch

    def subsample_size(self, n_particles):
        if self.subsample_rule == "sqrt":
            return max(1, math.isqrt(int(n_particles)))
        return int(n_particles)

    def lambda_at(self, pass_idx):
        pol = self.lambda_policy
        if pol.kind == "constant":
            return pol.lambda0
        if pol.kind == "power":
            return pol.lambda0 * float(pass_idx + 1) ** (-pol.exponent)
        ell = self.subsample_size(self.store_size(pass_idx))
        return pol.lambda0 * float(ell) ** (-2.0 * self._kde_rate)

    def h_at(self, pass_idx):
        pol = self.bandwidth_policy
        if pol.kind == "constant":
            return pol.h0
        if pol.kind == "power":
            return pol.h0 * float(pass_idx + 1) ** (-self._kde_rate)
        ell = self.subsample_size(self.store_size(pass_idx))
        return pol.h0 * float(ell) ** (-self._kde_rate)

    def eta_at(self, pass_idx):
        """Planned exponent; None when the policy is adaptive."""
        if self.eta_policy.kind == "constant":
            return self.eta_policy.value
        if self.eta_policy.kind == "sequence":
            return float(self.eta_policy.values[pass_idx])
        return None

    def horizon(self):
        """Arrays of (lambda, h, eta-or-nan) over passes 0..iterations."""
        idx = np.arange(self.iterations + 1)
        lam = np.array([self.lambda_at(p) for p in idx])
        h = np.array([self.h_at(p) for p in idx])
        eta = np.array(
            [np.nan if self.eta_at(p) is None else self.eta_at(p) for p in idx]
        )
        return lam, h, eta


@dataclass
class CheckResult:
    name: str
    level: str  # ok | warning | error
    detail: str


@dataclass
class AssumptionReport:
    checks: list
    empirical_safe_ratio: float = None

    @property
    def errors(self):
        return [c for c in self.checks if c.level == "error"]

    @property
    def warnings(self):
        return [c for c in self.checks if c.level == "warning"]

    def summary(self):
        lines = [f"[{c.level}] {c.name}: {c.detail}" for c in self.checks]
        if self.empirical_safe_ratio is not None:
            lines.append(f"[info] empirical safe ratio c = {self.empirical_safe_ratio!r}")
        return "\n".join(lines)


def _tail_decreasing(values, start):
    tail = values[start:]
    if tail.size < 2:
        return True
    return bool(np.all(np.diff(tail) <= 1e-12))


def validate_assumptions(schedule, *, target=None, safe_density=None, rng=None, n_probe=512):
    """Numerically check the convergence assumptions over the planned horizon.

    Hard range violations (lambda outside (0, 1], nonpositive bandwidth)
    are reported at level ``error``; everything asymptotic is a warning at
    worst. When both ``target`` and ``safe_density`` are given, the safety
    ratio inf q0 / f is probed at sampled points and its empirical value
    reported.
    """
    checks = []
    lam, h, eta = schedule.horizon()
    n = lam.size
    half = n // 2

    if np.any(lam <= 0) or np.any(lam > 1):
        checks.append(CheckResult("lambda-range", "error", "lambda not in (0,1] over the horizon"))
    else:
        checks.append(CheckResult("lambda-range", "ok", "lambda stays in (0,1]"))
    if np.any(h <= 0):
        checks.append(CheckResult("h-range", "error", "bandwidth must stay positive"))
    else:
        checks.append(CheckResult("h-range", "ok", "bandwidth stays positive"))
    if checks[-1].level == "error" or checks[0].level == "error":
        return AssumptionReport(checks=checks)

    if np.any(np.diff(lam) > 1e-12):
        checks.append(CheckResult("lambda-monotone", "warning", "lambda is not nonincreasing"))
    else:
        checks.append(CheckResult("lambda-monotone", "ok", "lambda is nonincreasing"))
    if np.any(np.diff(h) > 1e-12):
        checks.append(CheckResult("h-monotone", "warning", "bandwidth is not nonincreasing"))
    else:
        checks.append(CheckResult("h-monotone", "ok", "bandwidth is nonincreasing"))

    if schedule.lambda_policy.kind == "constant":
        checks.append(
            CheckResult("lambda-limit", "warning", "constant lambda does not tend to 0")
        )
    else:
        checks.append(CheckResult("lambda-limit", "ok", "lambda tends to 0 under this policy"))
    if schedule.bandwidth_policy.kind == "constant":
        checks.append(
            CheckResult("h-limit", "warning", "constant bandwidth does not tend to 0")
        )
    else:
        checks.append(CheckResult("h-limit", "ok", "bandwidth tends to 0 under this policy"))

    k = np.arange(1, n + 1, dtype=float)
    ratio_lam = np.log(k) / (k * lam)
    ratio_h = np.log(k) / (k * h**schedule.dim * lam)
    if _tail_decreasing(ratio_lam, max(half, 1)):
        checks.append(CheckResult("lambda-rate", "ok", "log(k)/(k lambda_k) decreasing over the final half"))
    else:
        checks.append(
            CheckResult("lambda-rate", "warning", "log(k)/(k lambda_k) not decreasing near the horizon")
        )
    if _tail_decreasing(ratio_h, max(half, 1)):
        checks.append(
            CheckResult("h-rate", "ok", "log(k)/(k h_k^d lambda_k) decreasing over the final half")
        )
    else:
        checks.append(
            CheckResult("h-rate", "warning", "log(k)/(k h_k^d lambda_k) not decreasing near the horizon")
        )

    pol = schedule.eta_policy
    if pol.kind == "rar":
        checks.append(
            CheckResult(
                "eta-limit",
                "ok",
                "adaptive exponent; tends to 1 as the proposal approaches the target",
            )
        )
    else:
        finite_eta = eta[~np.isnan(eta)]
        if np.any(finite_eta == 0):
            checks.append(CheckResult("eta-positive", "warning", "eta = 0 passes do not adapt"))
        if pol.kind == "constant" and pol.value < 1.0:
            checks.append(
                CheckResult("eta-limit", "warning", f"constant eta = {pol.value} does not tend to 1")
            )
        elif pol.kind == "sequence" and 1.0 - finite_eta[-1] > 0.1:
            checks.append(
                CheckResult("eta-limit", "warning", "eta sequence ends far from 1")
            )
        else:
            checks.append(CheckResult("eta-limit", "ok", "eta tends to 1"))
        with np.errstate(divide="ignore", invalid="ignore"):
            drift_h = (1.0 - finite_eta) * np.abs(np.log(h[: finite_eta.size]))
            drift_lam = (1.0 - finite_eta) * np.abs(np.log(lam[: finite_eta.size]))
        for name, drift in (("eta-h-drift", drift_h), ("eta-lambda-drift", drift_lam)):
            if _tail_decreasing(drift, max(half, 1)):
                checks.append(CheckResult(name, "ok", "(1 - eta_k) drift decreasing over the final half"))
            else:
                checks.append(CheckResult(name, "warning", "(1 - eta_k) drift not decreasing near the horizon"))

    ratio = None
    if target is not None and safe_density is not None:
        if rng is None:
            rng = np.random.default_rng(0)
        probes = safe_density.sample(n_probe, rng)
        if getattr(target, "can_sample", False):
            probes = np.concatenate([probes, target.sample(n_probe, rng)], axis=0)
        log_f = target.log_density(probes)
        log_q0 = safe_density.log_density(probes)
        live = log_f > -np.inf
        if not np.any(live):
            checks.append(
                CheckResult("safe-ratio", "warning", "target vanished at every probe point")
            )
        else:
            gap = log_q0[live] - log_f[live]
            ratio = float(np.exp(gap.min()))
            if ratio == 0.0:
                checks.append(
                    CheckResult(
                        "safe-ratio",
                        "warning",
                        "safe density vanishes where the target has mass (probe)",
                    )
                )
            else:
                checks.append(
                    CheckResult("safe-ratio", "ok", f"empirical inf q0/f = {ratio:.3g} over probes")
                )
    return AssumptionReport(checks=checks, empirical_safe_ratio=ratio)
