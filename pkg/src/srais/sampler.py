"""The safe and regularized adaptive importance sampling loop.

Each pass draws a batch from the current proposal, weights it against the
target, assigns the batch a regularization exponent (fixed or adapted to
the batch's weight spread), and rebuilds the proposal as a defensive
mixture

    q = (1 - lambda) * KDE(regularized weighted particles) + lambda * q0

where q0 is the heavy-tailed safe density the run started from. Every
particle keeps the exponent of its own generation pass.

The exponent is applied to each generation's weights after scaling by
that generation's largest weight: in log space the regularized weight is

    anchor_b + eta_b * (log W_j - anchor_b),   anchor_b = max log W of pass b.

Within one pass this is plain W ** eta up to normalization; across passes
it keeps every generation on the scale of its own best particle, so a
heavily flattened pass (eta near 0) evens its weights out without
inflating them above later generations whose raw weights are larger. It
also makes the store's normalized weights invariant to the target's
unknown normalization constant even when exponents differ across passes,
which plain W ** eta is not.

Raw weights are kept in log space; a weight of exactly zero is the log
weight -inf, and it stays -inf under any exponent (including 0), so dead
particles never resurface through regularization.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .densities import Mixture
from .errors import DegenerateWeightsError, SraisError
from .estimators import snis_estimate, squared_error
from .kernels import GaussianKernel, KdeDensity, WeightedParticles, subsample
from .rar import rar_eta_from_log

_SAFE_FLOOR_SLACK = 1e-9


def regularize_log_weights(log_raw_weights, exponents):
    """Unnormalized regularized log weights of one generation.

    Each log weight is compressed toward the generation's largest one by
    its exponent: ``anchor + eta * (lw - anchor)``. Exponent 1 keeps the
    raw weights, exponent 0 lifts everything to the generation's best,
    and equal raw weights stay equal under any exponents. ``-inf`` raw
    log weights stay ``-inf`` for every exponent.
    """
    lw = np.asarray(log_raw_weights, dtype=float)
    ex = np.asarray(exponents, dtype=float)
    if ex.ndim == 0:
        ex = np.full_like(lw, float(ex))
    if lw.shape != ex.shape or lw.ndim != 1:
        raise ValueError("log weights and exponents must be matching vectors")
    if np.any((ex < 0) | (ex > 1)):
        raise ValueError("exponents must lie in [0, 1]")
    finite = lw > -np.inf
    if not np.any(finite):
        return np.full_like(lw, -np.inf)
    anchor = lw[finite].max()
    reg = np.full_like(lw, -np.inf)
    reg[finite] = anchor + ex[finite] * (lw[finite] - anchor)
    return reg


def regularized_normalized_weights(log_raw_weights, exponents):
    """Normalized log weights of one generation under its exponents.

    Raises :class:`DegenerateWeightsError` when every weight is zero.
    """
    reg = regularize_log_weights(log_raw_weights, exponents)
    total = logsumexp(reg)
    if total == -np.inf:
        raise DegenerateWeightsError("all regularized weights are zero")
    return reg - total


def _log_ess(normalized_log_weights):
    return float(np.exp(-logsumexp(2.0 * normalized_log_weights)))


@dataclass
class SamplerSettings:
    """Knobs that do not belong to the schedules.

    subsample_mode : str
        ``uniform`` (keep a uniform subset, renormalize) or ``weighted``
        (multinomial resampling) when building each KDE.
    estimate_weights : str
        ``regularized`` uses the exponentiated weights for estimates,
        ``plain`` uses the raw ones.
    per_particle_bandwidth : bool
        Particles keep the bandwidth of their generation pass instead of
        all sharing the current one.
    degenerate_mode : str
        What counts as a degenerate batch for the abort rule:
        ``zero_weights`` (every raw weight exactly zero) or ``batch_ess``
        (batch effective sample size within tolerance of 1).
    degenerate_patience : int
        Consecutive degenerate batches tolerated before aborting.
    init_eta_mode : str
        Exponent given to the initialization batch: ``raw`` pins it to 1
        (plain importance weights for the particles drawn from the safe
        density itself), ``policy`` evaluates the run's eta policy on the
        batch. ``raw`` avoids freezing a near-zero adaptive exponent onto
        the largest single batch of the run, which would keep safe-density
        particles at uniform weight forever.
    """

    subsample_mode: str = "uniform"
    estimate_weights: str = "regularized"
    per_particle_bandwidth: bool = False
    degenerate_mode: str = "zero_weights"
    degenerate_patience: int = 3
    batch_ess_tolerance: float = 1e-9
    init_eta_mode: str = "raw"

    def __post_init__(self):
        if self.subsample_mode not in ("uniform", "weighted"):
            raise ValueError(f"unknown subsample mode {self.subsample_mode!r}")
        if self.estimate_weights not in ("regularized", "plain"):
            raise ValueError(f"unknown estimate weighting {self.estimate_weights!r}")
        if self.degenerate_mode not in ("zero_weights", "batch_ess"):
            raise ValueError(f"unknown degeneracy mode {self.degenerate_mode!r}")
        if self.degenerate_patience < 1:
            raise ValueError("degenerate_patience must be at least 1")
        if self.init_eta_mode not in ("raw", "policy"):
            raise ValueError(f"unknown init eta mode {self.init_eta_mode!r}")


class ParticleStore:
    """Columnar history of every particle the run has produced."""

    def __init__(self, dim):
        self.dim = int(dim)
        self.points = np.empty((0, self.dim))
        self.log_raw = np.empty(0)
        self.exponents = np.empty(0)
        self.bandwidths = np.empty(0)
        self.pass_index = np.empty(0, dtype=int)
        self._reg = np.empty(0)

    @property
    def n(self):
        return self.points.shape[0]

    def append(self, points, log_raw, eta, bandwidth, pass_idx):
        points = np.asarray(points, dtype=float)
        log_raw = np.asarray(log_raw, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise ValueError("points must be (n, dim)")
        if log_raw.shape != (points.shape[0],):
            raise ValueError("one log weight per point required")
        m = points.shape[0]
        self.points = np.concatenate([self.points, points], axis=0)
        self.log_raw = np.concatenate([self.log_raw, log_raw])
        self.exponents = np.concatenate([self.exponents, np.full(m, float(eta))])
        self.bandwidths = np.concatenate([self.bandwidths, np.full(m, float(bandwidth))])
        self.pass_index = np.concatenate([self.pass_index, np.full(m, pass_idx, dtype=int)])
        reg = regularize_log_weights(log_raw, np.full(m, float(eta)))
        self._reg = np.concatenate([self._reg, reg])

    def regularized_log(self):
        """Unnormalized regularized log weights, anchored per generation."""
        return self._reg

    def normalized(self, mode="regularized"):
        """Normalized log weights; ``mode`` picks regularized or plain."""
        if mode == "regularized":
            lw = self._reg
        else:
            lw = self.log_raw
        total = logsumexp(lw)
        if total == -np.inf:
            raise DegenerateWeightsError("all stored weights are zero")
        return lw - total


@dataclass
class IterationRecord:
    """Diagnostics for one pass; one trace row."""

    iteration: int
    eta: float
    lam: float
    h: float
    n_particles: int
    ess: float
    d_n: float
    estimate: np.ndarray
    squared_error: float = None
    batch_ess: float = None
    fallback: bool = False
    wall_ms: float = None
    extras: dict = field(default_factory=dict)


class SraisSampler:
    """Stateful driver of the adaptive loop.

    Parameters
    ----------
    target : Density
        May be unnormalized; estimates are self-normalized.
    safe_density : Density
        Heavy-tailed, samplable, normalized density the proposal never
        departs from by more than the mixture weight lambda.
    schedule : Schedule
    settings : SamplerSettings, optional
    rng : numpy.random.Generator
    kernel : optional, defaults to a Gaussian kernel of matching dimension.
    """

    def __init__(self, target, safe_density, schedule, *, rng, settings=None, kernel=None):
        if not safe_density.can_sample:
            raise ValueError("the safe density must support sampling")
        if not safe_density.normalized:
            raise ValueError("the safe density must be normalized")
        if target.dim != safe_density.dim:
            raise ValueError("target and safe density disagree on dimension")
        if target.dim != schedule.dim:
            raise ValueError("schedule was built for a different dimension")
        self.target = target
        self.safe_density = safe_density
        self.schedule = schedule
        self.settings = settings or SamplerSettings()
        self.rng = rng
        self.kernel = kernel or GaussianKernel(target.dim)
        self.store = ParticleStore(target.dim)
        self.proposal = safe_density
        self._proposal_lambda = 1.0
        self._degenerate_streak = 0
        self.pass_idx = -1

    def _batch_weights(self, points):
        log_t = self.target.log_density(points)
        log_q = self.proposal.log_density(points)
        if np.any(np.isnan(log_t)) or np.any(log_t == np.inf):
            raise SraisError("target log density returned nan or +inf")
        if np.any(~np.isfinite(log_q)):
            raise SraisError("proposal log density not finite at its own samples")
        # the safe component puts a hard floor under the proposal
        log_floor = np.log(self._proposal_lambda) + self.safe_density.log_density(points)
        if np.any(log_q < log_floor - _SAFE_FLOOR_SLACK):
            raise SraisError("proposal fell below lambda * q0: invariant broken")
        return log_t - log_q

    def _assign_eta(self, log_w, pass_idx, degenerate):
        if pass_idx == 0 and self.settings.init_eta_mode == "raw":
            return 1.0
        pol = self.schedule.eta_policy
        if pol.kind == "constant":
            return pol.value
        if pol.kind == "sequence":
            return float(pol.values[pass_idx])
        if degenerate:
            return 1.0
        return rar_eta_from_log(log_w, pol.alpha)

    def _count_degeneracy(self, degenerate, batch_ess):
        if self.settings.degenerate_mode == "zero_weights":
            hit = degenerate
        else:
            hit = batch_ess < 1.0 + self.settings.batch_ess_tolerance
        self._degenerate_streak = self._degenerate_streak + 1 if hit else 0
        if self._degenerate_streak >= self.settings.degenerate_patience:
            raise DegenerateWeightsError(
                f"{self._degenerate_streak} consecutive degenerate batches "
                f"(mode {self.settings.degenerate_mode!r}): proposal and target "
                "appear totally mismatched"
            )

    def _rebuild_proposal(self, lam, h):
        reg = self.store.regularized_log()
        if self.settings.per_particle_bandwidth:
            bandwidth = self.store.bandwidths
        else:
            bandwidth = h
        try:
            cloud = WeightedParticles(self.store.points, log_weights=reg, bandwidth=bandwidth)
            ell = self.schedule.subsample_size(self.store.n)
            kept = subsample(cloud, ell, self.rng, mode=self.settings.subsample_mode)
        except DegenerateWeightsError:
            # nothing usable to smooth; stay on the safe density this pass
            self.proposal = self.safe_density
            self._proposal_lambda = 1.0
            return True
        kde = KdeDensity(kept, self.kernel)
        self.proposal = Mixture([(1.0 - lam, kde), (lam, self.safe_density)])
        self._proposal_lambda = lam
        return False

    def step(self, extra_metrics=None):
        """Run one pass (the first call consumes the initialization batch)."""
        started = time.perf_counter()
        p = self.pass_idx + 1
        if p > self.schedule.iterations:
            raise SraisError("schedule horizon exhausted")
        size = self.schedule.n0 if p == 0 else self.schedule.batch
        points = self.proposal.sample(size, self.rng)
        log_w = self._batch_weights(points)
        degenerate = not np.any(log_w > -np.inf)
        if degenerate:
            batch_ess = 0.0
        else:
            batch_ess = _log_ess(log_w - logsumexp(log_w))
        eta = self._assign_eta(log_w, p, degenerate)
        lam = self.schedule.lambda_at(p)
        h = self.schedule.h_at(p)
        self.store.append(points, log_w, eta, h, p)
        self._count_degeneracy(degenerate, batch_ess)
        fallback = self._rebuild_proposal(lam, h)
        self.pass_idx = p

        reg_norm = self.store.normalized("regularized")
        est = snis_estimate(None, self.store.points, self.store.normalized(self.settings.estimate_weights))
        with np.errstate(over="ignore"):
            d_n = float(np.exp(logsumexp(self.store.regularized_log()) - np.log(self.store.n)))
        record = IterationRecord(
            iteration=p,
            eta=float(eta),
            lam=float(lam),
            h=float(h),
            n_particles=self.store.n,
            ess=_log_ess(reg_norm),
            d_n=d_n,
            estimate=np.atleast_1d(est.value),
            batch_ess=batch_ess,
            fallback=fallback,
        )
        if extra_metrics is not None:
            weights = np.exp(self.store.normalized(self.settings.estimate_weights))
            record.extras = dict(extra_metrics(self.store.points, weights))
        record.wall_ms = (time.perf_counter() - started) * 1e3
        return record


def run(
    target,
    safe_density,
    schedule,
    *,
    rng,
    settings=None,
    true_mean=None,
    extra_metrics=None,
    kernel=None,
):
    """Run the full loop and return one :class:`IterationRecord` per pass.

    Pass 0 is the initialization batch drawn straight from the safe
    density; passes 1..iterations adapt. When ``true_mean`` is given each
    record carries the squared error of the running mean estimate.
    """
    sampler = SraisSampler(
        target, safe_density, schedule, rng=rng, settings=settings, kernel=kernel
    )
    records = []
    for _ in range(schedule.iterations + 1):
        record = sampler.step(extra_metrics=extra_metrics)
        if true_mean is not None:
            record.squared_error = squared_error(record.estimate, true_mean)
        records.append(record)
    return records
