"""Weighted kernel density estimates over particle clouds.

Weights live in log space throughout: particle clouds produced by
importance sampling routinely span hundreds of nats, so linear weights
would silently underflow. ``WeightedParticles`` normalizes its log
weights on construction and exposes linear weights only after shifting
by the maximum, which is safe.
"""

import numpy as np
from scipy.special import logsumexp

from .densities import Density, _as_batch
from .errors import DegenerateWeightsError

_LOG_2PI = float(np.log(2.0 * np.pi))


class GaussianKernel:
    """Standard normal smoothing kernel in ``dim`` dimensions.

    Radial: the kernel value depends on the point only through its squared
    norm, which lets the KDE hot path work on pairwise squared distances.
    """

    kind = "gaussian"

    def __init__(self, dim):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.dim = int(dim)

    def log_profile(self, sq_norm):
        """Log kernel value as a function of the squared norm of the argument."""
        return -0.5 * np.asarray(sq_norm, dtype=float) - 0.5 * self.dim * _LOG_2PI

    def log_value(self, u):
        pts, squeeze = _as_batch(u, self.dim)
        out = self.log_profile(np.sum(pts * pts, axis=1))
        return float(out[0]) if squeeze else out

    def sample(self, n, rng):
        return rng.standard_normal((n, self.dim))


def kernel_value(kernel, u, h):
    """Scaled kernel K_h(u) = K(u / h) / h^dim.

    ``h`` must be positive; ``u`` may be a point or a batch.
    """
    h = float(h)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    pts, squeeze = _as_batch(u, kernel.dim)
    log_vals = kernel.log_value(pts / h) - kernel.dim * np.log(h)
    out = np.exp(log_vals)
    return float(out[0]) if squeeze else out


class WeightedParticles:
    """Particle cloud with normalized weights and per-cloud or per-particle bandwidth.

    Parameters
    ----------
    points : array_like, shape (n, dim)
    log_weights : array_like, shape (n,), optional
        Unnormalized log weights; ``-inf`` marks a zero weight. Exactly one
        of ``log_weights`` and ``weights`` must be given.
    weights : array_like, shape (n,), optional
        Nonnegative unnormalized weights.
    bandwidth : float or array_like, shape (n,)
        Positive smoothing scale, either shared or one per particle.
    """

    def __init__(self, points, log_weights=None, weights=None, bandwidth=1.0):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.points.ndim != 2:
            raise ValueError("points must be a 2-d array")
        n = self.points.shape[0]
        if n < 1:
            raise ValueError("need at least one particle")
        if (log_weights is None) == (weights is None):
            raise ValueError("give exactly one of log_weights or weights")
        if weights is not None:
            weights = np.asarray(weights, dtype=float)
            if np.any(weights < 0) or np.any(np.isnan(weights)):
                raise ValueError("weights must be nonnegative")
            with np.errstate(divide="ignore"):
                log_weights = np.log(weights)
        log_weights = np.asarray(log_weights, dtype=float)
        if log_weights.shape != (n,):
            raise ValueError("log_weights must have one entry per particle")
        if np.any(np.isnan(log_weights)) or np.any(log_weights == np.inf):
            raise ValueError("log weights must be finite or -inf")
        total = logsumexp(log_weights)
        if total == -np.inf:
            raise DegenerateWeightsError("all particle weights are zero")
        self.log_weights = log_weights - total

        bandwidth = np.asarray(bandwidth, dtype=float)
        if bandwidth.ndim == 0:
            bandwidth = np.full(n, float(bandwidth))
        if bandwidth.shape != (n,):
            raise ValueError("bandwidth must be a scalar or one value per particle")
        if not np.all(bandwidth > 0):
            raise ValueError("bandwidths must be positive")
        self.bandwidth = bandwidth

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def weights(self):
        return np.exp(self.log_weights)


def kde_log_density(particles, kernel, x):
    """Log density of the weighted KDE at ``x``.

    log f(x) = logsumexp_j [ log w_j + log K(||x - X_j|| / h_j) - dim log h_j ]
    computed from pairwise squared distances, so memory is O(n_query * n_particles).
    """
    if kernel.dim != particles.dim:
        raise ValueError("kernel and particles disagree on dimension")
    pts, squeeze = _as_batch(x, particles.dim)
    sq = (
        np.sum(pts * pts, axis=1)[:, None]
        + np.sum(particles.points * particles.points, axis=1)[None, :]
        - 2.0 * pts @ particles.points.T
    )
    np.maximum(sq, 0.0, out=sq)
    h = particles.bandwidth
    log_terms = (
        kernel.log_profile(sq / (h * h))
        - kernel.dim * np.log(h)
        + particles.log_weights
    )
    out = logsumexp(log_terms, axis=1)
    return float(out[0]) if squeeze else out


def kde_sample(particles, kernel, n, rng):
    """Draw ``n`` points from the weighted KDE."""
    idx = rng.choice(particles.n, size=n, p=particles.weights)
    noise = kernel.sample(n, rng)
    return particles.points[idx] + particles.bandwidth[idx, None] * noise


class KdeDensity(Density):
    """Weighted KDE wrapped as a :class:`~srais.densities.Density`."""

    can_sample = True
    normalized = True

    def __init__(self, particles, kernel):
        if kernel.dim != particles.dim:
            raise ValueError("kernel and particles disagree on dimension")
        self.particles = particles
        self.kernel = kernel
        self.dim = particles.dim

    def log_density(self, x):
        return kde_log_density(self.particles, self.kernel, x)

    def sample(self, n, rng):
        return kde_sample(self.particles, self.kernel, n, rng)


def subsample(particles, target_size, rng, mode="uniform"):
    """Reduce a cloud to ``target_size`` particles.

    ``uniform`` keeps a uniform random subset without replacement and
    renormalizes the retained weights (in log space). ``weighted``
    resamples with replacement proportionally to the weights and returns
    uniform weights, as in multinomial resampling.
    """
    target_size = int(target_size)
    if not 1 <= target_size <= particles.n:
        raise ValueError(f"target_size must be in [1, {particles.n}], got {target_size}")
    if mode == "uniform":
        if target_size == particles.n:
            return particles
        idx = np.sort(rng.choice(particles.n, size=target_size, replace=False))
        kept = particles.log_weights[idx]
        if logsumexp(kept) == -np.inf:
            raise DegenerateWeightsError("retained subset carries zero total weight")
        return WeightedParticles(
            particles.points[idx], log_weights=kept, bandwidth=particles.bandwidth[idx]
        )
    if mode == "weighted":
        idx = np.sort(rng.choice(particles.n, size=target_size, replace=True, p=particles.weights))
        return WeightedParticles(
            particles.points[idx],
            weights=np.ones(target_size),
            bandwidth=particles.bandwidth[idx],
        )
    raise ValueError(f"unknown subsample mode {mode!r}")
