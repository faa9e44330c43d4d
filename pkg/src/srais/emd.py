"""Grid densities and the entropic mirror descent recursion they verify.

The recursion q_{k+1} proportional to f^eta_k * q_k^(1 - eta_k) contracts
KL(f || q_k) by a factor (1 - eta_k) per step, which via Pinsker gives the
total-variation bound

    tv(f, q_{n+1}) <= sqrt(2 KL(f || q_1)) * prod_k (1 - eta_k)^(1/2).

Everything here is discrete: densities on a fixed lattice with trapezoid
quadrature weights. The bound is an exact statement about those discrete
measures (the proof is measure-agnostic), so the checks run at tight
tolerances regardless of how well the grid resolves the continuum.
"""

from dataclasses import dataclass

import numpy as np

from .errors import VerificationError

# grid density values are clipped here before taking logs
FLOOR = 1e-300
_MIN_POINTS = 64


def _trapezoid_weights(n, step):
    w = np.full(n, step)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


class GridDensity:
    """Nonnegative function tabulated on a uniform 1-d or 2-d lattice.

    Construction normalizes the values so the trapezoid quadrature equals 1.
    All binary operations require the two operands to share the exact grid.

    Parameters
    ----------
    axes : sequence of ndarray
        One or two uniformly spaced coordinate arrays, each with at least
        64 points.
    values : ndarray
        Nonnegative values, shape ``(len(axes[0]),)`` or
        ``(len(axes[0]), len(axes[1]))``.
    """

    def __init__(self, axes, values):
        axes = [np.asarray(a, dtype=float) for a in axes]
        if not 1 <= len(axes) <= 2:
            raise ValueError("only 1-d and 2-d grids are supported")
        for a in axes:
            if a.ndim != 1 or a.shape[0] < _MIN_POINTS:
                raise ValueError(f"each axis needs at least {_MIN_POINTS} points")
            steps = np.diff(a)
            if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
                raise ValueError("grid axes must be uniformly spaced")
        self.axes = tuple(axes)
        values = np.asarray(values, dtype=float)
        if values.shape != tuple(a.shape[0] for a in axes):
            raise ValueError(f"values shape {values.shape} does not match the axes")
        if np.any(values < 0) or np.any(np.isnan(values)):
            raise ValueError("values must be nonnegative")
        quad_w = [_trapezoid_weights(a.shape[0], a[1] - a[0]) for a in axes]
        self._quad = quad_w[0] if len(axes) == 1 else np.outer(quad_w[0], quad_w[1])
        total = float(np.sum(values * self._quad))
        if not total > 0:
            raise ValueError("values integrate to zero")
        self.values = values / total

    @property
    def dim(self):
        return len(self.axes)

    def quadrature(self, integrand):
        """Trapezoid quadrature of an array tabulated on this grid."""
        return float(np.sum(np.asarray(integrand) * self._quad))

    def same_grid(self, other):
        return self.dim == other.dim and all(
            a.shape == b.shape and np.allclose(a, b, rtol=0.0, atol=1e-12)
            for a, b in zip(self.axes, other.axes)
        )

    @classmethod
    def from_log_density(cls, log_fn, lo, hi, n_points, dim=1):
        """Tabulate ``exp(log_fn)`` on a uniform grid over ``[lo, hi]^dim``."""
        if dim == 1:
            axis = np.linspace(lo, hi, n_points)
            vals = np.exp(np.asarray(log_fn(axis[:, None]), dtype=float))
            return cls([axis], vals)
        if dim == 2:
            axis = np.linspace(lo, hi, n_points)
            xx, yy = np.meshgrid(axis, axis, indexing="ij")
            pts = np.column_stack([xx.ravel(), yy.ravel()])
            vals = np.exp(np.asarray(log_fn(pts), dtype=float)).reshape(n_points, n_points)
            return cls([axis, axis], vals)
        raise ValueError("dim must be 1 or 2")

    @classmethod
    def from_density(cls, density, lo, hi, n_points):
        return cls.from_log_density(density.log_density, lo, hi, n_points, dim=density.dim)


def _require_same_grid(p, q):
    if not p.same_grid(q):
        raise ValueError("grid mismatch between densities")


def emd_step(q, f, eta):
    """One mirror descent step: returns the normalization of f^eta * q^(1-eta).

    Values are clipped at a small floor before the geometric interpolation so
    zeros do not produce nan from 0 ** 0 corner cases.
    """
    _require_same_grid(q, f)
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must be in [0, 1], got {eta}")
    log_q = np.log(np.maximum(q.values, FLOOR))
    log_f = np.log(np.maximum(f.values, FLOOR))
    mixed = eta * log_f + (1.0 - eta) * log_q
    mixed -= mixed.max()
    return GridDensity(q.axes, np.exp(mixed))


def tv_distance(p, q):
    """L1 distance integral |p - q| under the shared quadrature."""
    _require_same_grid(p, q)
    return p.quadrature(np.abs(p.values - q.values))


def kl_divergence(p, q):
    """KL(p || q) under the shared quadrature.

    Returns ``inf`` when p carries mass where q is at the floor (support
    violation); cells where both are at the floor are excluded.
    """
    _require_same_grid(p, q)
    p_live = p.values > FLOOR
    q_dead = q.values <= FLOOR
    if np.any(p_live & q_dead):
        return float("inf")
    ratio = np.zeros_like(p.values)
    ratio[p_live] = p.values[p_live] * (
        np.log(p.values[p_live]) - np.log(q.values[p_live])
    )
    return p.quadrature(ratio)


@dataclass
class EmdStepReport:
    step: int
    eta: float
    tv: float
    bound: float

    @property
    def slack(self):
        return self.bound - self.tv


def verify_lemma2(f, q1, etas, tolerance=1e-6):
    """Run the recursion and check tv against the contraction bound at every step.

    Parameters
    ----------
    f : GridDensity
        Target; must have finite KL(f || q1).
    q1 : GridDensity
        Starting density.
    etas : sequence of float in [0, 1]
        Step sizes; one recursion step per entry.

    Returns
    -------
    list of EmdStepReport

    Raises
    ------
    VerificationError
        If any step violates the bound by more than ``tolerance``. The bound
        holds exactly for the discrete measures, so a violation means a bug.
    """
    _require_same_grid(f, q1)
    kl_start = kl_divergence(f, q1)
    if not np.isfinite(kl_start):
        raise ValueError("KL(f || q1) must be finite")
    reports = []
    q = q1
    contraction = 2.0 * kl_start
    for step, eta in enumerate(etas, start=1):
        q = emd_step(q, f, eta)
        contraction *= 1.0 - eta
        bound = float(np.sqrt(contraction))
        tv = tv_distance(f, q)
        if tv > bound + tolerance:
            raise VerificationError(
                f"tv bound violated at step {step}: tv={tv!r} > bound={bound!r}"
            )
        reports.append(EmdStepReport(step=step, eta=float(eta), tv=tv, bound=bound))
    return reports


def averaged_iterate_kls(f, q1, etas):
    """KL of the eta-weighted running average of the iterates from ``f``.

    Tracks kl(avg_n || f) where avg_n is proportional to
    sum_{k<=n} eta_k q_k, with q_k the k-th recursion iterate.
    """
    _require_same_grid(f, q1)
    q = q1
    acc = np.zeros_like(q1.values)
    eta_total = 0.0
    out = []
    for eta in etas:
        q = emd_step(q, f, eta)
        acc = acc + eta * q.values
        eta_total += eta
        avg = GridDensity(q1.axes, acc / eta_total)
        out.append(kl_divergence(avg, f))
    return np.array(out)


def rate_regression(steps, tvs, power):
    """Fit log(tv) = a + b * steps**power; returns (slope b, r_squared).

    Used to confirm the predicted decay regimes: ``power = 1`` for step
    sizes c / k (algebraic once logged) and ``power = 1 - beta`` for
    c / k**beta with beta < 1.
    """
    steps = np.asarray(steps, dtype=float)
    tvs = np.asarray(tvs, dtype=float)
    if steps.shape != tvs.shape or steps.ndim != 1 or steps.shape[0] < 3:
        raise ValueError("need matching 1-d arrays with at least 3 entries")
    if np.any(tvs <= 0):
        raise ValueError("tv values must be positive to fit a log rate")
    x = steps**power
    y = np.log(tvs)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = intercept + slope * x
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(r_squared)
