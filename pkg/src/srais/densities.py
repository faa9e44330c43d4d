"""Probability densities used as targets, proposals, and safe components.

Every density evaluates in log space. ``log_density`` accepts a single
point of shape ``(dim,)`` or a batch of shape ``(n, dim)`` and returns a
float or an ``(n,)`` array accordingly (for ``dim == 1`` a 1-d array is
treated as a batch of scalars). ``sample`` always returns ``(n, dim)``.

Random draws go through an explicit ``numpy.random.Generator`` so runs
are reproducible end to end.
"""

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import CapabilityError

_LOG_2PI = float(np.log(2.0 * np.pi))


def _as_batch(x, dim):
    """Coerce ``x`` to a ``(n, dim)`` batch; also return whether to squeeze."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        if dim != 1:
            raise ValueError(f"scalar point given for a {dim}-dimensional density")
        return x.reshape(1, 1), True
    if x.ndim == 1:
        if dim == 1:
            return x.reshape(-1, 1), False
        if x.shape[0] != dim:
            raise ValueError(f"point has length {x.shape[0]}, expected {dim}")
        return x.reshape(1, dim), True
    if x.ndim == 2:
        if x.shape[1] != dim:
            raise ValueError(f"points have dimension {x.shape[1]}, expected {dim}")
        return x, False
    raise ValueError(f"points array must be 1-d or 2-d, got shape {x.shape}")


class _Spread:
    """Covariance (or scale) matrix in isotropic, diagonal, or full form.

    Provides the log determinant, Mahalanobis forms, and correlated draws
    without materializing a dense matrix unless one was given.
    """

    def __init__(self, dim, value):
        value = np.asarray(value, dtype=float)
        self.dim = dim
        if value.ndim == 0:
            if not value > 0:
                raise ValueError("scalar covariance must be positive")
            self.kind = "isotropic"
            self._var = float(value)
            self.log_det = dim * np.log(self._var)
        elif value.ndim == 1:
            if value.shape[0] != dim:
                raise ValueError(f"diagonal covariance has length {value.shape[0]}, expected {dim}")
            if not np.all(value > 0):
                raise ValueError("diagonal covariance entries must be positive")
            self.kind = "diagonal"
            self._var = value.copy()
            self.log_det = float(np.sum(np.log(value)))
        elif value.ndim == 2:
            if value.shape != (dim, dim):
                raise ValueError(f"covariance has shape {value.shape}, expected {(dim, dim)}")
            if not np.allclose(value, value.T, atol=1e-12):
                raise ValueError("covariance matrix must be symmetric")
            try:
                self._chol = np.linalg.cholesky(value)
            except np.linalg.LinAlgError as exc:
                raise ValueError("covariance matrix is not positive definite") from exc
            self.kind = "full"
            self._var = value.copy()
            self.log_det = 2.0 * float(np.sum(np.log(np.diag(self._chol))))
        else:
            raise ValueError("covariance must be a scalar, vector, or matrix")

    def mahalanobis(self, diff):
        """Squared Mahalanobis form of row vectors ``diff`` with shape (n, dim)."""
        if self.kind == "isotropic":
            return np.sum(diff * diff, axis=1) / self._var
        if self.kind == "diagonal":
            return np.sum(diff * diff / self._var, axis=1)
        sol = np.linalg.solve(self._chol, diff.T)
        return np.sum(sol * sol, axis=0)

    def correlate(self, z):
        """Map standard normal rows ``z`` to rows with this covariance."""
        if self.kind == "isotropic":
            return z * np.sqrt(self._var)
        if self.kind == "diagonal":
            return z * np.sqrt(self._var)
        return z @ self._chol.T

    def as_matrix(self):
        if self.kind == "full":
            return self._var.copy()
        if self.kind == "diagonal":
            return np.diag(self._var)
        return self._var * np.eye(self.dim)


class Density:
    """Common interface: ``log_density(x)`` plus optional ``sample(n, rng)``."""

    dim = None
    can_sample = False
    normalized = False

    def log_density(self, x):
        raise NotImplementedError

    def sample(self, n, rng):
        raise CapabilityError(f"{type(self).__name__} does not support sampling")


class Gaussian(Density):
    """Multivariate normal with isotropic, diagonal, or full covariance.

    Parameters
    ----------
    mean : array_like, shape (dim,)
    cov : float, array_like (dim,), or array_like (dim, dim)
        Scalar variance, per-coordinate variances, or a full SPD matrix.
    """

    can_sample = True
    normalized = True

    def __init__(self, mean, cov):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if self.mean.ndim != 1:
            raise ValueError("mean must be a vector")
        self.dim = self.mean.shape[0]
        self._spread = _Spread(self.dim, cov)
        self._log_norm = -0.5 * (self.dim * _LOG_2PI + self._spread.log_det)

    @property
    def cov(self):
        return self._spread.as_matrix()

    def log_density(self, x):
        pts, squeeze = _as_batch(x, self.dim)
        out = self._log_norm - 0.5 * self._spread.mahalanobis(pts - self.mean)
        return float(out[0]) if squeeze else out

    def sample(self, n, rng):
        z = rng.standard_normal((n, self.dim))
        return self.mean + self._spread.correlate(z)


class StudentT(Density):
    """Multivariate Student-t with scale matrix ``scale`` and ``df`` degrees of freedom.

    The scale accepts the same scalar/diagonal/full forms as :class:`Gaussian`.
    Note the scale matrix is not the covariance: for ``df > 2`` the covariance
    is ``scale * df / (df - 2)``. Use :meth:`from_variance` to parameterize by
    the actual covariance.
    """

    can_sample = True
    normalized = True

    def __init__(self, mean, scale, df):
        self.mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if self.mean.ndim != 1:
            raise ValueError("mean must be a vector")
        self.dim = self.mean.shape[0]
        df = float(df)
        if not df > 0:
            raise ValueError("df must be positive")
        self.df = df
        self._spread = _Spread(self.dim, scale)
        d, nu = self.dim, self.df
        self._log_norm = (
            gammaln((nu + d) / 2.0)
            - gammaln(nu / 2.0)
            - 0.5 * d * np.log(nu * np.pi)
            - 0.5 * self._spread.log_det
        )

    @classmethod
    def from_variance(cls, mean, variance, df):
        """Build a Student-t whose covariance equals ``variance`` (needs ``df > 2``)."""
        df = float(df)
        if not df > 2:
            raise ValueError("df must exceed 2 for the covariance to exist")
        variance = np.asarray(variance, dtype=float)
        return cls(mean, variance * (df - 2.0) / df, df)

    @property
    def covariance(self):
        if not self.df > 2:
            raise CapabilityError("covariance undefined for df <= 2")
        return self._spread.as_matrix() * self.df / (self.df - 2.0)

    def log_density(self, x):
        pts, squeeze = _as_batch(x, self.dim)
        maha = self._spread.mahalanobis(pts - self.mean)
        out = self._log_norm - 0.5 * (self.df + self.dim) * np.log1p(maha / self.df)
        return float(out[0]) if squeeze else out

    def sample(self, n, rng):
        z = rng.standard_normal((n, self.dim))
        u = rng.chisquare(self.df, size=n)
        return self.mean + self._spread.correlate(z) * np.sqrt(self.df / u)[:, None]


class Mixture(Density):
    """Finite mixture of densities sharing a common dimension.

    Parameters
    ----------
    components : sequence of (weight, Density)
        Weights must be nonnegative and sum to 1 within 1e-9; they are
        renormalized exactly after the check.
    """

    def __init__(self, components):
        if len(components) == 0:
            raise ValueError("mixture needs at least one component")
        weights = np.array([w for w, _ in components], dtype=float)
        self.densities = [c for _, c in components]
        if np.any(weights < 0):
            raise ValueError("mixture weights must be nonnegative")
        total = weights.sum()
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture weights sum to {total!r}, expected 1")
        self.weights = weights / total
        dims = {c.dim for c in self.densities}
        if len(dims) != 1:
            raise ValueError(f"mixture components disagree on dimension: {sorted(dims)}")
        self.dim = dims.pop()
        self.can_sample = all(c.can_sample for c in self.densities)
        self.normalized = all(c.normalized for c in self.densities)
        with np.errstate(divide="ignore"):
            self._log_weights = np.log(self.weights)

    def log_density(self, x):
        pts, squeeze = _as_batch(x, self.dim)
        logs = np.stack([c.log_density(pts) for c in self.densities], axis=0)
        out = logsumexp(logs + self._log_weights[:, None], axis=0)
        return float(out[0]) if squeeze else out

    def sample(self, n, rng):
        if not self.can_sample:
            raise CapabilityError("some mixture components do not support sampling")
        counts = rng.multinomial(n, self.weights)
        blocks = [c.sample(int(k), rng) for c, k in zip(self.densities, counts) if k > 0]
        out = np.concatenate(blocks, axis=0) if blocks else np.empty((0, self.dim))
        # per-component blocks are contiguous; shuffle so prefixes are i.i.d. draws
        return out[rng.permutation(n)]


def _log_sigmoid(t):
    return -np.logaddexp(0.0, -t)


class LogisticPosterior(Density):
    """Unnormalized Bayesian logistic regression posterior.

    The parameter vector is ``x = [weights (n_features), precision]``. The
    precision carries a Gamma(shape, rate) prior, regression weights are
    i.i.d. normal with variance ``1 / precision``, and labels in ``{-1, +1}``
    enter through the logistic likelihood ``sigmoid(label * features @ weights)``.
    Points with nonpositive precision are outside the support (log density
    ``-inf``). No sampler: this density is only ever a target.

    Parameters
    ----------
    features : array_like, shape (n_obs, n_features)
    labels : array_like, shape (n_obs,), entries in {-1, +1}
    shape, rate : float
        Gamma prior parameters for the precision.
    """

    can_sample = False
    normalized = False

    def __init__(self, features, labels, shape=1.0, rate=0.01):
        self.features = np.asarray(features, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        self.labels = np.asarray(labels, dtype=float)
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must match the number of feature rows")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        if not (shape > 0 and rate > 0):
            raise ValueError("Gamma prior parameters must be positive")
        self.shape = float(shape)
        self.rate = float(rate)
        self.n_features = self.features.shape[1]
        self.dim = self.n_features + 1
        self._log_gamma_norm = self.shape * np.log(self.rate) - gammaln(self.shape)

    def log_density(self, x):
        pts, squeeze = _as_batch(x, self.dim)
        w = pts[:, :-1]
        prec = pts[:, -1]
        out = np.full(pts.shape[0], -np.inf)
        ok = prec > 0
        if np.any(ok):
            wk, pk = w[ok], prec[ok]
            log_prec = np.log(pk)
            prior = self._log_gamma_norm + (self.shape - 1.0) * log_prec - self.rate * pk
            prior += 0.5 * self.n_features * (log_prec - _LOG_2PI)
            prior -= 0.5 * pk * np.sum(wk * wk, axis=1)
            margins = self.labels * (wk @ self.features.T)
            out[ok] = prior + np.sum(_log_sigmoid(margins), axis=1)
        return float(out[0]) if squeeze else out

    def grad_log_density(self, x):
        """Gradient of the log density at a single point with positive precision."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ValueError(f"expected a single point of shape ({self.dim},)")
        w, prec = x[:-1], x[-1]
        if not prec > 0:
            raise ValueError("gradient undefined where precision <= 0")
        margins = self.labels * (self.features @ w)
        # d/dt log sigmoid(t) = sigmoid(-t)
        slope = np.exp(_log_sigmoid(-margins))
        grad_w = -prec * w + (self.labels * slope) @ self.features
        grad_prec = (
            (self.shape - 1.0) / prec
            - self.rate
            + 0.5 * self.n_features / prec
            - 0.5 * float(np.dot(w, w))
        )
        return np.concatenate([grad_w, [grad_prec]])


_TOY_NAMES = ("cold_start", "gaussian_mixture", "anisotropic_mixture")


def toy_target(name, dim, student_df=3.0):
    """Standard synthetic target/start pairs for the adaptive sampler.

    Returns ``(target, initial, true_mean)`` where ``initial`` is the
    heavy-tailed starting density and ``true_mean`` is the exact mean of
    the target. All three families keep their difficulty roughly constant
    across ``dim`` by scaling means and covariances with ``1 / sqrt(dim)``.

    Parameters
    ----------
    name : str
        One of ``cold_start`` (a far-away Gaussian), ``gaussian_mixture``
        (two symmetric modes), ``anisotropic_mixture`` (two unbalanced
        modes with one stretched coordinate).
    dim : int
    student_df : float
        Degrees of freedom of the Student-t start, default 3.
    """
    if name not in _TOY_NAMES:
        raise ValueError(f"unknown toy target {name!r}, expected one of {_TOY_NAMES}")
    if dim < 1:
        raise ValueError("dim must be at least 1")
    ones = np.ones(dim)
    root_d = np.sqrt(dim)
    sigma2 = (0.4 / root_d) ** 2

    offset_mean = np.zeros(dim)
    offset_mean[0] = 1.0
    if dim > 1:
        offset_mean[1] = -1.0
    offset_mean /= root_d

    if name == "cold_start":
        mean = 5.0 * ones / root_d
        target = Gaussian(mean, sigma2)
        initial = StudentT.from_variance(np.zeros(dim), 5.0 / dim, student_df)
        return target, initial, mean

    center = ones / (2.0 * root_d)
    if name == "gaussian_mixture":
        target = Mixture(
            [(0.5, Gaussian(center, sigma2)), (0.5, Gaussian(-center, sigma2))]
        )
        true_mean = np.zeros(dim)
    else:
        stretch = np.ones(dim)
        stretch[0] = 10.0
        target = Mixture(
            [
                (0.25, Gaussian(center, sigma2 * stretch)),
                (0.75, Gaussian(-center, sigma2 * stretch)),
            ]
        )
        true_mean = 0.25 * center + 0.75 * (-center)
    initial = StudentT.from_variance(offset_mean, 5.0 / dim, student_df)
    return target, initial, true_mean
