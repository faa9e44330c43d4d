"""Importance sampling estimators and the logistic posterior predictive."""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import CapabilityError, DegenerateWeightsError


@dataclass
class Estimate:
    """Estimator output with bookkeeping.

    value : float or ndarray
    n_used : int
        Number of points the estimator consumed (zero-weight points included).
    ess : float
        Effective sample size 1 / sum(normalized weights squared), in [1, n_used].
    estimator_kind : str
    """

    value: object
    n_used: int
    ess: float
    estimator_kind: str


def _eval_integrand(g, points):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if g is None:
        return points
    vals = np.asarray(g(points), dtype=float)
    if vals.shape[0] != points.shape[0]:
        raise ValueError("g must return one value (or row) per point")
    return vals


def _normalized_weights(log_weights, n):
    lw = np.asarray(log_weights, dtype=float)
    if lw.shape != (n,):
        raise ValueError("log weights must have one entry per point")
    total = logsumexp(lw)
    if total == -np.inf:
        raise DegenerateWeightsError("all importance weights are zero")
    w = np.exp(lw - total)
    return w / w.sum()


def snis_estimate(g, points, log_weights):
    """Self-normalized importance sampling estimate sum_j wbar_j g(X_j).

    Works for unnormalized targets: the unknown constant cancels in the
    weight normalization. ``g = None`` means the identity (mean estimation).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    w = _normalized_weights(log_weights, n)
    vals = _eval_integrand(g, points)
    value = w @ vals
    ess = 1.0 / float(np.sum(w * w))
    if vals.ndim == 1:
        value = float(value)
    return Estimate(value=value, n_used=n, ess=ess, estimator_kind="snis")


def is_estimate(g, points, log_weights, n_total, *, target_normalized):
    """Unnormalized importance sampling estimate (1 / n_total) sum_j W_j g(X_j).

    Requires a normalized target; with an unnormalized one the raw weights
    carry an unknown constant and the estimator is meaningless.
    """
    if not target_normalized:
        raise CapabilityError("is_estimate requires a normalized target; use snis_estimate")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    n_total = int(n_total)
    if n_total < n:
        raise ValueError("n_total must be at least the number of points given")
    lw = np.asarray(log_weights, dtype=float)
    if lw.shape != (n,):
        raise ValueError("log weights must have one entry per point")
    raw = np.exp(lw)
    vals = _eval_integrand(g, points)
    value = raw @ vals / n_total
    wbar = _normalized_weights(lw, n)
    ess = 1.0 / float(np.sum(wbar * wbar))
    if vals.ndim == 1:
        value = float(value)
    return Estimate(value=value, n_used=n, ess=ess, estimator_kind="is")


def squared_error(estimate, truth):
    """Squared Euclidean distance between an estimate vector and the truth."""
    est = np.atleast_1d(np.asarray(estimate, dtype=float))
    tru = np.atleast_1d(np.asarray(truth, dtype=float))
    if est.shape != tru.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {tru.shape}")
    diff = est - tru
    return float(np.dot(diff, diff))


def sigmoid(t):
    return np.exp(-np.logaddexp(0.0, -np.asarray(t, dtype=float)))


def posterior_predictive(z_new, particles, weights):
    """Predictive probability of the positive class under a particle posterior.

    Parameters
    ----------
    z_new : array_like, shape (n_features,) or (m, n_features)
    particles : array_like, shape (n, n_features + 1)
        Rows ``[regression weights, precision]``; the precision column is
        ignored by the predictive.
    weights : array_like, shape (n,)
        Normalized particle weights.

    Returns
    -------
    float or ndarray, shape (m,)
    """
    particles = np.atleast_2d(np.asarray(particles, dtype=float))
    w = np.asarray(weights, dtype=float)
    if w.shape != (particles.shape[0],):
        raise ValueError("weights must have one entry per particle")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-8:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    coef = particles[:, :-1]
    z = np.asarray(z_new, dtype=float)
    squeeze = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[1] != coef.shape[1]:
        raise ValueError(f"feature dimension mismatch: {z.shape[1]} vs {coef.shape[1]}")
    probs = sigmoid(z @ coef.T) @ w
    return float(probs[0]) if squeeze else probs


def classify_accuracy(features, labels, particles, weights, threshold=0.5):
    """Fraction of labels in {-1, +1} matched by thresholding the predictive."""
    features = np.atleast_2d(np.asarray(features, dtype=float))
    labels = np.asarray(labels, dtype=float)
    if features.shape[0] == 0:
        raise ValueError("empty evaluation set")
    if labels.shape != (features.shape[0],):
        raise ValueError("labels must match the number of feature rows")
    probs = posterior_predictive(features, particles, weights)
    predicted = np.where(probs >= threshold, 1.0, -1.0)
    return float(np.mean(predicted == labels))
