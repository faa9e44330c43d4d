"""Renyi divergence of a weight batch and the adaptive regularization exponent.

For a batch of m normalized importance weights w, the divergence of order
``alpha`` between the weighted and the uniform empirical measures is

    D_alpha = (1 / (alpha - 1)) * [ logsumexp(alpha * log w) + (alpha - 1) * log m ]

with the limits D_1 = sum w * log(w * m) (forward KL) and
D_0 = -log(support size / m) (reverse KL). D_alpha lies in [0, log m]:
0 exactly for uniform weights, log m for a one-hot batch. The adaptive
exponent is eta = 1 - D_alpha / log m, in [0, 1].

Everything is computed in log space: a weight of 1e-200 still contributes
(1e-200)**alpha, which is far from negligible for small alpha.
"""

import numpy as np
from scipy.special import logsumexp

from .errors import SraisError

# weights below this are treated as zero when counting support
_SUPPORT_FLOOR = 1e-300
# |value| within this of an exact endpoint snaps to the endpoint
_DUST = 1e-12


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    return alpha


def _normalized_log_weights(log_weights):
    lw = np.asarray(log_weights, dtype=float)
    if lw.ndim != 1 or lw.shape[0] < 1:
        raise ValueError("log weights must be a nonempty vector")
    if np.any(np.isnan(lw)) or np.any(lw == np.inf):
        raise ValueError("log weights must be finite or -inf")
    total = logsumexp(lw)
    if total == -np.inf:
        raise ValueError("all weights are zero")
    return lw - total


def renyi_divergence_from_log(log_weights, alpha):
    """Renyi divergence of order ``alpha`` from unnormalized log weights."""
    alpha = _check_alpha(alpha)
    lw = _normalized_log_weights(log_weights)
    m = lw.shape[0]
    log_m = np.log(m)
    # the general formula divides by (alpha - 1); within ~1e-5 of the
    # removable singularity at 1 its rounding error blows past the guard
    # tolerances, so take the KL limit there
    if alpha >= 1.0 - 1e-5:
        live = lw > -np.inf
        w = np.exp(lw[live])
        div = float(np.sum(w * (lw[live] + log_m)))
    elif alpha == 0.0:
        support = int(np.sum(lw >= np.log(_SUPPORT_FLOOR)))
        div = float(-np.log(support / m))
    else:
        with np.errstate(invalid="ignore"):
            div = float((logsumexp(alpha * lw) + (alpha - 1.0) * log_m) / (alpha - 1.0))
    if div < 0.0:
        if div < -1e-9:
            raise SraisError(f"Renyi divergence came out negative ({div}): bug")
        div = 0.0
    if div > log_m:
        if div > log_m + 1e-9:
            raise SraisError(f"Renyi divergence exceeds log m ({div} > {log_m}): bug")
        div = float(log_m)
    return div


def renyi_divergence(weights, alpha):
    """Renyi divergence of order ``alpha`` in [0, 1] for a normalized weight batch.

    Parameters
    ----------
    weights : array_like, shape (m,)
        Nonnegative, summing to 1 within 1e-10.
    alpha : float

    Returns
    -------
    float in [0, log m]
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.shape[0] < 1:
        raise ValueError("weights must be a nonempty vector")
    if np.any(w < 0) or np.any(np.isnan(w)):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if abs(total - 1.0) > 1e-10:
        raise ValueError(f"weights must sum to 1, got {total!r}")
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    return renyi_divergence_from_log(lw, alpha)


def _eta_from_div(div, m):
    eta = 1.0 - div / np.log(m)
    if eta > 1.0 or eta < 0.0:
        # renyi_divergence already range-checked; anything here is float dust
        eta = min(1.0, max(0.0, eta))
    if 1.0 - eta <= _DUST:
        return 1.0
    if eta <= _DUST:
        return 0.0
    return float(eta)


def rar_eta(weights, alpha):
    """Adaptive regularization exponent eta = 1 - D_alpha / log m.

    Equals 1 exactly for uniform weights and 0 exactly for a one-hot batch
    at ``alpha = 1``; always in [0, 1]. Requires a batch of at least two
    weights (a single weight carries no spread information).
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.shape[0] < 2:
        raise ValueError("need at least two weights")
    return _eta_from_div(renyi_divergence(w, alpha), w.shape[0])


def rar_eta_from_log(log_weights, alpha):
    """Same as :func:`rar_eta` but from unnormalized log weights."""
    lw = np.asarray(log_weights, dtype=float)
    if lw.ndim != 1 or lw.shape[0] < 2:
        raise ValueError("need at least two weights")
    return _eta_from_div(renyi_divergence_from_log(lw, alpha), lw.shape[0])
