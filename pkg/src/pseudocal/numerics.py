"""Dense-vector primitives and the bounded scalar minimizer.

Everything here is a pure function on immutable inputs. ``softmax``,
``nll`` and ``brier`` accept a single logit/probability vector; the
batched variants used elsewhere in the package are thin vectorizations
with identical per-sample semantics.
"""

import math

import numpy as np

from .errors import InvalidInputError, OptimizationError

# Probabilities are clamped here before any logarithm. Keeps NLL finite
# on saturated softmax outputs without visibly moving the optimum.
PROB_EPS = 1e-12

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_GRID_POINTS = 64


def softmax(z):
    """Numerically stable softmax along the last axis.

    Accepts a single logit vector or an (n, C) matrix of row vectors.
    """
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("softmax: logits must be finite")
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def nll(p, y):
    """Negative log-likelihood of a probability vector against a target.

    ``y`` is either a class index (treated as one-hot) or a probability
    vector of the same length as ``p``. Entries of ``p`` are clamped at
    ``PROB_EPS`` before the logarithm.
    """
    p = np.asarray(p, dtype=np.float64)
    logp = np.log(np.maximum(p, PROB_EPS))
    if np.ndim(y) == 0:
        y = int(y)
        if not 0 <= y < p.shape[-1]:
            raise InvalidInputError(f"nll: class index {y} out of range for C={p.shape[-1]}")
        return float(-logp[y])
    y = np.asarray(y, dtype=np.float64)
    if y.shape != p.shape:
        raise InvalidInputError("nll: soft target shape must match probability vector")
    return float(-np.dot(y, logp))


def brier(p, y):
    """Brier score (1/C) * sum_c (p_c - onehot(y)_c)^2."""
    p = np.asarray(p, dtype=np.float64)
    c = p.shape[-1]
    y = int(y)
    if not 0 <= y < c:
        raise InvalidInputError(f"brier: class index {y} out of range for C={c}")
    onehot = np.zeros(c)
    onehot[y] = 1.0
    return float(np.sum((p - onehot) ** 2) / c)


def argmax_class(z):
    """Index of the maximal entry; ties break toward the lowest index."""
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("argmax_class: logits must be finite")
    return int(np.argmax(z))


def _probe(f, x):
    v = float(f(x))
    if not math.isfinite(v):
        raise OptimizationError(f"objective returned non-finite value at x={x!r}", probe=x)
    return v


def minimize_scalar(f, lo, hi, tol=1e-4):
    """Deterministic bounded minimization of a scalar function.

    Scans a coarse grid of ``_GRID_POINTS`` points (log-spaced when the
    bracket is positive), then refines around the best point with
    golden-section search until the bracket width is at most ``tol``.
    Returns the best probed point, which may be a boundary.
    """
    if not lo < hi:
        raise InvalidInputError(f"minimize_scalar: need lo < hi, got [{lo}, {hi}]")
    if tol <= 0:
        raise InvalidInputError("minimize_scalar: tol must be positive")

    if lo > 0:
        grid = np.geomspace(lo, hi, _GRID_POINTS)
    else:
        grid = np.linspace(lo, hi, _GRID_POINTS)
    values = [_probe(f, x) for x in grid]
    best = int(np.argmin(values))
    best_x, best_v = float(grid[best]), values[best]

    a = float(grid[max(best - 1, 0)])
    b = float(grid[min(best + 1, _GRID_POINTS - 1)])

    # Golden-section refinement inside the bracketing interval.
    h = b - a
    if h > tol:
        n = int(math.ceil(math.log(tol / h) / math.log(_INV_PHI)))
        c = b - _INV_PHI * h
        d = a + _INV_PHI * h
        yc = _probe(f, c)
        yd = _probe(f, d)
        for _ in range(n):
            if yc < yd:
                b, d, yd = d, c, yc
                h = b - a
                c = b - _INV_PHI * h
                yc = _probe(f, c)
            else:
                a, c, yc = c, d, yd
                h = b - a
                d = a + _INV_PHI * h
                yd = _probe(f, d)
        for x, v in ((c, yc), (d, yd)):
            if v < best_v:
                best_x, best_v = x, v

    return best_x
