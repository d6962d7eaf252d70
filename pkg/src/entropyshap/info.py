"""Entropy, cross entropy, KL divergence and mutual information.

All functions compute in nats and divide by ``log(base)`` at the end, so
``base=2`` gives bits.  Probabilities below ``ZERO_TOL`` count as exact
zeros for support checks and ``0 log 0 = 0``.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, DomainError

ZERO_TOL = 1e-15
SUM_TOL = 1e-12
LOG_2PI_E = math.log(2 * math.pi * math.e)


class Gaussian(NamedTuple):
    mean: float
    variance: float


def _scale(base):
    if base is None:
        return 1.0
    if base <= 0 or base == 1:
        raise DomainError(f"invalid log base {base}")
    return math.log(base)


def units_base(units: str) -> float:
    """Map ``"bits"``/``"nats"`` to a log base."""
    try:
        return {"bits": 2.0, "nats": math.e}[units]
    except KeyError:
        raise DomainError(f"unknown units {units!r}; use 'bits' or 'nats'") from None


def as_pmf(p, axis=-1) -> np.ndarray:
    """Validate a pmf (or a stack of pmfs along ``axis``)."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < -ZERO_TOL) or np.any(p > 1 + ZERO_TOL):
        raise DomainError("probabilities must lie in [0, 1]")
    if np.any(np.abs(p.sum(axis=axis) - 1.0) > SUM_TOL):
        raise DomainError("probabilities must sum to 1")
    return np.clip(p, 0.0, 1.0)


def _xlogy(x, y):
    # x * log(y) with the 0 log(.) = 0 convention; y is never 0 where x > 0
    out = np.zeros(np.broadcast(x, y).shape)
    pos = np.broadcast_to(x > ZERO_TOL, out.shape)
    xb = np.broadcast_to(x, out.shape)
    yb = np.broadcast_to(y, out.shape)
    out[pos] = xb[pos] * np.log(yb[pos])
    return out


def entropy(p, base: float | None = None, axis: int = -1):
    """Shannon entropy ``-sum p log p``; vectorized over leading axes."""
    p = as_pmf(p, axis)
    h = -_xlogy(p, p).sum(axis=axis)
    h = np.maximum(h, 0.0) / _scale(base)
    return float(h) if np.ndim(h) == 0 else h


def _check_support(p, q):
    if np.any((q <= ZERO_TOL) & (p > ZERO_TOL)):
        raise DivergenceError("p is not absolutely continuous w.r.t. q")


def cross_entropy(p, q, base: float | None = None, axis: int = -1):
    p, q = as_pmf(p, axis), as_pmf(q, axis)
    if p.shape[axis] != q.shape[axis]:
        raise DomainError("p and q have different numbers of classes")
    _check_support(p, q)
    h = -_xlogy(p, q).sum(axis=axis) / _scale(base)
    return float(h) if np.ndim(h) == 0 else h


def kl_divergence(p, q, base: float | None = None, axis: int = -1):
    p, q = as_pmf(p, axis), as_pmf(q, axis)
    if p.shape[axis] != q.shape[axis]:
        raise DomainError("p and q have different numbers of classes")
    _check_support(p, q)
    # sum p log(p/q) directly; going through H(p,q) - H(p) loses precision near p = q
    safe_q = np.where(p > ZERO_TOL, q, 1.0)
    kl = _xlogy(p, p / safe_q).sum(axis=axis)
    kl = np.maximum(kl, 0.0) / _scale(base)
    return float(kl) if np.ndim(kl) == 0 else kl


def gaussian_entropy(variance, base: float | None = None):
    """Differential entropy ``0.5 log(2 pi e variance)`` of a normal law."""
    v = np.asarray(variance, dtype=np.float64)
    if np.any(~(v > 0)):
        raise DomainError("Gaussian variance must be positive")
    h = 0.5 * (LOG_2PI_E + np.log(v)) / _scale(base)
    return float(h) if np.ndim(h) == 0 else h


def conditional_entropy(joint, base: float | None = None) -> float:
    """``H(A | B)`` for a 2-D joint table with A on rows and B on columns."""
    joint = np.asarray(joint, dtype=np.float64)
    as_pmf(joint.reshape(-1))
    pb = joint.sum(axis=0)
    h = 0.0
    for k in np.flatnonzero(pb > ZERO_TOL):
        h += pb[k] * entropy(joint[:, k] / pb[k])
    return h / _scale(base)


def mutual_information(joint, base: float | None = None) -> float:
    """``I(A; B) = H(A) - H(A | B)`` for a 2-D joint table."""
    joint = np.asarray(joint, dtype=np.float64)
    if joint.ndim != 2:
        raise DomainError("mutual_information expects a 2-D joint table")
    pa = joint.sum(axis=1)
    mi = entropy(pa) - conditional_entropy(joint)
    return max(mi, 0.0) / _scale(base)
