"""Samplers for out-of-coalition features.

A sampler fills in the features outside a coalition ``S`` given the values
``x_S``.  Every sampler returns ``m`` rows in which the coordinates in ``S``
are bit-identical to ``x``.
"""

from __future__ import annotations

import math

import numpy as np

from . import coalitions as co
from .errors import ConfigError, DataError, SizeError

DEFAULT_DRAWS = 64
DEFAULT_RIDGE = 1e-8


def _background(data):
    X = data.as_nan() if hasattr(data, "as_nan") else np.asarray(data, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError("background must be a non-empty 2-D array")
    return X


def _fill(draws, S, x):
    keep = co.as_bool(S, draws.shape[1])
    draws[:, keep] = np.asarray(x, dtype=np.float64)[keep]
    return draws


class MarginalSampler:
    """Draws whole background rows, ignoring ``x_S``.

    This is the product-of-marginals reference: the imputed features are
    independent of the coalition.  With correlated features it creates
    off-manifold points, and models then extrapolate, so attributions
    under this sampler must be read with that in mind.
    """

    kind = "marginal"

    def __init__(self, background):
        self.background = _background(background)
        self.d = self.background.shape[1]

    def draw(self, S: int, x, m: int, rng: np.random.Generator) -> np.ndarray:
        if m < 1:
            raise ConfigError("draw count m must be >= 1")
        if S == co.full(self.d):
            return np.tile(np.asarray(x, dtype=np.float64), (m, 1))
        rows = rng.integers(0, self.background.shape[0], size=m)
        return _fill(self.background[rows].copy(), S, x)

    def describe(self):
        return {"type": self.kind, "n_background": int(self.background.shape[0])}


class GaussianConditionalSampler:
    """Exact conditional draws from ``N(mean, cov)``."""

    kind = "gaussian"

    def __init__(self, mean, cov):
        self.mean = np.asarray(mean, dtype=np.float64).reshape(-1)
        self.cov = np.asarray(cov, dtype=np.float64)
        self.d = self.mean.shape[0]
        if self.cov.shape != (self.d, self.d):
            raise ConfigError("covariance shape does not match the mean")
        np.linalg.cholesky(self.cov)  # LinAlgError if not SPD
        self._cache = {}

    def conditional(self, S: int, x_S):
        """Mean and covariance of ``X_Sbar | X_S = x_S`` (x_S in member order)."""
        s_idx = co.members(S, self.d)
        sbar = co.members(co.complement(S, self.d), self.d)
        if S not in self._cache:
            if s_idx:
                A = self.cov[np.ix_(sbar, s_idx)] @ np.linalg.inv(self.cov[np.ix_(s_idx, s_idx)])
                C = self.cov[np.ix_(sbar, sbar)] - A @ self.cov[np.ix_(s_idx, sbar)]
            else:
                A = np.zeros((len(sbar), 0))
                C = self.cov[np.ix_(sbar, sbar)]
            C = 0.5 * (C + C.T)
            L = np.linalg.cholesky(C) if sbar else np.zeros((0, 0))
            self._cache[S] = (A, C, L)
        A, C, _ = self._cache[S]
        x_S = np.asarray(x_S, dtype=np.float64)
        return self.mean[sbar] + A @ (x_S - self.mean[s_idx]), C

    def draw(self, S: int, x, m: int, rng: np.random.Generator) -> np.ndarray:
        if m < 1:
            raise ConfigError("draw count m must be >= 1")
        x = np.asarray(x, dtype=np.float64)
        out = np.tile(x, (m, 1))
        if S == co.full(self.d):
            return out
        s_idx = co.members(S, self.d)
        sbar = co.members(co.complement(S, self.d), self.d)
        mu, _ = self.conditional(S, x[s_idx])
        L = self._cache[S][2]
        out[:, sbar] = mu + rng.standard_normal((m, len(sbar))) @ L.T
        return out

    def describe(self):
        return {"type": self.kind, "d": self.d}


def fit_gaussian(data, ridge: float = DEFAULT_RIDGE) -> GaussianConditionalSampler:
    """Column means and sample covariance plus ``ridge * I``."""
    X = _background(data)
    n, d = X.shape
    if np.isnan(X).any():
        raise DataError("Gaussian sampler needs complete data")
    if n <= d:
        raise SizeError(f"need n > d to estimate a covariance, got n={n}, d={d}")
    cov = np.atleast_2d(np.cov(X, rowvar=False)) + ridge * np.eye(d)
    return GaussianConditionalSampler(X.mean(axis=0), cov)


class KnnConditionalSampler:
    """Empirical conditional: draw rows among the k nearest on ``S``.

    Distance is Euclidean after dividing each column by its background
    standard deviation.  Ties in distance are broken at random.
    """

    kind = "knn"

    def __init__(self, background, k: int | None = None):
        self.background = _background(background)
        n, self.d = self.background.shape
        if np.isnan(self.background).any():
            raise DataError("k-NN sampler needs complete background data")
        self.k = math.ceil(math.sqrt(n)) if k is None else int(k)
        if not 1 <= self.k <= n:
            raise ConfigError(f"k={self.k} must lie in [1, n={n}]")
        sd = self.background.std(axis=0)
        self.scale = np.where(sd > 0, sd, 1.0)
        self._z = self.background / self.scale

    def neighbours(self, S: int, x, rng: np.random.Generator) -> np.ndarray:
        keep = co.as_bool(S, self.d)
        n = self._z.shape[0]
        if not keep.any():
            return np.arange(n)
        z = np.asarray(x, dtype=np.float64)[keep] / self.scale[keep]
        dist = ((self._z[:, keep] - z) ** 2).sum(axis=1)
        order = np.lexsort((rng.random(n), dist))
        return order[: self.k]

    def draw(self, S: int, x, m: int, rng: np.random.Generator) -> np.ndarray:
        if m < 1:
            raise ConfigError("draw count m must be >= 1")
        if S == co.full(self.d):
            return np.tile(np.asarray(x, dtype=np.float64), (m, 1))
        pool = self.neighbours(S, x, rng)
        rows = pool[rng.integers(0, pool.shape[0], size=m)]
        return _fill(self.background[rows].copy(), S, x)

    def describe(self):
        return {"type": self.kind, "k": self.k, "n_background": int(self.background.shape[0])}


def make_sampler(spec: dict, background):
    """Build a sampler from a config mapping ``{type, k, ridge}``."""
    kind = spec.get("type", "marginal")
    if kind == "marginal":
        return MarginalSampler(background)
    if kind == "gaussian":
        return fit_gaussian(background, spec.get("ridge", DEFAULT_RIDGE))
    if kind == "knn":
        return KnnConditionalSampler(background, spec.get("k"))
    raise ConfigError(f"unknown sampler type {kind!r}; choose marginal, gaussian or knn")
