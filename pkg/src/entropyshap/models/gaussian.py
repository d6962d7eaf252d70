"""Gaussian-linear data model with closed-form entropy Shapley values.

``X ~ N(0, Sigma)`` with Toeplitz ``Sigma_ij = rho^|i-j|``, and
``Y | x ~ N(beta . x, exp(gamma . x))``.  The predictive entropy
``h(x) = 0.5 log(2 pi e) + 0.5 gamma . x`` is linear in ``x``, so the
entropy game has an exact value for every coalition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import toeplitz

from .. import coalitions as co
from ..errors import CapacityError, ConfigError, DataError
from ..info import LOG_2PI_E, _scale

MAX_ANALYTIC_DIM = 12


@dataclass(frozen=True, eq=False)
class GaussianLinearModel:
    beta: np.ndarray
    gamma: np.ndarray
    rho: float

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=np.float64).reshape(-1)
        gamma = np.asarray(self.gamma, dtype=np.float64).reshape(-1)
        if beta.shape != gamma.shape:
            raise ConfigError("beta and gamma must have the same length")
        if not -1 < self.rho < 1:
            raise ConfigError("rho must lie in (-1, 1)")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)

    @property
    def d(self):
        return self.beta.shape[0]

    @property
    def n_features(self):
        return self.d

    @property
    def sigma(self):
        return toeplitz(self.rho ** np.arange(self.d))

    def mean(self, X):
        return np.atleast_2d(X) @ self.beta

    def logvar(self, X):
        return np.atleast_2d(X) @ self.gamma

    def entropy(self, X, base=None):
        return 0.5 * (LOG_2PI_E + self.logvar(X)) / _scale(base)

    # predictor-style aliases so games can consume the analytic model
    predict = mean
    predict_logvar = logvar
    predict_entropy = entropy
    is_regression = True

    def to_json(self):
        return json.dumps({"schema_version": 1, "kind": "gaussian_linear", "d": self.d,
                           "rho": self.rho, "beta": self.beta.tolist(),
                           "gamma": self.gamma.tolist()})

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if obj.get("kind") != "gaussian_linear":
            raise DataError("not a gaussian_linear document")
        return cls(np.array(obj["beta"]), np.array(obj["gamma"]), obj["rho"])


def gauss_conditional_mean(m: GaussianLinearModel, S: int, x_S) -> np.ndarray:
    """``E[X_Sbar | X_S = x_S] = Sigma_{Sbar,S} Sigma_{S,S}^{-1} x_S``.

    ``x_S`` lists the values of the members of ``S`` in increasing order.
    """
    s_idx = co.members(S, m.d)
    sbar = co.members(co.complement(S, m.d), m.d)
    x_S = np.asarray(x_S, dtype=np.float64).reshape(-1)
    if x_S.shape[0] != len(s_idx):
        raise ConfigError(f"x_S has {x_S.shape[0]} values for |S|={len(s_idx)}")
    if not sbar:
        return np.zeros(0)
    if not s_idx:
        return np.zeros(len(sbar))
    sigma = m.sigma
    # LinAlgError propagates for a singular block
    coef = np.linalg.solve(sigma[np.ix_(s_idx, s_idx)], x_S)
    return sigma[np.ix_(sbar, s_idx)] @ coef


def hstar_value(m: GaussianLinearModel, S: int, x, base=None) -> float:
    """Exact ``E[h(X) | X_S = x_S]`` for the linear entropy ``h``."""
    x = np.asarray(x, dtype=np.float64)
    s_idx = co.members(S, m.d)
    sbar = co.members(co.complement(S, m.d), m.d)
    cm = gauss_conditional_mean(m, S, x[s_idx])
    lin = m.gamma[s_idx] @ x[s_idx] + m.gamma[sbar] @ cm
    return 0.5 * (LOG_2PI_E + lin) / _scale(base)


def oracle_shapley_hstar(m: GaussianLinearModel, x, base=None) -> np.ndarray:
    """Exact entropy-game Shapley values by enumerating every coalition."""
    if m.d > MAX_ANALYTIC_DIM:
        raise CapacityError(f"analytic enumeration supports d <= {MAX_ANALYTIC_DIM}, got {m.d}")
    cache = {}

    def v(S):
        if S not in cache:
            cache[S] = hstar_value(m, S, x, base)
        return cache[S]

    return co.enumerate_shapley(v, m.d)
