"""Predictor contract and the total / aleatoric / epistemic entropy split.

Any object with ``n_features`` and ``member_proba(X) -> (B, n, C)`` works as
an ensemble classifier; :class:`~entropyshap.models.forest.ForestModel` is
one, :class:`Ensemble` wraps arbitrary single predictors.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError
from ..info import ZERO_TOL, _scale


class FixedPredictor:
    """Classifier returning the same pmf everywhere (tests and baselines)."""

    def __init__(self, pmf, n_features):
        self.pmf = np.asarray(pmf, dtype=np.float64)
        self.n_features = n_features
        self.n_classes = self.pmf.shape[0]
        self.is_regression = False

    def predict_proba(self, X):
        X = np.atleast_2d(X)
        return np.broadcast_to(self.pmf, (X.shape[0], self.n_classes)).copy()


class Ensemble:
    """Equal-weight ensemble of B classifiers."""

    def __init__(self, members):
        members = list(members)
        if not members:
            raise ConfigError("an ensemble needs at least one member")
        if len({m.n_classes for m in members}) != 1 or len({m.n_features for m in members}) != 1:
            raise ConfigError("ensemble members disagree on n_classes or n_features")
        self.members = members
        self.n_features = members[0].n_features
        self.n_classes = members[0].n_classes
        self.is_regression = False

    @property
    def B(self):
        return len(self.members)

    def member_proba(self, X):
        return np.stack([m.predict_proba(X) for m in self.members])

    def predict_proba(self, X):
        return self.member_proba(X).mean(axis=0)


def _members(m, X):
    if getattr(m, "is_regression", False):
        raise ConfigError("entropy decomposition needs a classification model; "
                          "use gaussian_entropy of the predicted variance for regression")
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.shape[1] != m.n_features:
        raise ConfigError(f"expected {m.n_features} features, got {X.shape[1]}")
    if hasattr(m, "member_proba"):
        P = m.member_proba(X)
    else:
        P = m.predict_proba(X)[None]
    return P, single


def _plugin_entropy(P):
    out = np.zeros(P.shape[:-1])
    np.add.reduce(np.where(P > ZERO_TOL, -P * np.log(np.where(P > ZERO_TOL, P, 1.0)), 0.0),
                  axis=-1, out=out)
    return np.maximum(out, 0.0)


def predict_class_dist(m, x):
    """Return ``(mean_pmf, member_pmfs)`` at one point or a batch."""
    P, single = _members(m, x)
    mean = P.mean(axis=0)
    if single:
        return mean[0], P[:, 0]
    return mean, P


def entropy_total(m, X, base=None):
    """Plug-in entropy of the ensemble-mean pmf."""
    P, single = _members(m, X)
    h = _plugin_entropy(P.mean(axis=0)) / _scale(base)
    return float(h[0]) if single else h


def entropy_aleatoric(m, X, base=None):
    """Mean of the member entropies."""
    P, single = _members(m, X)
    h = _plugin_entropy(P).mean(axis=0) / _scale(base)
    return float(h[0]) if single else h


def entropy_epistemic(m, X, base=None):
    """Total minus aleatoric entropy, clamped at zero (Jensen gap)."""
    P, single = _members(m, X)
    gap = _plugin_entropy(P.mean(axis=0)) - _plugin_entropy(P).mean(axis=0)
    h = np.maximum(gap, 0.0) / _scale(base)
    return float(h[0]) if single else h


def entropy_decomposition(m, X, base=None):
    """``(h_t, h_a, h_e)`` from a single pass over the members."""
    P, single = _members(m, X)
    ht = _plugin_entropy(P.mean(axis=0))
    ha = _plugin_entropy(P).mean(axis=0)
    he = np.maximum(ht - ha, 0.0)
    s = _scale(base)
    if single:
        return float(ht[0] / s), float(ha[0] / s), float(he[0] / s)
    return ht / s, ha / s, he / s
