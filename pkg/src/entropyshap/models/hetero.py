"""Mean model plus a second model for the log squared residual."""

from __future__ import annotations

import json
import warnings

import numpy as np

from ..errors import DataError
from ..info import LOG_2PI_E, _scale
from .forest import DegenerateModelWarning, ForestModel, ForestParams, fit_forest

RESIDUAL_FLOOR = 1e-8


class HeteroskedasticPair:
    """Conditional mean and conditional log-variance regressors."""

    def __init__(self, mean_model, logvar_model, residual_source="oob"):
        self.mean_model = mean_model
        self.logvar_model = logvar_model
        self.n_features = mean_model.n_features
        self.residual_source = residual_source
        self.is_regression = True

    def predict_mean(self, X):
        return self.mean_model.predict(X)

    def predict_logvar(self, X):
        return self.logvar_model.predict(X)

    def predict_variance(self, X):
        return np.exp(self.predict_logvar(X))

    def predict_entropy(self, X, base=None):
        """Gaussian predictive entropy ``0.5 (log 2 pi e + logvar)``."""
        return 0.5 * (LOG_2PI_E + self.predict_logvar(X)) / _scale(base)

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": 1,
            "kind": "hetero_pair",
            "residual_source": self.residual_source,
            "mean_model": json.loads(self.mean_model.to_json()),
            "logvar_model": json.loads(self.logvar_model.to_json()),
        })

    @classmethod
    def from_json(cls, text):
        obj = json.loads(text)
        if obj.get("kind") != "hetero_pair":
            raise DataError("not a heteroskedastic-pair document")
        return cls(ForestModel.from_json(json.dumps(obj["mean_model"])),
                   ForestModel.from_json(json.dumps(obj["logvar_model"])),
                   obj.get("residual_source", "oob"))


def fit_hetero_pair(X, z, params: ForestParams | None = None, seed: int = 0,
                    logvar_params: ForestParams | None = None,
                    residuals: str = "oob", n_jobs: int = 1) -> HeteroskedasticPair:
    """Fit ``E[Z | x]``, then a forest on ``log(residual^2 + RESIDUAL_FLOOR)``.

    ``residuals="oob"`` uses out-of-bag mean predictions on the training
    rows; ``"insample"`` uses the full-forest fit.  In-sample forest
    residuals are shrunk towards zero unevenly, so OOB is the default.
    """
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if np.any(np.isnan(z)):
        raise DataError("regression target has missing values")
    mean_model = fit_forest(X, z, "regression", params, seed=seed, n_jobs=n_jobs)
    if residuals == "oob":
        fitted = mean_model.oob_prediction_
    elif residuals == "insample":
        fitted = mean_model.predict(X)
    else:
        raise DataError(f"unknown residual source {residuals!r}")
    eps = z - fitted
    if np.all(np.abs(eps) < 1e-12):
        warnings.warn("all residuals are zero; variance model is degenerate",
                      DegenerateModelWarning, stacklevel=2)
    target = np.log(eps ** 2 + RESIDUAL_FLOOR)
    logvar_model = fit_forest(X, target, "regression", logvar_params or params,
                              seed=seed + 1, n_jobs=n_jobs)
    return HeteroskedasticPair(mean_model, logvar_model, residuals)
