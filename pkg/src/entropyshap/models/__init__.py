from .ensemble import (Ensemble, FixedPredictor, entropy_aleatoric, entropy_decomposition,
                       entropy_epistemic, entropy_total, predict_class_dist)
from .forest import DegenerateModelWarning, ForestModel, ForestParams, fit_forest
from .gaussian import (GaussianLinearModel, gauss_conditional_mean, hstar_value,
                       oracle_shapley_hstar)
from .hetero import RESIDUAL_FLOOR, HeteroskedasticPair, fit_hetero_pair

__all__ = [
    "DegenerateModelWarning", "Ensemble", "FixedPredictor", "ForestModel", "ForestParams",
    "GaussianLinearModel", "HeteroskedasticPair", "RESIDUAL_FLOOR", "entropy_aleatoric",
    "entropy_decomposition", "entropy_epistemic", "entropy_total", "fit_forest",
    "fit_hetero_pair", "gauss_conditional_mean", "hstar_value", "oracle_shapley_hstar",
    "predict_class_dist",
]
