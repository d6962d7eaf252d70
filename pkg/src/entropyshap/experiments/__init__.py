"""Data generators and experiment harnesses."""

from .coverage import CoverageConfig, run_coverage
from .friedman import (FriedmanConfig, MissingnessConfig, SelectionConfig, gen_friedman,
                       run_friedman_missingness, run_friedman_selection)
from .gauss import ConvergenceConfig, GaussSimConfig, gen_gauss, run_gauss_convergence
from .metrics import mean_abs_error, roc_auc
from .result import ExperimentResult, config_hash
from .shift import ShiftConfig, make_blobs, run_shift

__all__ = [
    "ConvergenceConfig", "CoverageConfig", "ExperimentResult", "FriedmanConfig",
    "GaussSimConfig", "MissingnessConfig", "SelectionConfig", "ShiftConfig", "config_hash",
    "gen_friedman", "gen_gauss", "make_blobs", "mean_abs_error", "roc_auc", "run_coverage",
    "run_friedman_missingness", "run_friedman_selection", "run_gauss_convergence", "run_shift",
]
