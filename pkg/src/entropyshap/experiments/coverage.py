"""Coverage of conformal bands on exchangeable synthetic values."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..conformal import calibrate, coverage, order_ranks
from ..rng import TAG_DATA, make_rng
from .metrics import mean_and_se
from .result import ExperimentResult


@dataclass(frozen=True)
class CoverageConfig:
    n_cal: int = 1000
    n_test: int = 1000
    alpha: float = 0.1
    replicates: int = 50
    seed: int = 0


def run_coverage(cfg: CoverageConfig) -> ExperimentResult:
    """Calibrate on ``n_cal`` standard normals, measure coverage on ``n_test`` more.

    For continuous values a new point lands inside the band iff its rank
    among the ``n_cal + 1`` values lies in ``l + 1 .. u``, so the expected
    coverage is exactly ``(u - l) / (n_cal + 1)``.  Because of the ceilings
    this can fall slightly short of ``1 - alpha``.
    """
    covs = []
    for r in range(cfg.replicates):
        rng = make_rng(cfg.seed, TAG_DATA, r)
        band = calibrate(rng.standard_normal(cfg.n_cal), cfg.alpha)
        covs.append(coverage(band, rng.standard_normal(cfg.n_test)))
    lo, hi = order_ranks(cfg.n_cal, cfg.alpha)
    mean, se = mean_and_se(covs)
    metrics = {"mean_coverage": mean, "se": se, "expected": (hi - lo) / (cfg.n_cal + 1),
               "nominal": 1 - cfg.alpha,
               "upper_bound": 1 - cfg.alpha + 2 / (2 * cfg.n_cal + 2)}
    records = [{"replicate": r, "coverage": c} for r, c in enumerate(covs)]
    return ExperimentResult("coverage", asdict(cfg), metrics, records)
