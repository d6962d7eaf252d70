"""Gaussian-linear simulation: estimated vs closed-form entropy Shapley values."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..data import Dataset, from_arrays
from ..errors import ConfigError
from ..games import GameSpec, bind
from ..imputation import GaussianConditionalSampler, make_sampler
from ..models.forest import ForestParams
from ..models.gaussian import GaussianLinearModel, oracle_shapley_hstar
from ..models.hetero import fit_hetero_pair
from ..rng import TAG_DATA, TAG_FIT, RngStream, make_rng
from ..shapley import MAX_EXACT_DIM, shapley_exact
from .metrics import below_by_one_se, mean_and_se
from .result import ExperimentResult

SAMPLERS = ("marginal", "gaussian", "knn")


@dataclass(frozen=True)
class GaussSimConfig:
    d: int = 4
    rho: float = 0.5
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if not -1 < self.rho < 1:
            raise ConfigError("rho must lie in (-1, 1)")


def gen_gauss(cfg: GaussSimConfig) -> tuple[Dataset, GaussianLinearModel]:
    """Draw Rademacher ``beta``, ``gamma`` and ``n`` rows of ``(X, Y)``."""
    rng = make_rng(cfg.seed, TAG_DATA)
    beta = rng.choice([-1.0, 1.0], size=cfg.d)
    gamma = rng.choice([-1.0, 1.0], size=cfg.d)
    model = GaussianLinearModel(beta, gamma, cfg.rho)
    X = rng.multivariate_normal(np.zeros(cfg.d), model.sigma, size=cfg.n, method="cholesky")
    y = model.mean(X) + np.exp(0.5 * model.logvar(X)) * rng.standard_normal(cfg.n)
    return from_arrays(X, y, [f"X{j + 1}" for j in range(cfg.d)]), model


@dataclass(frozen=True)
class ConvergenceConfig:
    """Grid for the convergence study.

    ``model="forest"`` fits a heteroskedastic forest pair per replicate;
    ``model="analytic"`` plugs in the true entropy function so that only
    the sampler is estimated.
    """

    n_grid: tuple = (250, 2000)
    rho_grid: tuple = (0.5,)
    samplers: tuple = SAMPLERS
    replicates: int = 20
    d: int = 4
    n_test: int = 20
    m: int = 64
    model: str = "forest"
    n_trees: int = 50
    min_leaf: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.d > MAX_EXACT_DIM:
            raise ConfigError(f"convergence study enumerates coalitions; need d <= {MAX_EXACT_DIM}")
        if self.model not in ("forest", "analytic"):
            raise ConfigError("model must be 'forest' or 'analytic'")
        bad = set(self.samplers) - set(SAMPLERS)
        if bad:
            raise ConfigError(f"unknown samplers {sorted(bad)}")


def _cell(cfg: ConvergenceConfig, n: int, rho: float, rep: int):
    cell_seed = int(make_rng(cfg.seed, TAG_DATA, rep).integers(2**31))
    # beta/gamma depend on the replicate only, so cells of one replicate share them
    train, truth = gen_gauss(GaussSimConfig(cfg.d, rho, n, cell_seed))
    test, _ = gen_gauss(GaussSimConfig(cfg.d, rho, cfg.n_test, cell_seed + 1))
    if cfg.model == "forest":
        params = ForestParams(n_trees=cfg.n_trees, min_leaf=cfg.min_leaf)
        fit_seed = int(make_rng(cfg.seed, TAG_FIT, rep, n).integers(2**31))
        model = fit_hetero_pair(train.values, train.target, params, seed=fit_seed)
    else:
        model = truth
    oracle = np.array([oracle_shapley_hstar(truth, x) for x in test.values])
    out = {}
    for name in cfg.samplers:
        sampler = make_sampler({"type": name}, train)
        g = GameSpec("Hstar_total", model, sampler, m=cfg.m)
        est = np.array([shapley_exact(bind(g, x, RngStream(cfg.seed, (rep, i, n))))
                        for i, x in enumerate(test.values)])
        out[name] = float(np.mean(np.abs(est - oracle)))
    return out


def run_gauss_convergence(cfg: ConvergenceConfig, n_jobs: int = 1) -> ExperimentResult:
    """MAE of estimated entropy Shapley values against the closed form.

    Every cell of the grid uses exact coalition enumeration, so the error
    comes only from the fitted model and the sampler.
    """
    jobs = [(n, rho, r) for rho in cfg.rho_grid for n in cfg.n_grid
            for r in range(cfg.replicates)]
    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            maes = list(pool.map(lambda j: _cell(cfg, *j), jobs))
    else:
        maes = [_cell(cfg, *j) for j in jobs]
    records = [{"n": n, "rho": rho, "replicate": r, "sampler": s, "mae": mae[s]}
               for (n, rho, r), mae in zip(jobs, maes) for s in cfg.samplers]
    table = {}
    for rho in cfg.rho_grid:
        for n in cfg.n_grid:
            for s in cfg.samplers:
                vals = [rec["mae"] for rec in records
                        if rec["rho"] == rho and rec["n"] == n and rec["sampler"] == s]
                mean, se = mean_and_se(vals)
                table[f"rho={rho}|n={n}|{s}"] = {"mae": mean, "se": se}
    metrics = {"mae": table, "checks": _checks(cfg, table)}
    config = asdict(cfg)
    return ExperimentResult("gauss-convergence", config, metrics, records)


def _checks(cfg, table):
    checks = {}
    lo, hi = min(cfg.n_grid), max(cfg.n_grid)
    for rho in cfg.rho_grid:
        if lo != hi:
            for s in cfg.samplers:
                a, b = table[f"rho={rho}|n={hi}|{s}"], table[f"rho={rho}|n={lo}|{s}"]
                checks[f"rho={rho}|{s}|mae_n{hi}<mae_n{lo}"] = below_by_one_se(
                    a["mae"], a["se"], b["mae"], b["se"])
        if {"gaussian", "marginal"} <= set(cfg.samplers):
            for n in cfg.n_grid:
                a, b = table[f"rho={rho}|n={n}|gaussian"], table[f"rho={rho}|n={n}|marginal"]
                checks[f"rho={rho}|n={n}|gaussian<marginal"] = below_by_one_se(
                    a["mae"], a["se"], b["mae"], b["se"])
    return checks


def true_gaussian_sampler(model: GaussianLinearModel) -> GaussianConditionalSampler:
    """Conditional sampler with the true (zero) mean and Toeplitz covariance."""
    return GaussianConditionalSampler(np.zeros(model.d), model.sigma)
