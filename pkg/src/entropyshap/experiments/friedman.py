"""Modified Friedman benchmark: mean and variance driven by disjoint features.

``Y`` is the classic Friedman function of ``X1..X5``.  The observed target
``Z`` is the same function of ``X6..X10`` plus noise whose standard
deviation is ``Y`` rescaled to [0, 1].  A mean model should therefore lean
on ``X6..X10``, and a variance model on ``X1..X5``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from ..conformal import calibrate_matrix, coverage, select_features
from ..data import Dataset, from_arrays, mask_missing, split_half
from ..errors import ConfigError
from ..games import GameSpec
from ..imputation import MarginalSampler
from ..models.forest import ForestParams
from ..models.hetero import fit_hetero_pair
from ..rng import TAG_DATA, TAG_FIT, TAG_MASK, TAG_SPLIT, make_rng
from ..shapley import CoalitionBudget, attribute_dataset
from .metrics import mean_and_se, roc_auc
from .result import ExperimentResult

D = 10
NAMES = [f"X{j + 1}" for j in range(D)]
SIGNAL_MEAN = np.arange(5, 10)
SIGNAL_VAR = np.arange(0, 5)


@dataclass(frozen=True)
class FriedmanConfig:
    n_train: int = 2000
    n_test: int = 1000
    seed: int = 0
    missing_fraction: float = 0.0

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ConfigError("n_train and n_test must be >= 1")
        if not 0.0 <= self.missing_fraction <= 1.0:
            raise ConfigError("missing_fraction must lie in [0, 1]")


def _friedman(X):
    return (10 * np.sin(np.pi * X[:, 0] * X[:, 1]) + 20 * (X[:, 2] - 0.5) ** 2
            + 10 * X[:, 3] + 5 * X[:, 4])


def gen_friedman(cfg: FriedmanConfig) -> tuple[Dataset, Dataset]:
    """Training and test sets with target ``Z``.

    ``Y`` is min-max rescaled with the training batch's range; test rows
    are clamped to [0, 1].  The training-set missingness (if any) is
    applied afterwards and never touches the target or the test set.
    """
    rng = make_rng(cfg.seed, TAG_DATA)
    n = cfg.n_train + cfg.n_test
    X = rng.uniform(size=(n, D))
    y = _friedman(X) + rng.standard_normal(n)
    tr = slice(0, cfg.n_train)
    lo, hi = y[tr].min(), y[tr].max()
    y_tilde = np.clip((y - lo) / (hi - lo) if hi > lo else np.zeros(n), 0.0, 1.0)
    z = _friedman(X[:, 5:]) + y_tilde * rng.standard_normal(n)
    train = from_arrays(X[tr], z[tr], NAMES)
    test = from_arrays(X[cfg.n_train:], z[cfg.n_train:], NAMES)
    if cfg.missing_fraction > 0:
        train = mask_missing(train, cfg.missing_fraction, int(make_rng(cfg.seed, TAG_MASK)
                                                              .integers(2**31)))
    return train, test


@dataclass(frozen=True)
class SelectionConfig:
    """Settings shared by the selection and missingness harnesses.

    ``budget`` counts coalition evaluations per row; ``m`` is the number of
    background draws per coalition.  ``n_explain`` caps the number of test
    rows explained (``None`` explains all of them).
    """

    n_train: int = 2000
    n_test: int = 1000
    replicates: int = 20
    alpha: float = 0.1
    budget: int = 36
    m: int = 16
    n_trees: int = 50
    min_leaf: int = 5
    residuals: str = "oob"
    n_explain: int | None = None
    seed: int = 0


def _replicate_seed(seed, rep):
    return int(make_rng(seed, TAG_DATA, rep).integers(2**31))


def _attribute(model, game_id, background, ds, cfg, seed, n_jobs):
    g = GameSpec(game_id, model, MarginalSampler(background), m=cfg.m)
    return attribute_dataset(g, ds, budget=CoalitionBudget(cfg.budget), seed=seed,
                             n_jobs=n_jobs)


def _params(cfg):
    return ForestParams(n_trees=cfg.n_trees, min_leaf=cfg.min_leaf)


def _selection_replicate(cfg: SelectionConfig, rep: int, n_jobs: int):
    rseed = _replicate_seed(cfg.seed, rep)
    train, test = gen_friedman(FriedmanConfig(cfg.n_train, cfg.n_test, rseed))
    if cfg.n_explain is not None:
        test = test.subset(np.arange(min(cfg.n_explain, test.n)))
    split = split_half(train, int(make_rng(rseed, TAG_SPLIT).integers(2**31)))
    fit_part = train.subset(split.training_indices)
    cal_part = train.subset(split.calibration_indices)
    model = fit_hetero_pair(fit_part.values, fit_part.target, _params(cfg),
                            seed=int(make_rng(rseed, TAG_FIT).integers(2**31)),
                            residuals=cfg.residuals, n_jobs=n_jobs)
    out = {}
    for label, gid in (("mean", "v0"), ("variance", "logvar")):
        cal = _attribute(model, gid, fit_part, cal_part, cfg, rseed, n_jobs)
        tst = _attribute(model, gid, fit_part, test, cfg, rseed + 1, n_jobs)
        bands = calibrate_matrix(cal.values, cfg.alpha, NAMES)
        med = np.median(np.abs(tst.values), axis=0)
        out[label] = {
            "median_abs_phi": med.tolist(),
            "median_first5": float(np.median(np.abs(tst.values[:, SIGNAL_VAR]))),
            "median_last5": float(np.median(np.abs(tst.values[:, SIGNAL_MEAN]))),
            "q_lo": [b.q_lo for b in bands],
            "q_hi": [b.q_hi for b in bands],
            "coverage": [coverage(b, tst.values[:, j]) for j, b in enumerate(bands)],
            "decision": select_features(bands),
            "n_cal": cal.n,
            "efficiency_gap": max(cal.efficiency_gap(), tst.efficiency_gap()),
        }
    return out


def run_friedman_selection(cfg: SelectionConfig, n_jobs: int = 1) -> ExperimentResult:
    """Fit on half the training rows, calibrate on the other half, test on the test set.

    The mean model is explained with the conditional-expectation game, the
    variance model through its log-variance output; both use a marginal
    sampler over the fitting half.
    """
    reps = [_selection_replicate(cfg, r, n_jobs) for r in range(cfg.replicates)]
    records, metrics = [], {}
    for label in ("mean", "variance"):
        for r, rep in enumerate(reps):
            res = rep[label]
            for j in range(D):
                records.append({"model": label, "replicate": r, "feature": NAMES[j],
                                "median_abs_phi": res["median_abs_phi"][j],
                                "q_lo": res["q_lo"][j], "q_hi": res["q_hi"][j],
                                "coverage": res["coverage"][j]})
        if label == "mean":
            wins = [rep[label]["median_last5"] > rep[label]["median_first5"] for rep in reps]
        else:
            wins = [rep[label]["median_first5"] > rep[label]["median_last5"] for rep in reps]
        cov = np.array([rep[label]["coverage"] for rep in reps])
        metrics[label] = {
            "expected_order_replicates": int(sum(wins)),
            "median_first5": [rep[label]["median_first5"] for rep in reps],
            "median_last5": [rep[label]["median_last5"] for rep in reps],
            "bands": [{"feature": NAMES[j],
                       "q_lo": float(np.mean([rep[label]["q_lo"][j] for rep in reps])),
                       "q_hi": float(np.mean([rep[label]["q_hi"][j] for rep in reps])),
                       "coverage": float(cov[:, j].mean())} for j in range(D)],
            "mean_coverage_per_feature": cov.mean(axis=0).tolist(),
            "max_efficiency_gap": float(max(rep[label]["efficiency_gap"] for rep in reps)),
        }
    metrics["replicates"] = cfg.replicates
    metrics["alpha"] = cfg.alpha
    metrics["n_cal"] = reps[0]["mean"]["n_cal"] if reps else 0
    return ExperimentResult("friedman-selection", asdict(cfg), metrics, records)


@dataclass(frozen=True)
class MissingnessConfig:
    fractions: tuple = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    n_train: int = 5000
    n_test: int = 1000
    n_explain: int = 200
    replicates: int = 5
    budget: int = 36
    m: int = 16
    n_trees: int = 50
    min_leaf: int = 5
    residuals: str = "oob"
    seed: int = 0


def _missing_replicate(cfg: MissingnessConfig, frac: float, rep: int, n_jobs: int):
    rseed = _replicate_seed(cfg.seed, rep)
    train, test = gen_friedman(FriedmanConfig(cfg.n_train, cfg.n_test, rseed, frac))
    test = test.subset(np.arange(min(cfg.n_explain, test.n)))
    model = fit_hetero_pair(train.as_nan(), train.target, _params(cfg),
                            seed=int(make_rng(rseed, TAG_FIT).integers(2**31)),
                            residuals=cfg.residuals, n_jobs=n_jobs)
    att = _attribute(model, "logvar", test, test, cfg, rseed, n_jobs)
    importance = np.abs(att.values).mean(axis=0)
    labels = np.zeros(D, dtype=bool)
    labels[SIGNAL_VAR] = True
    curve, auc = roc_auc(importance, labels)
    return importance, curve, auc


def run_friedman_missingness(cfg: MissingnessConfig, n_jobs: int = 1) -> ExperimentResult:
    """AUC of the variance model's feature ranking as training cells go missing.

    Importance is mean absolute Shapley value of the log-variance output
    over clean test rows; positives are ``X1..X5``.  The marginal sampler
    draws from the clean test rows, so only the fitted model sees the
    missingness.
    """
    records, by_frac, curves = [], {}, {}
    for frac in cfg.fractions:
        aucs = []
        for r in range(cfg.replicates):
            imp, curve, auc = _missing_replicate(cfg, frac, r, n_jobs)
            aucs.append(auc)
            curves.setdefault(str(frac), []).append(curve.tolist())
            records.append({"fraction": float(frac), "replicate": r, "auc": auc,
                            **{f"importance_{NAMES[j]}": float(imp[j]) for j in range(D)}})
        mean, se = mean_and_se(aucs)
        by_frac[str(frac)] = {"auc": mean, "se": se, "aucs": aucs}
    fr = list(cfg.fractions)
    trend = all(by_frac[str(b)]["auc"] <= by_frac[str(a)]["auc"]
                + np.hypot(by_frac[str(a)]["se"], by_frac[str(b)]["se"])
                for a, b in zip(fr, fr[1:]))
    metrics = {"auc": by_frac, "nonincreasing_within_noise": bool(trend)}
    return ExperimentResult("friedman-missingness", asdict(cfg), metrics, records,
                            {"roc_curves": curves})
