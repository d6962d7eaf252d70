"""Command-line interface.

``entropyshap explain``     attribute predictive uncertainty on CSV data
``entropyshap experiment``  run a built-in simulation study
``entropyshap verify``      run the exact verification suite

Option precedence is defaults < ``--config`` JSON < flags.  The merged
configuration, minus the output directory and thread count (neither of
which changes any result), is hashed and recorded with every artifact.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from dataclasses import fields

import numpy as np

from . import __version__
from .conformal import band_report, calibrate_matrix, coverage, select_features, zero_pvalue
from .data import load_csv, split_half
from .errors import CapacityError, ConfigError, DataError, EntropyShapError
from .experiments import (ConvergenceConfig, CoverageConfig, MissingnessConfig, SelectionConfig,
                          ShiftConfig, run_coverage, run_friedman_missingness,
                          run_friedman_selection, run_gauss_convergence, run_shift)
from .experiments.result import canonical_json, config_hash
from .games import GameSpec, normalize_game_id
from .imputation import DEFAULT_DRAWS, make_sampler
from .info import units_base
from .models.forest import ForestParams, fit_forest
from .models.hetero import fit_hetero_pair
from .rng import TAG_SPLIT, make_rng
from .shapley import MAX_EXACT_DIM, CoalitionBudget, attribute_dataset
from .svg import bar_chart, line_chart

SCHEMA_VERSION = 1
OUTPUT_ENV = "ENTROPYSHAP_OUTPUT_DIR"
DEFAULT_OUTPUT = "entropyshap-out"
NOT_HASHED = ("out", "threads", "config")

EXPLAIN_DEFAULTS = {
    "train": None, "explain": None, "target": None, "game": "hstar-total",
    "sampler": "marginal", "k": None, "ridge": 1e-8, "m": DEFAULT_DRAWS, "budget": 256,
    "exact": False, "alpha": None, "zero_width": 0.0, "seed": 0, "units": "bits",
    "task": "auto", "n_trees": 50, "min_leaf": 5, "svg": False,
}

EXPERIMENTS = {
    "gauss-convergence": (ConvergenceConfig, run_gauss_convergence),
    "friedman-selection": (SelectionConfig, run_friedman_selection),
    "friedman-missingness": (MissingnessConfig, run_friedman_missingness),
    "shift": (ShiftConfig, run_shift),
    "coverage": (CoverageConfig, run_coverage),
}

# flag name -> config field, for flags whose names differ from the field
_FIELD_ALIASES = {
    "gauss-convergence": {"n": "n_grid", "rho": "rho_grid"},
    "friedman-missingness": {"fractions": "fractions"},
}
_LIST_FIELDS = {"n_grid": int, "rho_grid": float, "samplers": str, "fractions": float}


def _out_dir(value):
    return value or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT


def _load_config_file(path):
    if path is None:
        return {}
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in obj.items()}


def _merge(defaults, args, skip=()):
    """defaults < --config file < explicitly given flags."""
    merged = dict(defaults)
    merged.update(_load_config_file(getattr(args, "config", None)))
    for k, v in vars(args).items():
        if k in skip or k in ("command", "name", "config", "func"):
            continue
        if v is not None:
            merged[k] = v
    return merged


def _hashed(cfg):
    return {k: v for k, v in cfg.items() if k not in NOT_HASHED}


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


# -- explain ----------------------------------------------------------------------

def _header(path):
    try:
        with open(path, newline="") as fh:
            return next(csv.reader(fh), [])
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _resolve_task(task, game_id, y):
    if task != "auto":
        return task
    if game_id in ("Hstar_aleatoric", "Hstar_epistemic"):
        return "classification"
    if game_id == "logvar":
        return "regression"
    values = np.unique(y)
    if values.size <= 20 and np.all(values == np.round(values)):
        return "classification"
    return "regression"


def _fit(task, X, y, cfg, seed, n_jobs):
    params = ForestParams(n_trees=int(cfg["n_trees"]), min_leaf=int(cfg["min_leaf"]))
    if task == "classification":
        _, codes = np.unique(y, return_inverse=True)
        return fit_forest(X, codes.astype(np.float64), "classification", params, seed, n_jobs)
    if task == "regression":
        return fit_hetero_pair(X, y, params, seed=seed, n_jobs=n_jobs)
    raise ConfigError(f"unknown task {task!r}; choose auto, classification or regression")


def cmd_explain(args) -> int:
    cfg = _merge(EXPLAIN_DEFAULTS, args, skip=("out", "threads"))
    for key in ("train", "explain", "target"):
        if not cfg.get(key):
            raise ConfigError(f"--{key} is required")
    out = _out_dir(args.out)
    threads = args.threads or 1
    base = units_base(cfg["units"])
    game_id = normalize_game_id(cfg["game"])

    train = load_csv(cfg["train"], cfg["target"])
    explain_target = cfg["target"] if cfg["target"] in _header(cfg["explain"]) else None
    explain = load_csv(cfg["explain"], explain_target)
    # inputs enter the hash by content, so the spelling of a path does not matter
    inputs = {"train": {"file": os.path.basename(cfg["train"]), "sha": train.content_hash()},
              "explain": {"file": os.path.basename(cfg["explain"]), "sha": explain.content_hash()}}
    recorded = {k: v for k, v in _hashed(cfg).items() if k not in ("train", "explain")}
    chash = config_hash({**recorded, "inputs": {k: v["sha"] for k, v in inputs.items()}})
    if list(explain.feature_names) != list(train.feature_names):
        raise DataError("explain CSV columns differ from the training features")
    if cfg["exact"] and train.d > MAX_EXACT_DIM:
        raise CapacityError(f"--exact supports d <= {MAX_EXACT_DIM} features, got d={train.d}; "
                            "drop --exact to use Monte-Carlo sampling")
    seed = int(cfg["seed"])
    task = _resolve_task(cfg["task"], game_id, train.target)

    if cfg["alpha"] is not None:
        split = split_half(train, int(make_rng(seed, TAG_SPLIT).integers(2**31)))
        fit_part = train.subset(split.training_indices)
        cal_part = train.subset(split.calibration_indices)
    else:
        fit_part, cal_part = train, None
    model = _fit(task, fit_part.as_nan(), fit_part.target, cfg, seed, threads)
    sampler = make_sampler({"type": cfg["sampler"], "k": cfg["k"], "ridge": cfg["ridge"]},
                           fit_part)
    game = GameSpec(game_id, model, sampler, m=int(cfg["m"]),
                    base=base if game_id.startswith("Hstar") else None)
    mode = "exact" if cfg["exact"] else "mc"
    budget = CoalitionBudget(int(cfg["budget"]))
    att = attribute_dataset(game, explain, mode=mode, budget=budget, seed=seed, n_jobs=threads)
    att.meta.update({"config_hash": chash, "task": task, "units": cfg["units"]})

    os.makedirs(out, exist_ok=True)
    artifacts = {}
    path = os.path.join(out, "attributions.json")
    with open(path, "w") as fh:
        fh.write(att.to_json() + "\n")
    artifacts["attributions.json"] = path
    path = os.path.join(out, "attributions.csv")
    att.write_csv(path)
    artifacts["attributions.csv"] = path

    if cal_part is not None:
        cal = attribute_dataset(game, cal_part, mode=mode, budget=budget,
                                seed=int(make_rng(seed, TAG_SPLIT, 1).integers(2**31)),
                                n_jobs=threads)
        bands = calibrate_matrix(cal.values, float(cfg["alpha"]), list(train.feature_names),
                                 chash)
        report = band_report(
            bands, select_features(bands, float(cfg["zero_width"])),
            pvalues=[zero_pvalue(cal.values[:, j]) for j in range(train.d)],
            coverages=[coverage(b, att.values[:, j]) for j, b in enumerate(bands)])
        report.update({"config_hash": chash, "n_cal": cal.n, "alpha": float(cfg["alpha"])})
        path = os.path.join(out, "bands.json")
        _write_json(path, report)
        artifacts["bands.json"] = path

    if cfg["svg"]:
        path = os.path.join(out, "attributions.svg")
        with open(path, "w") as fh:
            fh.write(bar_chart(train.feature_names, np.abs(att.values).mean(axis=0),
                               f"mean |phi| ({game_id}, config {chash})"))
        artifacts["attributions.svg"] = path

    manifest = {
        "schema_version": SCHEMA_VERSION, "command": "explain", "version": __version__,
        "config": recorded, "config_hash": chash, "inputs": inputs,
        "artifacts": {name: _sha256(p) for name, p in sorted(artifacts.items())},
        "efficiency_gap": att.efficiency_gap(),
    }
    _write_json(os.path.join(out, "manifest.json"), manifest)
    print(f"wrote {len(artifacts) + 1} files to {out} (config {chash})")
    return 0


# -- experiment -------------------------------------------------------------------

def _experiment_config(name, args):
    cls, _ = EXPERIMENTS[name]
    valid = {f.name for f in fields(cls)}
    aliases = _FIELD_ALIASES.get(name, {})
    raw = _load_config_file(args.config)
    for k, v in vars(args).items():
        if k in ("command", "name", "config", "func", "out", "threads", "svg") or v is None:
            continue
        raw[aliases.get(k, k)] = v
    unknown = sorted(set(raw) - valid)
    if unknown:
        raise ConfigError(f"options {unknown} do not apply to experiment {name!r}; "
                          f"valid: {sorted(valid)}")
    for key, typ in _LIST_FIELDS.items():
        if key in raw:
            v = raw[key]
            items = v.split(",") if isinstance(v, str) else list(v)
            raw[key] = tuple(typ(s.strip() if isinstance(s, str) else s) for s in items)
    try:
        return cls(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _experiment_svg(result):
    m = result.metrics
    if result.name == "gauss-convergence":
        cfg = result.config
        series = {}
        for rho in cfg["rho_grid"]:
            for s in cfg["samplers"]:
                series[f"{s} rho={rho}"] = [m["mae"][f"rho={rho}|n={n}|{s}"]["mae"]
                                            for n in cfg["n_grid"]]
        return line_chart(cfg["n_grid"], series, "MAE vs training size")
    if result.name == "friedman-selection":
        return bar_chart([b["feature"] for b in m["variance"]["bands"]],
                         [b["q_hi"] - b["q_lo"] for b in m["variance"]["bands"]],
                         "variance model: band width per feature")
    if result.name == "friedman-missingness":
        fr = list(result.config["fractions"])
        return line_chart(fr, {"AUC": [m["auc"][str(f)]["auc"] for f in fr]}, "AUC vs missingness")
    if result.name == "shift":
        rec = [r for r in result.records if r["replicate"] == 0]
        return bar_chart([r["feature"] for r in rec], [r["mean_abs_shift"] for r in rec],
                         "mean |phi| shift (replicate 0)")
    return bar_chart(["coverage"], [m["mean_coverage"]], "mean coverage")


def cmd_experiment(args) -> int:
    name = args.name
    cfg = _experiment_config(name, args)
    _, run = EXPERIMENTS[name]
    threads = args.threads or 1
    result = run(cfg) if name == "coverage" else run(cfg, n_jobs=threads)
    out = _out_dir(args.out)
    paths = result.write(out)
    if args.svg:
        path = os.path.join(out, result.stem + ".svg")
        with open(path, "w") as fh:
            fh.write(_experiment_svg(result).replace(
                "</svg>", f"<desc>config {result.hash}</desc>\n</svg>"))
        paths.append(path)
    print(canonical_json(result.metrics)[:2000])
    print("wrote " + ", ".join(paths))
    return 0


# -- verify -----------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(seed=args.seed or 0, n_tables=args.tables or 100,
                         mutation=args.mutation)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return 1
    return 0


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entropyshap", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with options; flags override it")
        sp.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or "
                                      f"./{DEFAULT_OUTPUT})")
        sp.add_argument("--threads", type=int, help="worker threads; results do not depend "
                                                    "on it (default: 1)")
        sp.add_argument("--seed", type=int, help="root seed (default: 0)")
        sp.add_argument("--svg", action="store_const", const=True,
                        help="also write a static SVG chart")

    d = EXPLAIN_DEFAULTS
    e = sub.add_parser("explain", help="attribute predictive uncertainty on CSV data")
    common(e)
    e.add_argument("--train", help="training CSV with a header row")
    e.add_argument("--explain", help="CSV of rows to explain (same feature columns)")
    e.add_argument("--target", help="name of the target column")
    e.add_argument("--game", help="v0, hstar-total, hstar-aleatoric, hstar-epistemic or "
                                  f"logvar (default: {d['game']})")
    e.add_argument("--sampler", choices=("marginal", "gaussian", "knn"),
                   help=f"out-of-coalition sampler (default: {d['sampler']})")
    e.add_argument("--k", type=int, help="neighbours for the knn sampler (default: ceil(sqrt(n)))")
    e.add_argument("--ridge", type=float, help=f"covariance ridge for the gaussian sampler "
                                               f"(default: {d['ridge']:g})")
    e.add_argument("--m", type=int, help=f"sampler draws per coalition (default: {d['m']})")
    e.add_argument("--budget", type=int, help="Monte-Carlo coalition evaluations per row, even "
                                              f"(default: {d['budget']})")
    e.add_argument("--exact", action="store_const", const=True,
                   help=f"enumerate all coalitions (d <= {MAX_EXACT_DIM})")
    e.add_argument("--alpha", type=float, help="write conformal bands at this level, fitting on "
                                               "half of the training rows (default: off)")
    e.add_argument("--zero-width", type=float, dest="zero_width",
                   help="bands inside [-w, w] are flagged null-consistent (default: 0)")
    e.add_argument("--units", choices=("bits", "nats"),
                   help=f"units for entropy games (default: {d['units']})")
    e.add_argument("--task", choices=("auto", "classification", "regression"),
                   help=f"model type (default: {d['task']})")
    e.add_argument("--n-trees", type=int, dest="n_trees",
                   help=f"trees per forest (default: {d['n_trees']})")
    e.add_argument("--min-leaf", type=int, dest="min_leaf",
                   help=f"minimum training rows per leaf (default: {d['min_leaf']})")
    e.set_defaults(func=cmd_explain)

    x = sub.add_parser("experiment", help="run a built-in experiment")
    x.add_argument("name", choices=sorted(EXPERIMENTS), help="experiment to run")
    common(x)
    x.add_argument("--replicates", type=int, help="number of replicates")
    x.add_argument("--n", help="gauss-convergence: comma-separated training sizes "
                               "(default: 250,2000)")
    x.add_argument("--rho", help="gauss-convergence: comma-separated correlations (default: 0.5)")
    x.add_argument("--samplers", help="gauss-convergence: comma-separated samplers "
                                      "(default: marginal,gaussian,knn)")
    x.add_argument("--model", choices=("forest", "analytic"),
                   help="gauss-convergence: fitted or true entropy function (default: forest)")
    x.add_argument("--fractions", help="friedman-missingness: comma-separated missing fractions "
                                       "(default: 0,0.1,...,0.5)")
    x.add_argument("--alpha", type=float, help="conformal level (default: 0.1)")
    x.add_argument("--budget", type=int, help="coalition evaluations per row")
    x.add_argument("--m", type=int, help="sampler draws per coalition")
    x.add_argument("--n-train", type=int, dest="n_train", help="training rows")
    x.add_argument("--n-test", type=int, dest="n_test", help="test rows")
    x.add_argument("--n-explain", type=int, dest="n_explain", help="test rows to explain")
    x.add_argument("--n-cal", type=int, dest="n_cal", help="coverage: calibration size")
    x.add_argument("--noise-scale", type=float, dest="noise_scale",
                   help="shift: perturbation sd as a fraction of the feature sd (default: 0.5)")
    x.add_argument("--perturb-feature", type=int, dest="perturb_feature",
                   help="shift: feature index to perturb (default: random)")
    x.add_argument("--dataset", help="shift: CSV path with a binary target, or 'blobs'")
    x.add_argument("--target", help="shift: target column of --dataset (default: y)")
    x.set_defaults(func=cmd_experiment)

    v = sub.add_parser("verify", help="run the exact verification suite")
    v.add_argument("--seed", type=int, help="seed for the random tables (default: 0)")
    v.add_argument("--tables", type=int, help="number of random tables (default: 100)")
    v.add_argument("--mutation", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EntropyShapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except np.linalg.LinAlgError as exc:
        print(f"error: linear algebra failure: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
