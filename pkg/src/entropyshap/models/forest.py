"""Bagged CART forests for classification and regression.

Trees use axis-aligned splits chosen among ``mtry`` random candidate
features.  Regression leaves store the mean and variance of their training
targets; classification leaves store class frequencies.

Missing cells (NaN) are ignored when scoring a split.  The rows that are
missing the split feature, at fit time and at prediction time, go to the
child that received more training rows.  This rule is fixed and
deterministic.  It is not XGBoost's learned default direction.
"""

from __future__ import annotations

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from numba import njit

from ..errors import ConfigError, DataError
from ..rng import TAG_FIT, RngStream

SCHEMA_VERSION = 1


class DegenerateModelWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 50
    max_depth: int | None = None
    min_leaf: int = 5
    mtry: int | None = None
    bootstrap: bool = True

    def resolve_mtry(self, d, task):
        if self.mtry is not None:
            return max(1, min(int(self.mtry), d))
        if task == "classification":
            return max(1, math.ceil(math.sqrt(d)))
        return max(1, math.ceil(d / 3))


class _Tree:
    """Flat array representation; node 0 is the root."""

    __slots__ = ("feature", "threshold", "left", "right", "default_left", "n_node", "value")

    def __init__(self, feature, threshold, left, right, default_left, n_node, value):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.default_left = np.asarray(default_left, dtype=bool)
        self.n_node = np.asarray(n_node, dtype=np.int64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def depth(self):
        depth = np.zeros(len(self.feature), dtype=np.int64)
        for i in range(len(self.feature)):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def to_record(self, i=0):
        rec = {"n": int(self.n_node[i])}
        if self.feature[i] < 0:
            rec["value"] = [float(v) for v in self.value[i]]
            return rec
        rec.update(
            feature=int(self.feature[i]),
            threshold=float(self.threshold[i]),
            default_left=bool(self.default_left[i]),
            left=self.to_record(int(self.left[i])),
            right=self.to_record(int(self.right[i])),
        )
        return rec

    @classmethod
    def from_record(cls, rec):
        cols = {k: [] for k in cls.__slots__}

        def visit(r):
            i = len(cols["feature"])
            for k in cols:
                cols[k].append(None)
            cols["n_node"][i] = r["n"]
            if "value" in r:
                cols["feature"][i], cols["threshold"][i] = -1, 0.0
                cols["left"][i] = cols["right"][i] = -1
                cols["default_left"][i] = True
                cols["value"][i] = r["value"]
                return i
            cols["feature"][i] = r["feature"]
            cols["threshold"][i] = r["threshold"]
            cols["default_left"][i] = r["default_left"]
            cols["left"][i] = visit(r["left"])
            cols["right"][i] = visit(r["right"])
            return i

        visit(rec)
        width = len(next(v for v in cols["value"] if v is not None))
        cols["value"] = [v if v is not None else [0.0] * width for v in cols["value"]]
        return cls(**cols)


@njit(cache=True)
def _scan_split(xs, ys, n_classes, min_leaf):
    """Best split of sorted observations; ``n_classes == 0`` means regression.

    Returns ``(gain, position)`` where the left child is ``xs[:position]``.
    """
    n = xs.shape[0]
    best_gain = -np.inf
    best_pos = -1
    if n_classes == 0:
        mean = 0.0
        for k in range(n):
            mean += ys[k]
        mean /= n
        cs = 0.0
        for k in range(n - min_leaf):
            cs += ys[k] - mean
            if k + 1 < min_leaf or not xs[k] < xs[k + 1]:
                continue
            nl = k + 1.0
            g = cs * cs / nl + cs * cs / (n - nl)
            if g > best_gain:
                best_gain = g
                best_pos = k + 1
        return best_gain, best_pos
    tot = np.zeros(n_classes)
    for k in range(n):
        tot[int(ys[k])] += 1.0
    tot_sq = 0.0
    for c in range(n_classes):
        tot_sq += tot[c] * tot[c]
    cl = np.zeros(n_classes)
    sl = 0.0  # sum of squared left counts
    sr = tot_sq
    for k in range(n - min_leaf):
        c = int(ys[k])
        sl += 2.0 * cl[c] + 1.0
        cr = tot[c] - cl[c]
        sr += -2.0 * cr + 1.0
        cl[c] += 1.0
        if k + 1 < min_leaf or not xs[k] < xs[k + 1]:
            continue
        nl = k + 1.0
        g = sl / nl + sr / (n - nl) - tot_sq / n
        if g > best_gain:
            best_gain = g
            best_pos = k + 1
    return best_gain, best_pos


def _best_split(xv, y, task, n_classes, min_leaf):
    """Best threshold on one feature; returns (gain, threshold, n_left_obs, n_right_obs)."""
    obs = ~np.isnan(xv)
    xo = xv[obs]
    n = xo.shape[0]
    if n < 2 * min_leaf:
        return -np.inf, 0.0, 0, 0
    order = np.argsort(xo, kind="stable")
    xs = xo[order]
    ys = y[obs][order]
    gain, pos = _scan_split(xs, ys, 0 if task == "regression" else n_classes, min_leaf)
    if pos < 0:
        return -np.inf, 0.0, 0, 0
    thr = 0.5 * (xs[pos - 1] + xs[pos])
    if not thr < xs[pos]:  # midpoint rounding between adjacent floats
        thr = xs[pos - 1]
    return float(gain), float(thr), int(pos), int(n - pos)


@njit(cache=True, nogil=True)
def _traverse(X, roots, feature, threshold, default_left, left, right, is_leaf, out):
    n, B = out.shape
    for i in range(n):
        for b in range(B):
            node = roots[b]
            while not is_leaf[node]:
                v = X[i, feature[node]]
                if np.isnan(v):
                    go_left = default_left[node]
                else:
                    go_left = v <= threshold[node]
                node = left[node] if go_left else right[node]
            out[i, b] = node


@njit(cache=True, nogil=True)
def _mean_leaf(X, roots, feature, threshold, default_left, left, right, is_leaf, val, out):
    # tree-outer order keeps one tree's nodes hot in cache
    n = X.shape[0]
    B = roots.shape[0]
    for b in range(B):
        for i in range(n):
            node = roots[b]
            while not is_leaf[node]:
                v = X[i, feature[node]]
                if np.isnan(v):
                    go_left = default_left[node]
                else:
                    go_left = v <= threshold[node]
                node = left[node] if go_left else right[node]
            out[i] += val[node]
    for i in range(n):
        out[i] /= B


def _leaf_value(y, task, n_classes):
    if task == "regression":
        return [float(y.mean()), float(y.var())]
    counts = np.bincount(y.astype(np.int64), minlength=n_classes).astype(np.float64)
    return list(counts / counts.sum())


def _grow(X, y, task, n_classes, params, mtry, rng):
    d = X.shape[1]
    feat, thr, left, right, dleft, nnode, value = [], [], [], [], [], [], []

    def new_node(n):
        for col in (feat, thr, left, right, dleft, value):
            col.append(None)
        nnode.append(n)
        return len(nnode) - 1

    root = new_node(X.shape[0])
    stack = [(np.arange(X.shape[0]), 0, root)]
    while stack:
        idx, depth, node = stack.pop()
        yi = y[idx]
        can_split = (
            (params.max_depth is None or depth < params.max_depth)
            and idx.shape[0] >= 2 * params.min_leaf
            and np.ptp(yi) > 0
        )
        best = (-np.inf, -1, 0.0, 0, 0)
        if can_split:
            for f in rng.choice(d, size=mtry, replace=False):
                g, t, nl, nr = _best_split(X[idx, f], yi, task, n_classes, params.min_leaf)
                if g > best[0] + 1e-12:
                    best = (g, int(f), t, nl, nr)
        if best[1] < 0 or best[0] <= 1e-12:
            feat[node], thr[node], left[node], right[node], dleft[node] = -1, 0.0, -1, -1, True
            value[node] = _leaf_value(yi, task, n_classes)
            continue
        _, f, t, nl, nr = best
        xv = X[idx, f]
        miss = np.isnan(xv)
        go_left = np.zeros(idx.shape[0], dtype=bool)
        go_left[~miss] = xv[~miss] <= t
        default_left = nl >= nr
        go_left[miss] = default_left
        li, ri = idx[go_left], idx[~go_left]
        lnode, rnode = new_node(li.shape[0]), new_node(ri.shape[0])
        feat[node], thr[node], left[node], right[node] = f, t, lnode, rnode
        dleft[node], value[node] = default_left, [0.0] * (2 if task == "regression" else n_classes)
        stack.append((ri, depth + 1, rnode))
        stack.append((li, depth + 1, lnode))
    width = 2 if task == "regression" else n_classes
    value = [v if v is not None else [0.0] * width for v in value]
    return _Tree(feat, thr, left, right, dleft, nnode, value)


class ForestModel:
    """Bagged CART ensemble.  Fit with :func:`fit_forest`."""

    def __init__(self, trees, task, n_features, n_classes=None, params=None, seed=0):
        self.trees = list(trees)
        self.task = task
        self.n_features = n_features
        self.n_classes = n_classes
        self.params = params or ForestParams()
        self.seed = seed
        self.oob_prediction_ = None
        self.train_score_ = None
        self._pack()

    @property
    def B(self):
        return len(self.trees)

    @property
    def is_regression(self):
        return self.task == "regression"

    def _pack(self):
        offsets = np.cumsum([0] + [len(t.feature) for t in self.trees])
        self._roots = offsets[:-1]
        cat = lambda name: np.concatenate([getattr(t, name) for t in self.trees])  # noqa: E731
        feature = cat("feature")
        self._leaf = feature < 0
        self._feature = np.where(self._leaf, 0, feature)
        self._threshold = cat("threshold")
        self._default_left = cat("default_left")
        shift = np.repeat(offsets[:-1], [len(t.feature) for t in self.trees])
        left, right = cat("left"), cat("right")
        ids = np.arange(len(feature))
        self._left = np.where(self._leaf, ids, left + shift)
        self._right = np.where(self._leaf, ids, right + shift)
        self._value = np.concatenate([t.value for t in self.trees], axis=0)
        self._value0 = np.ascontiguousarray(self._value[:, 0])

    def _check(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ConfigError(f"expected {self.n_features} features, got {X.shape[1]}")
        return X

    def apply(self, X) -> np.ndarray:
        """Global leaf index reached in every tree, shape (n, B)."""
        X = np.ascontiguousarray(self._check(X))
        out = np.empty((X.shape[0], self.B), dtype=np.int64)
        _traverse(X, self._roots, self._feature, self._threshold, self._default_left,
                  self._left, self._right, self._leaf, out)
        return out

    def member_values(self, X) -> np.ndarray:
        """Leaf payloads per tree: (B, n, C) probabilities or (B, n, 2) mean/var."""
        return np.transpose(self._value[self.apply(X)], (1, 0, 2))

    def member_proba(self, X) -> np.ndarray:
        if self.is_regression:
            raise ConfigError("member_proba needs a classification forest")
        return self.member_values(X)

    def predict_proba(self, X) -> np.ndarray:
        return self.member_proba(X).mean(axis=0)

    def predict(self, X) -> np.ndarray:
        """Regression mean, or predicted probability of the last class."""
        if self.is_regression:
            X = np.ascontiguousarray(self._check(X))
            out = np.zeros(X.shape[0])
            _mean_leaf(X, self._roots, self._feature, self._threshold, self._default_left,
                       self._left, self._right, self._leaf, self._value0, out)
            return out
        return self.member_values(X)[..., -1].mean(axis=0)

    def predict_dist(self, X):
        """Regression: (mean, variance) of the equal-weight mixture of leaves."""
        if not self.is_regression:
            return self.predict_proba(X)
        vals = self.member_values(X)
        mean = vals[..., 0].mean(axis=0)
        var = vals[..., 1].mean(axis=0) + vals[..., 0].var(axis=0)
        return mean, var

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": SCHEMA_VERSION,
            "kind": "forest",
            "task": self.task,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "seed": self.seed,
            "params": asdict(self.params),
            "trees": [t.to_record() for t in self.trees],
        })

    @classmethod
    def from_json(cls, text: str) -> ForestModel:
        obj = json.loads(text)
        if obj.get("kind") != "forest" or obj.get("schema_version") != SCHEMA_VERSION:
            raise DataError("not a forest document of a supported schema version")
        trees = [_Tree.from_record(r) for r in obj["trees"]]
        return cls(trees, obj["task"], obj["n_features"], obj["n_classes"],
                   ForestParams(**obj["params"]), obj["seed"])


def _canonical_order(X, y):
    keys = [y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys[::-1])


def fit_forest(X, y, task: str = "regression", params: ForestParams | None = None,
               seed: int = 0, n_jobs: int = 1) -> ForestModel:
    """Fit a bagged CART forest.

    ``X`` may contain NaN for missing cells.  Rows are put in a canonical
    order first, so the result does not depend on the input row order.
    Tree ``b`` draws from stream ``(seed, FIT, b)``, so it does not depend
    on ``n_jobs`` either.
    """
    if task not in ("regression", "classification"):
        raise ConfigError(f"unknown task {task!r}")
    params = params or ForestParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if hasattr(X, "ndim") and X.ndim != 2:
        raise DataError("X must be two-dimensional")
    n, d = X.shape
    if y.shape[0] != n:
        raise DataError("X and y have different numbers of rows")
    if np.any(np.isnan(y)):
        raise DataError("target contains missing values")
    if n < 2 * params.min_leaf:
        raise DataError(f"need n >= 2 * min_leaf = {2 * params.min_leaf}, got n={n}")
    if params.n_trees < 1:
        raise ConfigError("n_trees must be >= 1")
    n_classes = None
    if task == "classification":
        if np.any(y != np.round(y)) or np.any(y < 0):
            raise DataError("classification labels must be non-negative integers")
        n_classes = max(int(y.max()) + 1, 2)
    if np.ptp(y) == 0:
        warnings.warn("constant target: every tree is a single leaf", DegenerateModelWarning,
                      stacklevel=2)

    order = _canonical_order(X, y)
    Xs, ys = X[order], y[order]
    mtry = params.resolve_mtry(d, task)
    root = RngStream(int(seed), (TAG_FIT,))

    def one_tree(b):
        rng = root.child(b).generator()
        if params.bootstrap:
            idx = rng.integers(0, n, size=n)
        else:
            idx = np.arange(n)
        inbag = np.zeros(n, dtype=bool)
        inbag[idx] = True
        return _grow(Xs[idx], ys[idx], task, n_classes, params, mtry, rng), inbag

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            results = list(pool.map(one_tree, range(params.n_trees)))
    else:
        results = [one_tree(b) for b in range(params.n_trees)]
    model = ForestModel([r[0] for r in results], task, d, n_classes, params, seed)

    # out-of-bag predictions, mapped back to the caller's row order
    leaves = model.apply(Xs)
    vals = model._value[leaves][..., 0 if task == "regression" else slice(None)]
    inbag = np.stack([r[1] for r in results], axis=1)  # (n, B)
    oob = ~inbag
    n_oob = oob.sum(axis=1)
    if task == "regression":
        full = vals.mean(axis=1)
        oob_pred = np.where(n_oob > 0, (vals * oob).sum(axis=1) / np.maximum(n_oob, 1), full)
        fitted = full
        ss_res = np.sum((ys - fitted) ** 2)
        ss_tot = np.sum((ys - ys.mean()) ** 2)
        model.train_score_ = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    else:
        full = vals.mean(axis=1)
        oob_pred = np.where((n_oob > 0)[:, None],
                            (vals * oob[..., None]).sum(axis=1) / np.maximum(n_oob, 1)[:, None],
                            full)
        model.train_score_ = float(np.mean(full.argmax(axis=1) == ys))
    inverse = np.empty(n, dtype=np.int64)
    inverse[order] = np.arange(n)
    model.oob_prediction_ = oob_pred[inverse]
    return model
