"""Exact inference on small, fully specified discrete distributions.

A :class:`ProbTable` holds ``P(X_1, ..., X_d, Y)`` as a dense array whose
last axis is the outcome.  Every information-theoretic game is evaluated
here by direct summation, which makes this module the ground truth for the
estimated engine.  Nothing is approximated: the enumeration refuses tables
with more than ``MAX_ORACLE_DIM`` features.
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache

import numpy as np

from . import coalitions as co
from .errors import CapacityError, ConditioningError, ConfigError, VerificationError
from .info import ZERO_TOL, cross_entropy, entropy, kl_divergence, _scale

MAX_ORACLE_DIM = 12
GAMES = ("KL", "CE", "IG", "H", "Hstar", "L", "v0")
INFO_GAMES = ("KL", "CE", "IG", "H")
ZERO_DELTA_TOL = 1e-10


class ProbTable:
    """Joint pmf over ``d`` categorical features and one outcome (last axis)."""

    def __init__(self, probs, labels=None):
        probs = np.array(probs, dtype=np.float64)
        if probs.ndim < 2:
            raise ConfigError("table needs at least one feature axis and the outcome axis")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ConfigError("table entries must be non-negative and sum to 1")
        probs.setflags(write=False)
        self.probs = probs
        self.dims = probs.shape
        self.d = probs.ndim - 1
        self.n_classes = probs.shape[-1]
        if labels is None:
            labels = [f"X{j + 1}" for j in range(self.d)] + ["Y"]
        if len(labels) != self.d + 1:
            raise ConfigError("need one label per feature plus the outcome")
        self.labels = tuple(labels)
        self._marginals = {}
        px = probs.sum(axis=-1)
        self.px = px
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = probs / px[..., None]
        h = np.zeros(px.shape)
        pos = px > ZERO_TOL
        h[pos] = entropy(cond[pos])
        self._cond_full = cond
        self._px_h = np.where(pos, px * h, 0.0)

    def __repr__(self):
        return f"ProbTable(dims={self.dims}, labels={self.labels})"

    def marginal(self, mask: int) -> np.ndarray:
        """Joint of ``(X_S, Y)``, with S axes in increasing feature order."""
        m = self._marginals.get(mask)
        if m is None:
            drop = tuple(j for j in range(self.d) if not mask >> j & 1)
            m = self.probs.sum(axis=drop) if drop else self.probs
            self._marginals[mask] = m
        return m

    def cond_y(self, mask: int, x) -> np.ndarray:
        """``p(Y | X_S = x_S)``."""
        idx = tuple(int(x[j]) for j in co.members(mask, self.d))
        m = self.marginal(mask)[idx]
        total = m.sum()
        if total <= ZERO_TOL:
            raise ConditioningError(f"P(X_S = x_S) = 0 for S={co.members(mask, self.d)}")
        return m / total

    def feature_points(self):
        """All feature assignments with positive probability."""
        for x in itertools.product(*(range(k) for k in self.dims[:-1])):
            if self.px[x] > ZERO_TOL:
                yield x

    def _slice(self, arr, mask, x):
        return arr[tuple(int(x[j]) if mask >> j & 1 else slice(None) for j in range(self.d))]

    def to_json(self) -> str:
        return json.dumps({
            "schema_version": 1,
            "dims": list(self.dims),
            "labels": list(self.labels),
            "probs": [float(p) for p in self.probs.reshape(-1)],
        })

    @classmethod
    def from_json(cls, text: str) -> ProbTable:
        obj = json.loads(text)
        dims = tuple(obj["dims"])
        probs = np.asarray(obj["probs"], dtype=np.float64)
        if int(np.prod(dims)) != probs.size:
            raise ConfigError("product of dims does not match number of probabilities")
        return cls(probs.reshape(dims), obj.get("labels"))


def condition(t: ProbTable, assignment: dict[int, int]) -> np.ndarray:
    """Exact ``p(Y | X_j = v for j, v in assignment)``."""
    x = [0] * t.d
    for j, v in assignment.items():
        if not 0 <= v < t.dims[j]:
            raise ConfigError(f"value {v} out of range for feature {j}")
        x[j] = v
    return t.cond_y(co.from_members(assignment), x)


def exact_value(t: ProbTable, game: str, S: int, x, y_true: int | None = None,
                base: float | None = None) -> float:
    if game not in GAMES:
        raise ConfigError(f"unknown game {game!r}; choose from {GAMES}")
    if len(x) != t.d:
        raise ConfigError(f"x has {len(x)} entries, table has {t.d} features")
    if game == "L" and y_true is None:
        raise ConfigError("game 'L' needs the true outcome y_true")
    scale = _scale(base)
    if game == "Hstar":
        num = t._slice(t._px_h, S, x).sum()
        den = t._slice(t.px, S, x).sum()
        if den <= ZERO_TOL:
            raise ConditioningError("P(X_S = x_S) = 0")
        return float(num / den) / scale
    p_s = t.cond_y(S, x)
    if game == "IG":
        return -entropy(p_s) / scale
    if game == "H":
        return entropy(p_s) / scale
    if game == "L":
        return -float(np.log(p_s[y_true])) / scale
    if game == "v0":
        return float(np.dot(np.arange(t.n_classes), p_s))
    p_full = t.cond_y(co.full(t.d), x)
    if game == "KL":
        return -kl_divergence(p_full, p_s) / scale
    return -cross_entropy(p_full, p_s) / scale


def exact_delta(t: ProbTable, game: str, S: int, j: int, x, y_true=None,
                base: float | None = None) -> float:
    if S >> j & 1:
        raise ConfigError(f"feature {j} is already in the coalition")
    return (exact_value(t, game, S | 1 << j, x, y_true, base)
            - exact_value(t, game, S, x, y_true, base))


def value_function(t: ProbTable, game: str, x, y_true=None, base=None):
    """Memoized ``S -> v(S, x)`` for a fixed instance (usable as a game)."""
    x = tuple(int(v) for v in x)

    @lru_cache(maxsize=None)
    def v(S: int) -> float:
        return exact_value(t, game, S, x, y_true, base)

    v.d = t.d
    return v


def exact_shapley(t: ProbTable, game: str, x, y_true=None, base=None) -> np.ndarray:
    """Shapley values by full enumeration of coalitions."""
    if t.d > MAX_ORACLE_DIM:
        raise CapacityError(
            f"exact enumeration supports d <= {MAX_ORACLE_DIM}, got d={t.d}; "
            "use the Monte-Carlo engine instead")
    return co.enumerate_shapley(value_function(t, game, x, y_true, base), t.d)


def verify_prop5(t: ProbTable, S: int, x, base=None) -> tuple[float, float]:
    """Return ``(v_H - v_Hstar, E_{X_Sbar | x_S} KL(p_{Y|X_Sbar,x_S} || p_{Y|x_S}))``."""
    if S == co.full(t.d):
        raise ConfigError("S must be a strict subset of the features")
    lhs = exact_value(t, "H", S, x, base=base) - exact_value(t, "Hstar", S, x, base=base)
    p_s = t.cond_y(S, x)
    px_slice = t._slice(t.px, S, x)
    cond_slice = t._slice(t._cond_full, S, x)
    total = px_slice.sum()
    rhs = 0.0
    for idx in np.ndindex(px_slice.shape):
        w = px_slice[idx]
        if w > ZERO_TOL:
            rhs += w / total * kl_divergence(cond_slice[idx], p_s)
    return lhs, rhs / _scale(base)


def ci_test(t: ProbTable, j: int, S: int, tol: float = ZERO_DELTA_TOL) -> bool:
    """Direct check of ``Y _|_ X_j | X_S`` on the table."""
    if S >> j & 1:
        raise ConfigError(f"feature {j} is already in the coalition")
    sj = S | 1 << j
    joint = t.marginal(sj)  # axes: members of S and j (sorted), then Y
    order = co.members(sj, t.d)
    jpos = order.index(j)
    # move X_j next to Y: shape (..x_S.., k_j, C)
    joint = np.moveaxis(joint, jpos, -2)
    p_s = joint.sum(axis=(-2, -1), keepdims=True)
    pos = p_s[..., 0, 0] > ZERO_TOL
    with np.errstate(invalid="ignore", divide="ignore"):
        cond = joint / p_s
    py = cond.sum(axis=-2, keepdims=True)
    pxj = cond.sum(axis=-1, keepdims=True)
    gap = np.abs(cond - py * pxj)
    return bool(np.all(gap[pos] < tol))


def sup_abs_delta(t: ProbTable, game: str, S: int, j: int) -> float:
    return max(abs(exact_delta(t, game, S, j, x)) for x in t.feature_points())


def test_thm1a(t: ProbTable, j: int, S: int) -> bool:
    """True iff ``sup_x |Delta_v(S, j, x)| < 1e-10`` for KL, CE, IG and H.

    Raises :class:`VerificationError` if the answer disagrees with the direct
    conditional-independence test or differs between games.
    """
    zero = {g: sup_abs_delta(t, g, S, j) < ZERO_DELTA_TOL for g in INFO_GAMES}
    ci = ci_test(t, j, S)
    if len(set(zero.values())) != 1 or zero["KL"] != ci:
        raise VerificationError(
            f"zero-payout pattern {zero} disagrees with CI test ({ci}) for j={j}, S={S}")
    return zero["KL"]


test_thm1a.__test__ = False  # not a pytest test despite the name


# -- table constructors -------------------------------------------------------

def random_table(d: int, rng: np.random.Generator, n_classes: int = 2,
                 cardinality: int = 2, concentration: float = 1.0) -> ProbTable:
    """Strictly positive Dirichlet-distributed table."""
    dims = (cardinality,) * d + (n_classes,)
    p = rng.dirichlet(np.full(int(np.prod(dims)), concentration))
    p = np.maximum(p, 1e-9)
    return ProbTable((p / p.sum()).reshape(dims))


def ci_table(d: int, j: int, S: int, rng: np.random.Generator, n_classes: int = 2,
             cardinality: int = 2) -> ProbTable:
    """Random positive table with ``Y _|_ X_j | X_S`` by construction.

    Factorizes as ``p(x_S) p(x_j | x_S) p(x_rest, y | x_S)``.
    """
    s_idx = co.members(S, d)
    rest = [k for k in range(d) if k != j and k not in s_idx]
    k = cardinality
    n_s = k ** len(s_idx)
    p_s = rng.dirichlet(np.ones(n_s))
    p_j = rng.dirichlet(np.ones(k), size=n_s)
    n_r = k ** len(rest) * n_classes
    p_r = rng.dirichlet(np.ones(n_r), size=n_s)
    # joint over (x_S, x_j, x_rest, y) flattened as [s, j, r]
    joint = p_s[:, None, None] * p_j[:, :, None] * p_r[:, None, :]
    joint = joint.reshape((k,) * len(s_idx) + (k,) + (k,) * len(rest) + (n_classes,))
    order = s_idx + [j] + rest
    inv = np.argsort(order)
    joint = np.transpose(joint, list(inv) + [d])
    return ProbTable(joint / joint.sum())


def conspiratorial_table() -> ProbTable:
    """X, Z ~ Bern(0.5) independent; Y ~ Bern(0.3 + 0.4 X - 0.2 Z)."""
    p = np.zeros((2, 2, 2))
    for x in (0, 1):
        for z in (0, 1):
            q = 0.3 + 0.4 * x - 0.2 * z
            p[x, z] = 0.25 * np.array([1 - q, q])
    return ProbTable(p, ["X", "Z", "Y"])


def max_table() -> ProbTable:
    """X, Z ~ Bern(0.5) independent; Y = max(X, Z) deterministically."""
    p = np.zeros((2, 2, 2))
    for x in (0, 1):
        for z in (0, 1):
            p[x, z, max(x, z)] = 0.25
    return ProbTable(p, ["X", "Z", "Y"])


def local_entropy_table() -> ProbTable:
    """X ~ Bern(0.8); Y ~ Bern(0.5 + 0.25 X)."""
    p = np.zeros((2, 2))
    for x, px in ((0, 0.2), (1, 0.8)):
        q = 0.5 + 0.25 * x
        p[x] = px * np.array([1 - q, q])
    return ProbTable(p, ["X", "Y"])


def add_independent_feature(t: ProbTable, p_new, position: int | None = None) -> ProbTable:
    """Insert a feature independent of everything else."""
    p_new = np.asarray(p_new, dtype=np.float64)
    position = t.d if position is None else position
    probs = np.expand_dims(t.probs, position) * p_new.reshape(
        [-1 if a == position else 1 for a in range(t.d + 2)])
    labels = list(t.labels)
    labels.insert(position, f"N{position + 1}")
    return ProbTable(probs, labels)


def add_duplicate_feature(t: ProbTable, source: int) -> ProbTable:
    """Append a feature that is an exact copy of ``source``."""
    k = t.dims[source]
    eye = np.eye(k)
    shape = [1] * (t.d + 2)
    shape[source] = k
    shape[t.d] = k
    probs = np.expand_dims(t.probs, t.d) * eye.reshape(shape)
    labels = list(t.labels[:-1]) + [f"{t.labels[source]}_copy", t.labels[-1]]
    return ProbTable(probs, labels)


def symmetrize(t: ProbTable, i: int, j: int) -> ProbTable:
    """Average the table with its copy in which features i and j are swapped."""
    return ProbTable(0.5 * (t.probs + np.swapaxes(t.probs, i, j)), t.labels)
