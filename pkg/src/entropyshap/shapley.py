"""Exact and Monte-Carlo Shapley values, dataset attribution, axiom checks.

The Monte-Carlo estimator samples permutations.  A permutation contributes
one marginal contribution per feature, and these telescope to
``v([d]) - v(empty)``, so efficiency holds for every estimate without any
renormalization.  With pairing on, each permutation is followed by its
reverse (antithetic sampling), and the pair is the unit for the standard
error.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import coalitions as co
from .errors import CapacityError, ConfigError, DataError, EntropyShapError
from .games import BoundGame, GameSpec, bind, linear_combination, oracle_game
from .oracle import add_duplicate_feature, add_independent_feature, random_table
from .rng import TAG_PERMUTATION, RngStream, make_rng

MAX_EXACT_DIM = 12
SCHEMA_VERSION = 1


def _popcounts(n_masks: int) -> np.ndarray:
    masks = np.arange(n_masks)
    out = np.zeros(n_masks, dtype=np.int64)
    while masks.any():
        out += masks & 1
        masks = masks >> 1
    return out


def shapley_weights(d: int) -> np.ndarray:
    """Weight of one coalition of each size ``0..d-1``."""
    return np.array([co.shapley_weight(s, d) for s in range(d)])


def shapley_exact(game: BoundGame) -> np.ndarray:
    """Shapley values by enumerating all ``2^d`` coalitions."""
    d = game.d
    if d > MAX_EXACT_DIM:
        raise CapacityError(f"exact Shapley values support d <= {MAX_EXACT_DIM}, got d={d}; "
                            "use Monte-Carlo mode")
    n_masks = 1 << d
    v = game.values(range(n_masks))
    sizes = _popcounts(n_masks)
    w = np.append(shapley_weights(d), 0.0)
    masks = np.arange(n_masks)
    phi = np.zeros(d)
    for j in range(d):
        S = masks[(masks >> j) & 1 == 0]
        phi[j] = np.sum(w[sizes[S]] * (v[S | (1 << j)] - v[S]))
    return phi


@dataclass(frozen=True)
class CoalitionBudget:
    """Monte-Carlo budget in coalition evaluations.

    A permutation costs ``d - 1`` interior coalitions (the empty and full
    coalitions are shared by all permutations), so the number of sampled
    permutations is ``n_coalitions // (d - 1)``, rounded down to an even
    count when pairing is on.  At least two sampling units are always
    drawn so that a standard error exists.
    """

    n_coalitions: int = 256
    pairing: bool = True

    def __post_init__(self):
        if self.n_coalitions < 2:
            raise ConfigError("n_coalitions must be >= 2")
        if self.pairing and self.n_coalitions % 2:
            raise ConfigError("n_coalitions must be even when pairing is on")

    def n_permutations(self, d: int) -> int:
        n = self.n_coalitions // max(d - 1, 1)
        if self.pairing:
            return max(4, n - n % 2)
        return max(2, n)


def coalition_mass_covered(n_coalitions: int, d: int) -> float:
    """Share of the permutation-sampling mass held by the ``n`` likeliest coalitions.

    A uniformly random permutation prefix of size ``s`` (``0 < s < d``) has
    probability ``1 / ((d - 1) C(d, s))``, so the mass piles up at very small
    and very large coalitions.  This is a diagnostic only.
    """
    if d < 2:
        return 1.0
    left = int(n_coalitions)
    covered = 0.0
    # sizes ordered from the extremes inwards: fewest coalitions, most mass each
    for s in sorted(range(1, d), key=lambda s: math.comb(d, s)):
        count = math.comb(d, s)
        take = min(left, count)
        covered += take / ((d - 1) * count)
        left -= take
        if left <= 0:
            break
    return min(covered, 1.0)


def _permutations(d: int, budget: CoalitionBudget, stream: RngStream) -> list[np.ndarray]:
    n = budget.n_permutations(d)
    perms = []
    if budget.pairing:
        for k in range(n // 2):
            p = stream.child(TAG_PERMUTATION, k).generator().permutation(d)
            perms += [p, p[::-1]]
    else:
        for k in range(n):
            perms.append(stream.child(TAG_PERMUTATION, k).generator().permutation(d))
    return perms


def shapley_mc(game: BoundGame, budget: CoalitionBudget, stream: RngStream):
    """Permutation-sampling estimate.

    Returns
    -------
    values : ndarray of shape (d,)
    stderr : ndarray of shape (d,)
        Standard error across sampling units (antithetic pairs, or single
        permutations when pairing is off).
    """
    d = game.d
    perms = _permutations(d, budget, stream)
    chains = []
    for p in perms:
        m, chain = 0, [0]
        for j in p:
            m |= 1 << int(j)
            chain.append(m)
        chains.append(chain)
    flat = [S for chain in chains for S in chain]
    v = game.values(flat).reshape(len(perms), d + 1)
    steps = np.diff(v, axis=1)
    deltas = np.empty((len(perms), d))
    for r, p in enumerate(perms):
        deltas[r, p] = steps[r]
    units = deltas.reshape(-1, 2, d).mean(axis=1) if budget.pairing else deltas
    values = units.mean(axis=0)
    stderr = units.std(axis=0, ddof=1) / math.sqrt(units.shape[0])
    return values, stderr


@dataclass
class AttributionMatrix:
    """Per-row Shapley vectors plus the game's endpoints."""

    values: np.ndarray
    baseline: np.ndarray
    full_value: np.ndarray
    rows: np.ndarray
    feature_names: list[str]
    stderr: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def efficiency_gap(self) -> float:
        if self.n == 0:
            return 0.0
        return float(np.max(np.abs(self.baseline + self.values.sum(axis=1) - self.full_value)))

    def column(self, j) -> np.ndarray:
        if isinstance(j, str):
            j = self.feature_names.index(j)
        return self.values[:, j]

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "meta": self.meta,
            "feature_names": list(self.feature_names),
            "rows": self.rows.tolist(),
            "baseline": self.baseline.tolist(),
            "full_value": self.full_value.tolist(),
            "values": self.values.tolist(),
            "stderr": None if self.stderr is None else self.stderr.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> AttributionMatrix:
        obj = json.loads(text)
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise DataError("unsupported attribution schema version")
        d = len(obj["feature_names"])
        as2d = lambda a: np.asarray(a, dtype=np.float64).reshape(-1, d)  # noqa: E731
        return cls(as2d(obj["values"]), np.asarray(obj["baseline"], dtype=np.float64),
                   np.asarray(obj["full_value"], dtype=np.float64),
                   np.asarray(obj["rows"], dtype=np.int64), obj["feature_names"],
                   None if obj["stderr"] is None else as2d(obj["stderr"]), obj["meta"])

    def write_csv(self, path) -> None:
        """Wide CSV: one row per instance, one column per feature.

        A trailing ``config_hash`` column is added when ``meta`` carries one.
        """
        chash = self.meta.get("config_hash")
        tail = [] if chash is None else [chash]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["row", "baseline", "full_value"] + list(self.feature_names)
                       + (["config_hash"] if tail else []))
            for k in range(self.n):
                w.writerow([int(self.rows[k]), repr(float(self.baseline[k])),
                            repr(float(self.full_value[k]))]
                           + [repr(float(v)) for v in self.values[k]] + tail)


def _row_error(exc: Exception, row: int) -> Exception:
    msg = f"row {row}: {exc}"
    try:
        err = type(exc)(msg)
    except TypeError:
        err = EntropyShapError(msg)
    return err


def attribute_dataset(game, ds, rows=None, mode: str = "mc",
                      budget: CoalitionBudget | None = None, seed: int = 0,
                      n_jobs: int = 1) -> AttributionMatrix:
    """Shapley vectors for selected rows of a dataset.

    Parameters
    ----------
    game : GameSpec or callable
        A :class:`GameSpec`, or ``factory(x, stream) -> BoundGame``.
    ds : Dataset or ndarray
    rows : sequence of int, optional
        Row indices to explain (default: all).
    mode : {"mc", "exact"}
    budget : CoalitionBudget, optional
        Monte-Carlo budget (default 256 coalitions, paired).
    seed : int
        Root seed.  Row ``i`` owns stream ``(seed, i)``, so the output for
        a row does not depend on which other rows are requested or on
        ``n_jobs``.
    """
    if mode not in ("mc", "exact"):
        raise ConfigError(f"unknown mode {mode!r}; choose mc or exact")
    X = ds.as_nan() if hasattr(ds, "as_nan") else np.asarray(ds, dtype=np.float64)
    names = list(getattr(ds, "feature_names", [f"X{j + 1}" for j in range(X.shape[1])]))
    rows = np.arange(X.shape[0]) if rows is None else np.asarray(rows, dtype=np.int64)
    if rows.size and (rows.min() < 0 or rows.max() >= X.shape[0]):
        raise DataError("row index out of range")
    d = X.shape[1]
    if mode == "exact" and d > MAX_EXACT_DIM:
        raise CapacityError(f"exact Shapley values support d <= {MAX_EXACT_DIM}, got d={d}; "
                            "use Monte-Carlo mode")
    budget = budget or CoalitionBudget()
    factory = (lambda x, s: bind(game, x, s)) if isinstance(game, GameSpec) else game

    def one(i):
        stream = RngStream(int(seed), (int(i),))
        try:
            g = factory(X[i], stream)
            if mode == "exact":
                phi, se = shapley_exact(g), None
            else:
                phi, se = shapley_mc(g, budget, stream)
            return phi, se, g(0), g(co.full(d))
        except EntropyShapError as exc:
            raise _row_error(exc, int(i)) from exc

    if n_jobs > 1 and rows.size > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            out = list(pool.map(one, rows))
    else:
        out = [one(i) for i in rows]
    values = np.array([o[0] for o in out]).reshape(-1, d)
    stderr = None if mode == "exact" else np.array([o[1] for o in out]).reshape(-1, d)
    meta = {"mode": mode, "seed": int(seed), "d": d}
    if isinstance(game, GameSpec):
        meta.update(game.describe())
    if mode == "mc":
        meta.update({"n_coalitions": budget.n_coalitions, "pairing": budget.pairing,
                     "n_permutations": budget.n_permutations(d)})
    return AttributionMatrix(values, np.array([o[2] for o in out]),
                             np.array([o[3] for o in out]), rows, names, stderr, meta)


# -- axiom checks ---------------------------------------------------------------

AXIOM_TOL = 1e-10
_AXIOM_GAMES = ("KL", "CE", "IG", "H", "Hstar", "v0")


@dataclass
class AxiomReport:
    errors: dict
    trials: int
    tol: float = AXIOM_TOL

    @property
    def passed(self) -> dict:
        return {k: v <= self.tol for k, v in self.errors.items()}

    @property
    def ok(self) -> bool:
        return all(self.passed.values())


def _random_point(t, rng):
    return tuple(int(rng.integers(0, k)) for k in t.dims[:-1])


def axiom_suite(trials: int = 50, seed: int = 0, max_d: int = 4) -> AxiomReport:
    """Check efficiency, symmetry, sensitivity and linearity on exact games.

    Each trial draws a random positive table with 2 to ``max_d`` features
    and a random point, then picks one of the discrete games.  Symmetry is
    checked on a copy of the table with a duplicated feature, sensitivity on
    a copy with an added independent feature.
    """
    if not 2 <= max_d <= 7:
        raise ConfigError("max_d must lie in [2, 7] (the augmented tables add one feature)")
    err = {"efficiency": 0.0, "symmetry": 0.0, "sensitivity": 0.0, "linearity": 0.0}
    for trial in range(trials):
        rng = make_rng(seed, trial)
        d = int(rng.integers(2, max_d + 1))
        t = random_table(d, rng, n_classes=int(rng.integers(2, 4)))
        x = _random_point(t, rng)
        gid = _AXIOM_GAMES[trial % len(_AXIOM_GAMES)]

        g = oracle_game(t, gid, x)
        phi = shapley_exact(g)
        err["efficiency"] = max(err["efficiency"],
                                abs(phi.sum() - (g(co.full(d)) - g(0))))

        src = int(rng.integers(0, d))
        td = add_duplicate_feature(t, src)
        phi_d = shapley_exact(oracle_game(td, gid, x + (x[src],)))
        err["symmetry"] = max(err["symmetry"], abs(phi_d[src] - phi_d[d]))

        ti = add_independent_feature(t, rng.dirichlet(np.ones(2)))
        phi_i = shapley_exact(oracle_game(ti, gid, x + (int(rng.integers(0, 2)),)))
        err["sensitivity"] = max(err["sensitivity"], abs(phi_i[d]))

        other = _AXIOM_GAMES[(trial + 2) % len(_AXIOM_GAMES)]
        a, b = rng.normal(size=2)
        g2 = oracle_game(t, other, x)
        phi_ab = shapley_exact(linear_combination([oracle_game(t, gid, x), g2], [a, b]))
        err["linearity"] = max(err["linearity"],
                               float(np.max(np.abs(phi_ab - (a * phi + b * shapley_exact(g2))))))
    return AxiomReport({k: float(v) for k, v in err.items()}, trials)
