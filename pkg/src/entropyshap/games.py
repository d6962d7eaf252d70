"""Value functions for fitted models, and exact games for the engine.

A :class:`GameSpec` pairs a payoff (model output, or an entropy of it) with
a sampler.  ``v(S, x)`` is the average payoff over ``m`` sampler draws that
agree with ``x`` on ``S``.  For entropy payoffs this is the expected
pointwise entropy game; for the raw model output it is the usual
conditional-expectation game.

The Shapley engine consumes :class:`BoundGame` objects: one game at one
instance, memoized per coalition mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from . import coalitions as co
from .errors import ConfigError
from .models.ensemble import entropy_aleatoric, entropy_epistemic, entropy_total
from .models.gaussian import hstar_value
from .oracle import exact_value
from .rng import TAG_GAME, RngStream

GAME_IDS = ("v0", "Hstar_total", "Hstar_aleatoric", "Hstar_epistemic", "logvar")
ENTROPY_GAMES = ("Hstar_total", "Hstar_aleatoric", "Hstar_epistemic")


def normalize_game_id(name: str) -> str:
    """Accept CLI spellings such as ``hstar-total``."""
    key = name.strip().lower().replace("-", "_")
    for g in GAME_IDS:
        if g.lower() == key:
            return g
    raise ConfigError(f"unknown game {name!r}; choose from {', '.join(GAME_IDS)}")


def _is_classifier(model) -> bool:
    return not getattr(model, "is_regression", False) and hasattr(model, "predict_proba")


def _payoff(game_id: str, model, base):
    if game_id == "v0":
        if hasattr(model, "predict_mean"):
            return model.predict_mean
        if hasattr(model, "predict"):
            return model.predict
        return lambda X: model.predict_proba(X)[:, -1]
    if game_id == "logvar":
        if not hasattr(model, "predict_logvar"):
            raise ConfigError("the logvar game needs a heteroskedastic pair "
                              "(a model with predict_logvar)")
        return model.predict_logvar
    if game_id == "Hstar_total":
        if _is_classifier(model):
            return lambda X: entropy_total(model, X, base)
        if hasattr(model, "predict_entropy"):
            return lambda X: model.predict_entropy(X, base)
        raise ConfigError("Hstar_total needs a classifier or a model with a "
                          "predictive variance")
    if not _is_classifier(model) or not hasattr(model, "member_proba"):
        raise ConfigError(f"{game_id} needs an ensemble classifier")
    if game_id == "Hstar_aleatoric":
        return lambda X: entropy_aleatoric(model, X, base)
    return lambda X: entropy_epistemic(model, X, base)


@dataclass(frozen=True, eq=False)
class GameSpec:
    """A game on a fitted model.

    Parameters
    ----------
    game_id : str
        One of :data:`GAME_IDS`.
    model : object
        Classifier ensemble, regression forest, heteroskedastic pair or
        Gaussian-linear model.
    sampler : object
        Anything with ``draw(S, x, m, rng)``.
    m : int
        Sampler draws per coalition.
    base : float or None
        Log base for entropy payoffs; ``None`` means nats.
    """

    game_id: str
    model: Any
    sampler: Any
    m: int = 64
    base: float | None = None

    def __post_init__(self):
        gid = normalize_game_id(self.game_id)
        object.__setattr__(self, "game_id", gid)
        if int(self.m) < 1:
            raise ConfigError("m must be >= 1")
        d_model = getattr(self.model, "n_features", None)
        d_sampler = getattr(self.sampler, "d", None)
        if d_model is not None and d_sampler is not None and d_model != d_sampler:
            raise ConfigError(f"model has {d_model} features, sampler has {d_sampler}")
        object.__setattr__(self, "_fn", _payoff(gid, self.model, self.base))

    @property
    def d(self) -> int:
        return self.sampler.d

    def payoff(self, X) -> np.ndarray:
        return np.asarray(self._fn(np.atleast_2d(X)), dtype=np.float64)

    def describe(self) -> dict:
        return {"game": self.game_id, "m": int(self.m),
                "sampler": self.sampler.describe() if hasattr(self.sampler, "describe") else {},
                "units": "nats" if self.base is None else f"base{self.base:g}"}


def _draws(g: GameSpec, S: int, x, stream: RngStream):
    if S == co.full(g.d):
        return np.asarray(x, dtype=np.float64)[None, :]
    return g.sampler.draw(S, x, g.m, stream.child(TAG_GAME, S).generator())


def evaluate(g: GameSpec, S: int, x, stream: RngStream) -> float:
    """Monte-Carlo ``v(S, x)``; the full coalition is evaluated directly."""
    return float(g.payoff(_draws(g, S, x, stream)).mean())


def evaluate_batch(g: GameSpec, coalitions, x, stream: RngStream) -> np.ndarray:
    """Element-wise :func:`evaluate` with one model call for all draws."""
    coalitions = list(coalitions)
    if not coalitions:
        return np.zeros(0)
    blocks = [_draws(g, S, x, stream) for S in coalitions]
    sizes = [b.shape[0] for b in blocks]
    out = g.payoff(np.vstack(blocks))
    return np.add.reduceat(out, np.cumsum([0] + sizes[:-1])) / np.asarray(sizes)


class BoundGame:
    """``S -> v(S)`` at one instance, memoized on the mask.

    ``batch`` maps a list of masks to an array of payoffs.
    """

    def __init__(self, d: int, batch, label: str = ""):
        self.d = int(d)
        self._batch = batch
        self._memo: dict[int, float] = {}
        self.label = label

    def values(self, masks) -> np.ndarray:
        masks = [int(S) for S in masks]
        todo = list(dict.fromkeys(S for S in masks if S not in self._memo))
        if todo:
            for S, v in zip(todo, np.asarray(self._batch(todo), dtype=np.float64)):
                self._memo[S] = float(v)
        return np.array([self._memo[S] for S in masks])

    def __call__(self, S: int) -> float:
        return float(self.values([S])[0])

    @property
    def n_evaluations(self) -> int:
        return len(self._memo)


def bind(g: GameSpec, x, stream: RngStream) -> BoundGame:
    """Bind a sampled game to instance ``x``; coalition ``S`` uses ``stream/(GAME, S)``."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != g.d:
        raise ConfigError(f"x has {x.shape[0]} entries, game has {g.d} features")
    return BoundGame(g.d, lambda masks: evaluate_batch(g, masks, x, stream), g.game_id)


def function_game(fn, d: int, label: str = "function") -> BoundGame:
    """Wrap a plain ``mask -> float`` callable."""
    return BoundGame(d, lambda masks: [fn(S) for S in masks], label)


def analytic_game(model, x, base=None) -> BoundGame:
    """Closed-form expected-entropy game of a Gaussian-linear model."""
    x = np.asarray(x, dtype=np.float64)
    return function_game(lambda S: hstar_value(model, S, x, base), model.d, "Hstar_analytic")


def oracle_game(table, game: str, x, y_true=None, base=None) -> BoundGame:
    """Exact game on a discrete joint table."""
    x = tuple(int(v) for v in x)
    return function_game(lambda S: exact_value(table, game, S, x, y_true, base), table.d,
                         f"{game}_oracle")


def linear_combination(games, coefs) -> BoundGame:
    """``sum_k coefs[k] * games[k]`` as a single game."""
    games = list(games)
    d = games[0].d
    if any(gm.d != d for gm in games):
        raise ConfigError("games must share the feature dimension")
    coefs = [float(c) for c in coefs]

    def batch(masks):
        return sum(c * gm.values(masks) for c, gm in zip(coefs, games))

    return BoundGame(d, batch, "combination")
