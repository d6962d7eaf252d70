"""Exact verification suite for the information-theoretic games.

Each check compares the game engine against a quantity computed along an
independent route (direct conditioning plus :mod:`entropyshap.info`
primitives), on seeded random tables and on the hand-built examples.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import coalitions as co
from .games import function_game
from .info import conditional_entropy, entropy, kl_divergence
from .models.gaussian import GaussianLinearModel, hstar_value, oracle_shapley_hstar
from .oracle import (INFO_GAMES, ci_table, condition, conspiratorial_table, exact_value,
                     local_entropy_table, max_table, random_table, test_thm1a, verify_prop5)
from .rng import make_rng
from .shapley import axiom_suite, shapley_exact

TOL = 1e-10
MUTATIONS = ("flip-ig",)
H_Y_LOCAL_EXAMPLE = 0.8812908992306927
H_YX_LOCAL_EXAMPLE = 0.8490224995673064
AXIOMS = ("efficiency", "symmetry", "sensitivity", "linearity")
CHECK_NAMES = (
    "kl-ce-equal-payoffs", "kl-efficiency", "ig-local-mutual-information", "ig-efficiency",
    "entropy-gap-expected-kl", "hstar-efficiency", "label-averaged-log-loss",
    "ci-iff-zero-payoffs", "csi-zero-payoffs", "conspiratorial-cancellation",
    "local-entropy-ordering", "gaussian-closed-form",
) + tuple(f"axiom-{a}" for a in AXIOMS)


@dataclass
class CheckResult:
    name: str
    passed: bool
    error: float
    tol: float
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<34} err={self.error:.3e} tol={self.tol:.0e}  {self.detail}"


class _Engine:
    """Game values, optionally with a deliberately broken game for self-tests."""

    def __init__(self, mutation=None):
        if mutation not in (None, *MUTATIONS):
            raise ValueError(f"unknown mutation {mutation!r}")
        self.mutation = mutation

    def value(self, t, game, S, x):
        v = exact_value(t, game, S, x)
        return -v if self.mutation == "flip-ig" and game == "IG" else v

    def delta(self, t, game, S, j, x):
        return self.value(t, game, S | 1 << j, x) - self.value(t, game, S, x)

    def shapley(self, t, game, x):
        return shapley_exact(function_game(lambda S: self.value(t, game, S, x), t.d))


def _tables(n, seed, max_d=4):
    out = []
    for k in range(n):
        rng = make_rng(seed, k)
        d = int(rng.integers(2, max_d + 1))
        out.append(random_table(d, rng, n_classes=int(rng.integers(2, 4))))
    return out


def _cond(t, S, x):
    return condition(t, {j: x[j] for j in co.members(S, t.d)})


def _sweep(t):
    """All ``(S, j, x)`` with ``j`` not in ``S``."""
    for x in t.feature_points():
        for j in range(t.d):
            for S in co.all_masks(t.d):
                if not S >> j & 1:
                    yield S, j, x


def _check(name, fn, tol=TOL):
    t0 = time.perf_counter()
    err, detail = fn()
    return CheckResult(name, bool(err <= tol), float(err), tol, time.perf_counter() - t0, detail)


def run_checks(seed: int = 0, n_tables: int = 100, mutation: str | None = None,
               axiom_trials: int = 50, names=None) -> list[CheckResult]:
    """Run the suite, or only the checks listed in ``names``."""
    if names is not None:
        unknown = set(names) - set(CHECK_NAMES)
        if unknown:
            raise ValueError(f"unknown checks {sorted(unknown)}")
    wanted = lambda name: names is None or name in names  # noqa: E731
    eng = _Engine(mutation)
    tables = _tables(n_tables, seed)
    results = []

    def kl_ce():
        return max(abs(eng.delta(t, "KL", S, j, x) - eng.delta(t, "CE", S, j, x))
                   for t in tables for S, j, x in _sweep(t)), "delta KL = delta CE"

    def kl_sum():
        err = 0.0
        for t in tables:
            for x in t.feature_points():
                target = kl_divergence(_cond(t, co.full(t.d), x), _cond(t, 0, x))
                err = max(err, abs(eng.shapley(t, "KL", x).sum() - target),
                          abs(eng.shapley(t, "CE", x).sum() - target))
        return err, "sum phi = KL(p(Y|x) || p(Y))"

    def ig_local():
        err = 0.0
        for t in tables:
            for S, j, x in _sweep(t):
                local_mi = entropy(_cond(t, S, x)) - entropy(_cond(t, S | 1 << j, x))
                err = max(err, abs(eng.delta(t, "IG", S, j, x) - local_mi))
        return err, "delta IG = local conditional MI"

    def ig_sum():
        err = 0.0
        for t in tables:
            for x in t.feature_points():
                info_gain = entropy(_cond(t, 0, x)) - entropy(_cond(t, co.full(t.d), x))
                err = max(err, abs(eng.shapley(t, "IG", x).sum() - info_gain))
        return err, "sum phi = H(Y) - H(Y|x)"

    def gap():
        err = 0.0
        for t in tables:
            for x in t.feature_points():
                for S in range(co.full(t.d)):
                    lhs, rhs = verify_prop5(t, S, x)
                    err = max(err, abs(lhs - rhs), max(0.0, -rhs))
        return err, "v_H - v_H* = expected KL >= 0"

    def hstar_sum():
        err = 0.0
        for t in tables:
            joint = t.probs.reshape(-1, t.n_classes)
            h_global = conditional_entropy(joint.T)  # Y on rows
            for x in t.feature_points():
                target = entropy(_cond(t, co.full(t.d), x)) - h_global
                err = max(err, abs(eng.shapley(t, "Hstar", x).sum() - target))
        return err, "sum phi = H(Y|x) - H(Y|X)"

    def lossshap_averages():
        err = 0.0
        for t in tables[:20]:
            for x in t.feature_points():
                p_full = _cond(t, co.full(t.d), x)
                for S in co.all_masks(t.d):
                    p_s = _cond(t, S, x)
                    vl = np.array([exact_value(t, "L", S, x, y_true=c)
                                   for c in range(t.n_classes)])
                    err = max(err, abs(eng.value(t, "CE", S, x) + p_full @ vl),
                              abs(eng.value(t, "IG", S, x) + p_s @ vl),
                              abs(eng.value(t, "IG", S, x) + eng.value(t, "H", S, x)))
        return err, "v_CE, v_IG as label-averaged log loss; v_IG = -v_H"

    def ci_zero():
        bad = 0
        for k in range(20):
            rng = make_rng(seed, 1000 + k)
            d = int(rng.integers(2, 5))
            j = int(rng.integers(0, d))
            S = co.from_members(k2 for k2 in range(d) if k2 != j and rng.random() < 0.5)
            if not test_thm1a(ci_table(d, j, S, rng), j, S):
                bad += 1
            if test_thm1a(random_table(d, rng), j, S):
                bad += 1
        return float(bad), "zero payoffs everywhere iff CI (20 CI + 20 dependent tables)"

    def csi_zero():
        t = max_table()
        err = max(abs(eng.delta(t, g, 0b10, 0, (x, 1))) for g in INFO_GAMES for x in (0, 1))
        sup = min(max(abs(eng.delta(t, g, 0b10, 0, (x, z))) for x in (0, 1) for z in (0, 1))
                  for g in INFO_GAMES)
        return (err if sup > TOL else 1.0), f"max(X, Z) at Z=1 gives zero; sup over x = {sup:.3f}"

    def conspiracy():
        t = conspiratorial_table()
        delta = eng.delta(t, "KL", 0, 0, (1, 1))
        dependent = not test_thm1a(t, 0, 0)
        p = condition(t, {0: 1})
        err = max(abs(delta), abs(p[1] - 0.6))
        return (err if dependent else 1.0), f"delta_KL(empty, X, (1,1)) = {delta:.1e}, Y dep. X"

    def local_entropy():
        t = local_entropy_table()
        b = 2.0
        h_y = entropy(condition(t, {}), b)
        h_y0 = entropy(condition(t, {0: 0}), b)
        h_yx = conditional_entropy(t.probs.T, b)
        # bits: H(0.7) and 0.2 * 1 + 0.8 * H(0.75), evaluated by hand
        err = max(abs(h_y0 - 1.0), abs(h_y - H_Y_LOCAL_EXAMPLE), abs(h_yx - H_YX_LOCAL_EXAMPLE))
        ordered = h_y0 > h_y > h_yx
        return (err if ordered else 1.0), f"H(Y|X=0)={h_y0:.4f} > H(Y)={h_y:.4f} > H(Y|X)={h_yx:.4f}"

    def gaussian():
        err = 0.0
        for k, rho in enumerate((0.0, 0.5, 0.9)):
            rng = make_rng(seed, 2000 + k)
            m = GaussianLinearModel(rng.choice([-1.0, 1.0], 4), rng.choice([-1.0, 1.0], 4), rho)
            for x in rng.standard_normal((20, 4)):
                phi = shapley_exact(function_game(lambda S: hstar_value(m, S, x), 4))
                err = max(err, float(np.max(np.abs(phi - oracle_shapley_hstar(m, x)))))
                if rho == 0.0:
                    err = max(err, float(np.max(np.abs(phi - 0.5 * m.gamma * x))))
        return err, "engine vs closed form, rho in {0, 0.5, 0.9}"

    for name, fn, tol in (
        ("kl-ce-equal-payoffs", kl_ce, TOL),
        ("kl-efficiency", kl_sum, TOL),
        ("ig-local-mutual-information", ig_local, TOL),
        ("ig-efficiency", ig_sum, TOL),
        ("entropy-gap-expected-kl", gap, 1e-12),
        ("hstar-efficiency", hstar_sum, TOL),
        ("label-averaged-log-loss", lossshap_averages, 1e-12),
        ("ci-iff-zero-payoffs", ci_zero, 0.0),
        ("csi-zero-payoffs", csi_zero, TOL),
        ("conspiratorial-cancellation", conspiracy, 1e-12),
        ("local-entropy-ordering", local_entropy, 1e-12),
        ("gaussian-closed-form", gaussian, TOL),
    ):
        if wanted(name):
            results.append(_check(name, fn, tol))

    if not any(wanted(f"axiom-{a}") for a in AXIOMS):
        return results
    t0 = time.perf_counter()
    report = axiom_suite(axiom_trials, seed)
    secs = time.perf_counter() - t0
    for axiom, err in report.errors.items():
        if wanted(f"axiom-{axiom}"):
            results.append(CheckResult(f"axiom-{axiom}", err <= report.tol, err, report.tol,
                                       secs, f"{axiom_trials} random exact games"))
    return results
