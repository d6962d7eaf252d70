import json

import numpy as np
import pytest

from entropyshap import coalitions as co
from entropyshap.data import from_arrays
from entropyshap.errors import CapacityError, ConfigError, DataError
from entropyshap.games import (GameSpec, analytic_game, bind, function_game, linear_combination,
                               oracle_game)
from entropyshap.imputation import MarginalSampler
from entropyshap.models.forest import ForestParams, fit_forest
from entropyshap.models.gaussian import GaussianLinearModel, oracle_shapley_hstar
from entropyshap.oracle import random_table
from entropyshap.rng import RngStream, make_rng
from entropyshap.shapley import (AttributionMatrix, CoalitionBudget, attribute_dataset,
                                 axiom_suite, coalition_mass_covered, shapley_exact, shapley_mc,
                                 shapley_weights)


def _gauss_model(rho=0.5, seed=0):
    rng = np.random.default_rng(seed)
    return GaussianLinearModel(rng.choice([-1.0, 1.0], 4), rng.choice([-1.0, 1.0], 4), rho)


class TestExact:
    def test_weights(self):
        np.testing.assert_allclose(shapley_weights(3), [1 / 3, 1 / 6, 1 / 3], atol=1e-15)

    def test_additive_game(self):
        c = np.array([0.5, -2.0, 3.0, 0.25])
        g = function_game(lambda S: float(c[co.as_bool(S, 4)].sum()), 4)
        np.testing.assert_allclose(shapley_exact(g), c, atol=1e-15)

    def test_analytic_gaussian_matches_oracle(self):
        m = _gauss_model()
        x = np.array([0.3, -1.2, 0.8, 2.0])
        np.testing.assert_allclose(shapley_exact(analytic_game(m, x)),
                                   oracle_shapley_hstar(m, x), atol=1e-10)

    def test_capacity(self):
        with pytest.raises(CapacityError, match="Monte-Carlo"):
            shapley_exact(function_game(lambda S: 0.0, 13))


class TestMonteCarlo:
    def test_budget_validation(self):
        with pytest.raises(ConfigError):
            CoalitionBudget(1)
        with pytest.raises(ConfigError):
            CoalitionBudget(7, pairing=True)
        assert CoalitionBudget(7, pairing=False).n_permutations(4) == 2

    def test_budget_to_permutations(self):
        assert CoalitionBudget(512).n_permutations(10) == 56
        assert CoalitionBudget(8).n_permutations(10) == 4

    def test_constant_game(self):
        phi, se = shapley_mc(function_game(lambda S: 3.0, 5), CoalitionBudget(64), RngStream(0))
        np.testing.assert_array_equal(phi, 0.0)
        np.testing.assert_array_equal(se, 0.0)

    def test_efficiency_by_telescoping(self):
        t = random_table(5, make_rng(2))
        g = oracle_game(t, "Hstar", (0, 1, 1, 0, 1))
        phi, _ = shapley_mc(g, CoalitionBudget(16), RngStream(1))
        assert phi.sum() == pytest.approx(g(co.full(5)) - g(0), abs=1e-12)

    def test_large_budget_matches_exact(self):
        m = _gauss_model()
        x = np.array([1.0, -0.5, 0.2, 0.7])
        phi, se = shapley_mc(analytic_game(m, x), CoalitionBudget(3000), RngStream(0))
        assert np.max(np.abs(phi - oracle_shapley_hstar(m, x))) < max(4 * se.max(), 1e-12)

    def test_pairing_does_not_increase_variance(self):
        m = _gauss_model(0.7)
        x = np.array([1.0, -0.5, 0.2, 0.7])
        truth = oracle_shapley_hstar(m, x)
        err = {}
        for pairing in (True, False):
            sq = [np.sum((shapley_mc(analytic_game(m, x), CoalitionBudget(12, pairing),
                                     RngStream(r))[0] - truth) ** 2) for r in range(100)]
            err[pairing] = np.mean(sq)
        assert err[True] <= err[False]

    def test_error_shrinks_as_budget_doubles(self):
        m = _gauss_model(0.5, 3)
        xs = np.random.default_rng(4).standard_normal((10, 4))
        maes = []
        for b in (8, 16, 32, 64, 128, 256, 512, 1024):
            e = [np.mean(np.abs(shapley_mc(analytic_game(m, x), CoalitionBudget(b),
                                           RngStream(r))[0] - oracle_shapley_hstar(m, x)))
                 for r in range(20) for x in xs]
            maes.append(np.mean(e))
        assert maes[-1] < maes[0] / 4
        # monotone within noise: each step may rise by at most 15 %
        assert all(b <= 1.15 * a for a, b in zip(maes, maes[1:]))

    def test_mass_diagnostic(self):
        assert coalition_mass_covered(10**9, 6) == pytest.approx(1.0)
        # two of the six singletons, each holding 1 / (5 * 6) of the mass
        assert coalition_mass_covered(2, 6) == pytest.approx(2 / 30, rel=1e-12)
        assert 0.4 < coalition_mass_covered(int(0.001 * 2**40), 40) < 0.6


@pytest.fixture(scope="module")
def setup():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((120, 3))
    y = (X[:, 0] > 0).astype(float)
    model = fit_forest(X, y, "classification", ForestParams(n_trees=8), seed=0)
    ds = from_arrays(X, y, ["a", "b", "c"])
    return ds, GameSpec("Hstar_total", model, MarginalSampler(X), m=16)


class TestAttributeDataset:

    def test_single_row_matches_engine(self, setup):
        ds, g = setup
        am = attribute_dataset(g, ds, rows=[5], seed=3)
        phi, _ = shapley_mc(bind(g, ds.values[5], RngStream(3, (5,))), CoalitionBudget(),
                            RngStream(3, (5,)))
        np.testing.assert_array_equal(am.values[0], phi)

    def test_row_independence(self, setup):
        ds, g = setup
        a = attribute_dataset(g, ds, rows=[1, 2, 3], seed=0, budget=CoalitionBudget(8))
        b = attribute_dataset(g, ds, rows=[3, 1, 2], seed=0, budget=CoalitionBudget(8))
        np.testing.assert_array_equal(a.values[[2, 0, 1]], b.values)

    def test_threads(self, setup):
        ds, g = setup
        a = attribute_dataset(g, ds, rows=range(10), budget=CoalitionBudget(8), n_jobs=1)
        b = attribute_dataset(g, ds, rows=range(10), budget=CoalitionBudget(8), n_jobs=4)
        np.testing.assert_array_equal(a.values, b.values)

    def test_exact_efficiency(self, setup):
        ds, g = setup
        am = attribute_dataset(g, ds, rows=range(5), mode="exact")
        assert am.efficiency_gap() < 1e-10
        assert am.stderr is None

    def test_mc_efficiency(self, setup):
        ds, g = setup
        assert attribute_dataset(g, ds, rows=range(5)).efficiency_gap() < 1e-12

    def test_row_out_of_range(self, setup):
        ds, g = setup
        with pytest.raises(DataError):
            attribute_dataset(g, ds, rows=[500])

    def test_row_index_in_errors(self):
        def factory(x, stream):
            if x[0] > 1.5:
                raise DataError("bad")
            return function_game(lambda S: 0.0, 1)
        with pytest.raises(DataError, match="row 2"):
            attribute_dataset(factory, np.array([[0.0], [1.0], [2.0]]))

    def test_exact_refuses_wide_data(self):
        with pytest.raises(CapacityError):
            attribute_dataset(lambda x, s: None, np.zeros((1, 13)), mode="exact")

    def test_serialization(self, setup, tmp_path):
        ds, g = setup
        am = attribute_dataset(g, ds, rows=range(3), budget=CoalitionBudget(8))
        am.meta["config_hash"] = "abc"
        back = AttributionMatrix.from_json(am.to_json())
        np.testing.assert_array_equal(back.values, am.values)
        np.testing.assert_array_equal(back.stderr, am.stderr)
        am.write_csv(tmp_path / "a.csv")
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines[0] == "row,baseline,full_value,a,b,c,config_hash"
        assert len(lines) == 4 and lines[1].endswith(",abc")
        assert json.loads(am.to_json())["meta"]["sampler"]["type"] == "marginal"

    def test_friedman_scale_run(self):
        from entropyshap.experiments.friedman import FriedmanConfig, gen_friedman
        train, test = gen_friedman(FriedmanConfig(n_train=500, n_test=1000))
        model = fit_forest(train.values, train.target, "regression", ForestParams(n_trees=10))
        g = GameSpec("v0", model, MarginalSampler(train.values), m=4)
        am = attribute_dataset(g, test, mode="mc", budget=CoalitionBudget(512), n_jobs=4)
        assert am.values.shape == (1000, 10)
        assert am.efficiency_gap() < 1e-10

    def test_unread_feature_gets_zero(self):
        # exact expectation: the sampled game only matches this on average,
        # because every coalition draws from its own stream
        m = GaussianLinearModel(np.array([1.0, 0.0, 1.0]), np.array([1.0, 0.0, -1.0]), 0.0)
        am = attribute_dataset(lambda x, s: analytic_game(m, x),
                               np.random.default_rng(0).standard_normal((4, 3)), mode="exact")
        np.testing.assert_array_equal(am.values[:, 1], 0.0)


class TestAxioms:
    def test_suite(self):
        rep = axiom_suite(30, seed=1)
        assert rep.ok, rep.errors

    def test_linear_combination_of_kl_and_ig(self):
        t = random_table(3, make_rng(8))
        x = (1, 0, 1)
        kl, ig = oracle_game(t, "KL", x), oracle_game(t, "IG", x)
        phi = shapley_exact(linear_combination([kl, ig], [2.0, -1.0]))
        np.testing.assert_allclose(phi, 2 * shapley_exact(kl) - shapley_exact(ig), atol=1e-10)

    def test_bounds(self):
        with pytest.raises(ConfigError):
            axiom_suite(1, max_d=8)
