import json

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from entropyshap.errors import ConfigError, MetricError
from entropyshap.experiments.coverage import CoverageConfig, run_coverage
from entropyshap.experiments.friedman import (FriedmanConfig, MissingnessConfig, SelectionConfig,
                                              _friedman, gen_friedman, run_friedman_missingness,
                                              run_friedman_selection)
from entropyshap.experiments.gauss import (ConvergenceConfig, GaussSimConfig, gen_gauss,
                                           run_gauss_convergence, true_gaussian_sampler)
from entropyshap.experiments.metrics import below_by_one_se, mean_and_se, roc_auc
from entropyshap.experiments.result import ExperimentResult, config_hash
from entropyshap.experiments.shift import ShiftConfig, make_blobs, run_shift
from entropyshap.games import GameSpec, bind
from entropyshap.models.gaussian import oracle_shapley_hstar
from entropyshap.rng import TAG_DATA, RngStream, make_rng
from entropyshap.shapley import shapley_exact


def _friedman_latent(cfg):
    """Replay the generator's draws to recover the rescaled outcome."""
    rng = make_rng(cfg.seed, TAG_DATA)
    n = cfg.n_train + cfg.n_test
    X = rng.uniform(size=(n, 10))
    y = _friedman(X) + rng.standard_normal(n)
    lo, hi = y[:cfg.n_train].min(), y[:cfg.n_train].max()
    return X, np.clip((y - lo) / (hi - lo), 0, 1)


class TestRocAuc:
    def test_separated(self):
        assert roc_auc([0.9, 0.8, 0.3, 0.2], [1, 1, 0, 0])[1] == 1.0

    def test_ties(self):
        assert roc_auc(np.ones(6), [1, 0, 1, 0, 1, 0])[1] == 0.5

    def test_single_class(self):
        with pytest.raises(MetricError):
            roc_auc([0.1, 0.2], [1, 1])

    def test_matches_sklearn(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            y = rng.integers(0, 2, 40)
            y[:2] = [0, 1]
            s = np.round(rng.standard_normal(40), 1)  # rounding forces ties
            assert roc_auc(s, y)[1] == pytest.approx(roc_auc_score(y, s), abs=1e-12)

    def test_curve_endpoints(self):
        curve, _ = roc_auc([0.3, 0.1, 0.7, 0.2], [1, 0, 1, 0])
        np.testing.assert_array_equal(curve[0], [0, 0])
        np.testing.assert_array_equal(curve[-1], [1, 1])


class TestMetrics:
    def test_mean_and_se(self):
        m, se = mean_and_se([1.0, 2.0, 3.0])
        assert m == 2.0 and se == pytest.approx(1 / np.sqrt(3))

    def test_one_se_rule(self):
        assert below_by_one_se(1.0, 0.1, 1.5, 0.1)
        assert not below_by_one_se(1.0, 0.3, 1.2, 0.3)


class TestGaussData:
    def test_independent_columns(self):
        ds, _ = gen_gauss(GaussSimConfig(d=4, rho=0.0, n=4000, seed=1))
        c = np.corrcoef(ds.values, rowvar=False)
        assert np.max(np.abs(c[np.triu_indices(4, 1)])) < 3 / np.sqrt(4000)

    def test_rademacher_coefficients(self):
        _, m = gen_gauss(GaussSimConfig(d=8, seed=2))
        assert set(m.gamma) <= {-1.0, 1.0} and set(m.beta) <= {-1.0, 1.0}

    def test_unit_variance_at_origin(self):
        _, m = gen_gauss(GaussSimConfig(seed=3))
        assert np.exp(m.logvar(np.zeros(4)))[0] == 1.0

    def test_toeplitz_correlation(self):
        ds, _ = gen_gauss(GaussSimConfig(d=3, rho=0.8, n=20_000, seed=4))
        c = np.corrcoef(ds.values, rowvar=False)
        assert c[0, 1] == pytest.approx(0.8, abs=0.02)
        assert c[0, 2] == pytest.approx(0.64, abs=0.02)

    def test_exact_sampler_converges_with_m(self):
        _, m = gen_gauss(GaussSimConfig(d=4, rho=0.5, seed=5))
        xs = np.random.default_rng(6).standard_normal((5, 4))
        mae = {}
        for draws in (16, 4096):
            g = GameSpec("Hstar_total", m, true_gaussian_sampler(m), m=draws)
            mae[draws] = np.mean([np.abs(shapley_exact(bind(g, x, RngStream(0, (i,))))
                                         - oracle_shapley_hstar(m, x))
                                  for i, x in enumerate(xs)])
        assert mae[4096] < mae[16] / 8  # about sqrt(256) = 16 in expectation
        assert mae[4096] < 0.02

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            ConvergenceConfig(d=13)
        with pytest.raises(ConfigError):
            ConvergenceConfig(samplers=("copula",))

    def test_convergence_structure(self):
        cfg = ConvergenceConfig(n_grid=(100, 200), rho_grid=(0.5,), replicates=2, n_test=3,
                                m=8, n_trees=5, min_leaf=5)
        res = run_gauss_convergence(cfg)
        assert set(res.metrics["mae"]) == {f"rho=0.5|n={n}|{s}" for n in (100, 200)
                                           for s in ("marginal", "gaussian", "knn")}
        assert "rho=0.5|knn|mae_n200<mae_n100" in res.metrics["checks"]
        assert len(res.records) == 2 * 2 * 3

    def test_convergence_threads(self):
        cfg = ConvergenceConfig(n_grid=(100,), rho_grid=(0.9,), replicates=3, n_test=2, m=4,
                                n_trees=3, samplers=("gaussian",))
        a, b = run_gauss_convergence(cfg, 1), run_gauss_convergence(cfg, 3)
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())


class TestFriedmanData:
    def test_rescaled_outcome_in_unit_interval(self):
        _, yt = _friedman_latent(FriedmanConfig(seed=3))
        assert yt.min() >= 0 and yt.max() <= 1
        yt_train = yt[:2000]
        assert yt_train.min() == 0.0 and yt_train.max() == 1.0

    def test_generator_replay(self):
        cfg = FriedmanConfig(n_train=300, n_test=200, seed=4)
        train, test = gen_friedman(cfg)
        X, _ = _friedman_latent(cfg)
        np.testing.assert_array_equal(train.values, X[:300])
        np.testing.assert_array_equal(test.values, X[300:])

    def test_mean_structure(self):
        train, _ = gen_friedman(FriedmanConfig(n_train=5000, n_test=1, seed=5))
        c = [abs(np.corrcoef(train.values[:, j], train.target)[0, 1]) for j in (0, 8)]
        assert c[1] > c[0]

    def test_variance_structure(self):
        cfg = FriedmanConfig(n_train=10_000, n_test=1, seed=6)
        train, _ = gen_friedman(cfg)
        X, yt = _friedman_latent(cfg)
        eps = train.target - _friedman(train.values[:, 5:])
        zero = yt[:10_000] == 0
        assert np.all(np.abs(eps[zero]) < 1e-12)
        A = np.c_[np.ones(10_000), train.values]
        coef = np.linalg.lstsq(A, np.abs(eps), rcond=None)[0][1:]
        assert np.abs(coef[:5]).sum() > np.abs(coef[5:]).sum()
        assert np.abs(coef[:5]).max() > 3 * np.abs(coef[5:]).max()

    def test_missingness_only_touches_training_features(self):
        train, test = gen_friedman(FriedmanConfig(n_train=1000, n_test=100, seed=7,
                                                  missing_fraction=0.3))
        assert 0.25 < train.missing.mean() < 0.35
        assert not test.missing.any()
        assert not np.isnan(train.target).any()

    def test_config(self):
        with pytest.raises(ConfigError):
            FriedmanConfig(missing_fraction=1.5)
        with pytest.raises(ConfigError):
            FriedmanConfig(n_train=0)


class TestHarnesses:
    def test_selection_smoke(self):
        cfg = SelectionConfig(n_train=200, n_test=60, replicates=2, n_trees=5, budget=18, m=4)
        res = run_friedman_selection(cfg)
        assert set(res.metrics) >= {"mean", "variance", "alpha", "n_cal"}
        assert res.metrics["n_cal"] == 100
        assert len(res.metrics["mean"]["bands"]) == 10
        assert res.metrics["variance"]["max_efficiency_gap"] < 1e-10
        assert len(res.records) == 2 * 2 * 10

    def test_missingness_smoke(self):
        cfg = MissingnessConfig(fractions=(0.0, 0.5), n_train=200, n_test=50, n_explain=20,
                                replicates=2, n_trees=5, budget=18, m=4)
        res = run_friedman_missingness(cfg)
        assert set(res.metrics["auc"]) == {"0.0", "0.5"}
        assert len(res.metrics["auc"]["0.5"]["aucs"]) == 2
        assert "roc_curves" in res.to_dict()

    def test_shift_without_noise_is_zero(self):
        res = run_shift(ShiftConfig(noise_scale=0.0, n_explain=20, n_trees=5, m=8))
        assert res.metrics["max_shift"] == 0.0
        dist = res.to_dict()["distributions"][0]
        assert dist["original"] == dist["perturbed"]

    def test_shift_reports_rank(self):
        res = run_shift(ShiftConfig(noise_scale=1.0, n_explain=20, n_trees=5, m=8,
                                    perturb_feature=2))
        assert res.metrics["ranks"][0] >= 1
        assert [r["perturbed"] for r in res.records].count(True) == 1

    def test_shift_validation(self, tmp_path):
        with pytest.raises(ConfigError):
            ShiftConfig(noise_scale=-1.0)
        p = tmp_path / "three.csv"
        p.write_text("a,y\n" + "\n".join(f"{i},{i % 3}" for i in range(30)) + "\n")
        with pytest.raises(ConfigError, match="binary"):
            run_shift(ShiftConfig(dataset=str(p)))

    def test_blobs(self):
        ds = make_blobs(n=2000, seed=1)
        assert ds.d == 5 and set(np.unique(ds.target)) == {0.0, 1.0}
        gap = ds.values[ds.target == 1].mean(axis=0) - ds.values[ds.target == 0].mean(axis=0)
        np.testing.assert_allclose(gap, 2 / np.sqrt(5), atol=0.15)


class TestResults:
    def test_coverage_is_reproducible(self):
        cfg = CoverageConfig(n_cal=100, n_test=100, replicates=5)
        assert run_coverage(cfg).to_dict() == run_coverage(cfg).to_dict()

    def test_expected_coverage(self):
        res = run_coverage(CoverageConfig(n_cal=1000, n_test=1000, replicates=5))
        assert res.metrics["expected"] == pytest.approx((951 - 51) / 1001)

    def test_files(self, tmp_path):
        res = ExperimentResult("demo", {"a": 1}, {"m": 0.5}, [{"x": 0.1, "y": 2}])
        paths = res.write(tmp_path)
        assert [p.rsplit("/", 1)[1] for p in paths] == [f"demo_{res.hash}.json",
                                                        f"demo_{res.hash}.csv"]
        doc = json.loads(open(paths[0]).read())
        assert doc["config_hash"] == res.hash == config_hash({"experiment": "demo", "a": 1})
        assert open(paths[1]).read().splitlines() == ["x,y", "0.1,2"]
