import math

import numpy as np
import pytest

from entropyshap import coalitions as co
from entropyshap.errors import CapacityError, ConditioningError, ConfigError
from entropyshap.info import entropy, kl_divergence, mutual_information
from entropyshap.oracle import (INFO_GAMES, ProbTable, ci_table, condition, conspiratorial_table,
                                exact_delta, exact_shapley, exact_value, max_table, random_table,
                                sup_abs_delta, test_thm1a, verify_prop5)
from entropyshap.rng import make_rng


@pytest.fixture(scope="module")
def tables():
    return [random_table(int(make_rng(11, k).integers(2, 5)), make_rng(11, k),
                         n_classes=int(make_rng(12, k).integers(2, 4))) for k in range(100)]


def _sweep(t):
    for x in t.feature_points():
        for j in range(t.d):
            for S in co.all_masks(t.d):
                if not S >> j & 1:
                    yield S, j, x


class TestProbTable:
    def test_rejects_bad_tables(self):
        with pytest.raises(ConfigError):
            ProbTable([[0.5, 0.6], [0.0, 0.0]])
        with pytest.raises(ConfigError):
            ProbTable([[1.2, -0.2], [0.0, 0.0]])
        with pytest.raises(ConfigError):
            ProbTable([0.5, 0.5])

    def test_json_round_trip(self):
        t = random_table(3, make_rng(0), n_classes=3)
        back = ProbTable.from_json(t.to_json())
        np.testing.assert_array_equal(back.probs, t.probs)
        assert back.labels == t.labels

    def test_json_dims_mismatch(self):
        with pytest.raises(ConfigError):
            ProbTable.from_json('{"dims": [2, 3], "probs": [0.5, 0.5]}')

    def test_immutable(self):
        with pytest.raises(ValueError):
            max_table().probs[0, 0, 0] = 1.0


class TestCondition:
    def test_empty_assignment_is_marginal(self):
        t = random_table(3, make_rng(1))
        np.testing.assert_allclose(condition(t, {}), t.probs.sum(axis=(0, 1, 2)), atol=1e-15)

    def test_deterministic_table_gives_point_mass(self):
        np.testing.assert_array_equal(condition(max_table(), {0: 1, 1: 0}), [0.0, 1.0])

    def test_conspiratorial_marginalizes_z(self):
        assert condition(conspiratorial_table(), {0: 1})[1] == pytest.approx(0.6, abs=1e-15)

    def test_zero_probability_event(self):
        p = np.zeros((2, 2))
        p[0] = [0.5, 0.5]
        with pytest.raises(ConditioningError):
            condition(ProbTable(p), {0: 1})

    def test_out_of_range(self):
        with pytest.raises(ConfigError):
            condition(max_table(), {0: 2})


class TestExactValue:
    def test_full_coalition_kl_is_zero(self, tables):
        for t in tables[:20]:
            for x in t.feature_points():
                assert exact_value(t, "KL", co.full(t.d), x) == 0.0

    def test_ig_at_empty(self, tables):
        t = tables[0]
        x = next(t.feature_points())
        assert exact_value(t, "IG", 0, x) == pytest.approx(-entropy(condition(t, {})), abs=1e-15)

    def test_label_game_needs_label(self):
        with pytest.raises(ConfigError, match="y_true"):
            exact_value(max_table(), "L", 0, (0, 0))

    def test_unknown_game(self):
        with pytest.raises(ConfigError):
            exact_value(max_table(), "MI", 0, (0, 0))

    def test_conspiratorial_cancellation(self):
        t = conspiratorial_table()
        by_hand = 0.5 * math.log(0.4 / 0.6) + 0.5 * math.log(0.6 / 0.4)
        assert by_hand == pytest.approx(0.0, abs=1e-15)
        assert exact_delta(t, "KL", 0, 0, (1, 1)) == pytest.approx(0.0, abs=1e-12)
        assert not test_thm1a(t, 0, 0)
        assert sup_abs_delta(t, "KL", 0, 0) > 1e-3

    def test_bits_are_rescaled_nats(self, tables):
        t = tables[3]
        x = next(t.feature_points())
        for g in ("KL", "CE", "IG", "H", "Hstar"):
            assert exact_value(t, g, 1, x, base=2) * math.log(2) == pytest.approx(
                exact_value(t, g, 1, x), abs=1e-14)


class TestDeltas:
    def test_kl_and_ce_deltas_agree(self, tables):
        err = max(abs(exact_delta(t, "KL", S, j, x) - exact_delta(t, "CE", S, j, x))
                  for t in tables for S, j, x in _sweep(t))
        assert err < 1e-12

    def test_ig_delta_is_local_mutual_information(self, tables):
        err = 0.0
        for t in tables[:40]:
            for S, j, x in _sweep(t):
                # joint of (X_j, Y) given x_S, X_j on rows
                fixed = {k: x[k] for k in co.members(S, t.d)}
                mi_local = entropy(condition(t, fixed)) - entropy(condition(t, {**fixed, j: x[j]}))
                err = max(err, abs(exact_delta(t, "IG", S, j, x) - mi_local))
        assert err < 1e-12

    def test_ig_delta_averages_to_conditional_mi(self, tables):
        # averaging the local gain over x_j given x_S gives I(Y; X_j | x_S)
        for t in tables[:20]:
            j, S = 0, 0
            joint = t.marginal(1)  # (X_1, Y)
            avg = sum(joint[v].sum() * exact_delta(t, "IG", S, j, (v,) + (0,) * (t.d - 1))
                      for v in range(t.dims[0]))
            assert avg == pytest.approx(mutual_information(joint), abs=1e-12)

    def test_ig_is_minus_h(self, tables):
        for t in tables[:20]:
            for S, j, x in _sweep(t):
                assert exact_delta(t, "IG", S, j, x) == pytest.approx(
                    -exact_delta(t, "H", S, j, x), abs=1e-15)

    def test_member_of_coalition(self):
        with pytest.raises(ConfigError):
            exact_delta(max_table(), "KL", 0b01, 0, (0, 0))

    def test_csi_gives_zero_for_all_games(self):
        t = max_table()
        for g in INFO_GAMES:
            for xv in (0, 1):
                assert exact_delta(t, g, 0b10, 0, (xv, 1)) == pytest.approx(0.0, abs=1e-12)
            assert sup_abs_delta(t, g, 0b10, 0) > 0.1


class TestExactShapley:
    def test_kl_efficiency(self, tables):
        for t in tables[:30]:
            for x in t.feature_points():
                target = kl_divergence(t.cond_y(co.full(t.d), x), t.cond_y(0, x))
                assert exact_shapley(t, "KL", x).sum() == pytest.approx(target, abs=1e-10)

    def test_ig_efficiency(self, tables):
        for t in tables[:30]:
            for x in t.feature_points():
                gain = entropy(t.cond_y(0, x)) - entropy(t.cond_y(co.full(t.d), x))
                assert exact_shapley(t, "IG", x).sum() == pytest.approx(gain, abs=1e-10)

    def test_hstar_efficiency(self, tables):
        for t in tables[:30]:
            h_global = float(np.sum(t.px * np.array(
                [entropy(t.cond_y(co.full(t.d), x)) if t.px[x] > 0 else 0.0
                 for x in np.ndindex(t.px.shape)]).reshape(t.px.shape)))
            for x in t.feature_points():
                target = entropy(t.cond_y(co.full(t.d), x)) - h_global
                assert exact_shapley(t, "Hstar", x).sum() == pytest.approx(target, abs=1e-10)

    def test_kl_and_ce_shapley_identical(self, tables):
        for t in tables[:30]:
            for x in t.feature_points():
                np.testing.assert_allclose(exact_shapley(t, "KL", x), exact_shapley(t, "CE", x),
                                           atol=1e-12)

    def test_capacity(self):
        t = ProbTable(np.full((2,) * 13 + (2,), 2.0 ** -14))
        with pytest.raises(CapacityError, match="Monte-Carlo"):
            exact_shapley(t, "KL", (0,) * 13)


class TestLabelAverages:
    def test_ce_and_ig_as_averaged_log_loss(self, tables):
        for t in tables[:20]:
            for x in t.feature_points():
                p_full = t.cond_y(co.full(t.d), x)
                for S in co.all_masks(t.d):
                    vl = np.array([exact_value(t, "L", S, x, y_true=c) for c in range(t.n_classes)])
                    assert exact_value(t, "CE", S, x) == pytest.approx(-p_full @ vl, abs=1e-12)
                    assert exact_value(t, "IG", S, x) == pytest.approx(
                        -t.cond_y(S, x) @ vl, abs=1e-12)


class TestEntropyGap:
    def test_random_binary_pair(self):
        t = random_table(2, make_rng(5))
        for x in t.feature_points():
            for S in (0, 1, 2):
                lhs, rhs = verify_prop5(t, S, x)
                assert abs(lhs - rhs) <= 1e-12
                assert rhs >= 0

    def test_independent_remainder_collapses(self):
        rng = make_rng(6)
        t = ci_table(3, 2, 0b011, rng)
        for x in t.feature_points():
            lhs, rhs = verify_prop5(t, 0b011, x)
            assert abs(lhs) < 1e-12 and abs(rhs) < 1e-12

    def test_full_coalition_rejected(self):
        with pytest.raises(ConfigError):
            verify_prop5(max_table(), 0b11, (0, 0))


class TestIndependence:
    def test_ci_tables_have_zero_payoffs(self):
        for k in range(10):
            rng = make_rng(7, k)
            d = int(rng.integers(2, 5))
            j = int(rng.integers(0, d))
            S = co.from_members(m for m in range(d) if m != j and rng.random() < 0.5)
            t = ci_table(d, j, S, rng)
            assert test_thm1a(t, j, S)
            for g in INFO_GAMES:
                assert sup_abs_delta(t, g, S, j) < 1e-10

    def test_max_table_is_dependent(self):
        assert not test_thm1a(max_table(), 0, 0b10)
        assert sup_abs_delta(max_table(), "KL", 0b10, 0) > 0
