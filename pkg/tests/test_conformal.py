import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from entropyshap.conformal import (INFORMATIVE, NULL_CONSISTENT, ConformalBand, band_report,
                                   calibrate, calibrate_matrix, coverage, minimal_n_cal,
                                   order_ranks, select_features, write_band_report, zero_pvalue)
from entropyshap.errors import CalibrationSizeError, DataError, DomainError


def _band(lo, hi):
    return ConformalBand(0, lo, hi, 0.1, 100, 5, 96)


class TestRanks:
    def test_small_sample(self):
        assert order_ranks(9, 0.2) == (1, 9)

    def test_thousand(self):
        assert order_ranks(1000, 0.1) == (51, 951)

    def test_exact_arithmetic_at_integer_products(self):
        # (n + 1) alpha / 2 = 1 exactly; floats would round 10 * 0.1 / 2 awkwardly
        assert order_ranks(19, 0.1) == (1, 19)

    def test_minimal_size(self):
        for a in (0.05, 0.1, 0.2, 0.3):
            n = minimal_n_cal(a)
            assert order_ranks(n, a)[1] <= n
            assert order_ranks(n - 1, a)[1] > n - 1

    @given(st.integers(1, 5000), st.floats(0.01, 0.99))
    def test_rank_invariants(self, n, a):
        lo, hi = order_ranks(n, a)
        assert 1 <= lo <= hi
        if n >= minimal_n_cal(a):
            assert hi <= n

    @pytest.mark.parametrize("a", [0.0, 1.0, -0.1, 1.5])
    def test_alpha_domain(self, a):
        with pytest.raises(DomainError):
            order_ranks(100, a)


class TestCalibrate:
    def test_order_statistics(self):
        v = np.arange(9.0)[::-1]
        b = calibrate(v, 0.2)
        assert (b.q_lo, b.q_hi, b.l_index, b.u_index) == (0.0, 8.0, 1, 9)

    def test_endpoints_are_sample_values(self):
        v = np.random.default_rng(0).standard_normal(1000)
        b = calibrate(v, 0.1)
        assert b.q_lo in v and b.q_hi in v
        s = np.sort(v)
        assert (b.q_lo, b.q_hi) == (s[50], s[950])

    def test_constant_values(self):
        b = calibrate(np.full(50, 0.3), 0.1)
        assert (b.q_lo, b.q_hi) == (0.3, 0.3)

    def test_too_small_reports_minimum(self):
        with pytest.raises(CalibrationSizeError) as exc:
            calibrate(np.arange(5.0), 0.1)
        assert exc.value.minimal == 19
        assert "19" in str(exc.value)

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            calibrate([0.0, np.nan] * 20, 0.1)

    def test_matrix(self):
        v = np.random.default_rng(1).standard_normal((100, 3))
        bands = calibrate_matrix(v, 0.1, ["a", "b", "c"], "h")
        assert [b.name for b in bands] == ["a", "b", "c"]
        assert bands[2].q_hi == calibrate(v[:, 2], 0.1).q_hi
        assert bands[0].config_hash == "h"


class TestCoverage:
    def test_calibration_set_is_covered(self):
        v = np.random.default_rng(2).standard_normal(1000)
        assert coverage(calibrate(v, 0.1), v) >= 0.9

    def test_closed_interval(self):
        assert coverage(_band(0.0, 1.0), [0.0, 1.0, 1.0000001]) == pytest.approx(2 / 3)

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(3)
        cal, test = rng.standard_normal(500), rng.standard_normal(500)
        covs = [coverage(calibrate(cal, a), test) for a in (0.05, 0.1, 0.2, 0.4)]
        assert all(b <= a for a, b in zip(covs, covs[1:]))

    def test_empty(self):
        with pytest.raises(DataError):
            coverage(_band(0, 1), [])


class TestSelection:
    def test_narrow_band(self):
        assert select_features([_band(-0.01, 0.01)], 0.05) == [NULL_CONSISTENT]

    def test_wide_band_is_informative(self):
        assert select_features([_band(-4.310, 2.203)], 0.05) == [INFORMATIVE]

    def test_zero_width_default(self):
        assert select_features([_band(-1e-9, 1e-9)]) == [INFORMATIVE]
        assert select_features([_band(0.0, 0.0)]) == [NULL_CONSISTENT]

    def test_negative_width(self):
        with pytest.raises(DomainError):
            select_features([_band(0, 0)], -1.0)

    def test_pvalue(self):
        assert zero_pvalue(np.arange(1.0, 20.0)) == pytest.approx(2 / 20)
        assert zero_pvalue(np.r_[-np.ones(10), np.ones(10)]) == 1.0
        # a symmetric sample around zero is consistent with zero
        assert zero_pvalue(np.random.default_rng(0).standard_normal(999)) > 0.5

    def test_pvalue_inverts_the_band(self):
        # 0 lies outside the alpha band exactly when the p-value is <= alpha
        rng = np.random.default_rng(4)
        for _ in range(200):
            v = rng.normal(rng.normal(0, 2), 1, size=99)
            b = calibrate(v, 0.1)
            outside = not (b.q_lo <= 0 <= b.q_hi)
            assert outside == (zero_pvalue(v) <= 0.1)

    def test_report(self, tmp_path):
        bands = [_band(-0.5, 0.5), _band(1.0, 2.0)]
        rep = band_report(bands, pvalues=[0.9, 0.01], coverages=[0.9, 0.91])
        assert [f["decision"] for f in rep["features"]] == [INFORMATIVE, INFORMATIVE]
        assert rep["features"][1]["p_value"] == 0.01
        write_band_report(tmp_path / "b.json", rep)
        assert json.loads((tmp_path / "b.json").read_text()) == rep
