"""Split-conformal bands for per-feature Shapley values.

Shapley values computed on a held-out calibration half are exchangeable
with those of a new test point, so a pair of order statistics gives an
interval with marginal coverage at least ``1 - alpha``.  The guarantee is
marginal over test points; nothing is claimed for any particular region of
feature space.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .errors import CalibrationSizeError, DataError, DomainError

SCHEMA_VERSION = 1
INFORMATIVE = "informative"
NULL_CONSISTENT = "null-consistent"


def _alpha(alpha) -> Fraction:
    a = float(alpha)
    if not 0.0 < a < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    # exact rational so that e.g. 10 * 0.1 / 2 rounds up correctly
    return Fraction(a).limit_denominator(10**9)


def order_ranks(n_cal: int, alpha) -> tuple[int, int]:
    """1-based ranks ``(ceil((n+1) alpha/2), ceil((n+1)(1 - alpha/2)))``."""
    a = _alpha(alpha)
    lo = math.ceil((n_cal + 1) * a / 2)
    hi = math.ceil((n_cal + 1) * (1 - a / 2))
    return max(lo, 1), hi


def minimal_n_cal(alpha) -> int:
    """Smallest calibration size whose upper rank fits in the sample."""
    a = _alpha(alpha)
    # ceil((n+1)(1-a/2)) <= n  <=>  (n+1)(1-a/2) <= n  <=>  n >= 2/a - 1
    return max(1, math.ceil(2 / a - 1))


@dataclass(frozen=True)
class ConformalBand:
    feature: int
    q_lo: float
    q_hi: float
    alpha: float
    n_cal: int
    l_index: int
    u_index: int
    name: str | None = None
    config_hash: str | None = None

    def contains(self, values) -> np.ndarray:
        v = np.asarray(values, dtype=np.float64)
        return (v >= self.q_lo) & (v <= self.q_hi)

    @property
    def width(self) -> float:
        return self.q_hi - self.q_lo


def calibrate(cal_values, alpha: float, feature: int = 0, name: str | None = None,
              config_hash: str | None = None) -> ConformalBand:
    """Band from the ``l``-th and ``u``-th smallest calibration values.

    Raises
    ------
    CalibrationSizeError
        If ``u > n_cal``; the message reports the minimal ``n_cal``.
    """
    v = np.asarray(cal_values, dtype=np.float64).reshape(-1)
    if v.size == 0 or np.isnan(v).any():
        raise DataError("calibration values must be non-empty and free of NaN")
    n = v.size
    lo, hi = order_ranks(n, alpha)
    if hi > n:
        raise CalibrationSizeError(n, alpha, minimal_n_cal(alpha))
    s = np.sort(v)
    return ConformalBand(int(feature), float(s[lo - 1]), float(s[hi - 1]), float(alpha), n,
                         lo, hi, name, config_hash)


def calibrate_matrix(values, alpha: float, names=None, config_hash=None) -> list[ConformalBand]:
    """One band per column of an ``(n_cal, d)`` matrix."""
    values = np.asarray(values, dtype=np.float64)
    names = names or [None] * values.shape[1]
    return [calibrate(values[:, j], alpha, j, names[j], config_hash)
            for j in range(values.shape[1])]


def coverage(band: ConformalBand, test_values) -> float:
    """Fraction of test values inside the closed band."""
    v = np.asarray(test_values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise DataError("coverage needs at least one test value")
    return float(band.contains(v).mean())


def select_features(bands, zero_width: float = 0.0) -> list[str]:
    """``null-consistent`` iff the band lies inside ``[-zero_width, zero_width]``.

    A narrow band around zero is necessary but not sufficient evidence that
    a feature is uninformative, so the default width of 0 only flags
    bands that collapse to exactly zero.
    """
    if zero_width < 0:
        raise DomainError("zero_width must be >= 0")
    return [NULL_CONSISTENT if -zero_width <= b.q_lo and b.q_hi <= zero_width else INFORMATIVE
            for b in bands]


def zero_pvalue(cal_values) -> float:
    """Two-sided conformal p-value of the value 0 against the calibration sample.

    ``2 min(1 + #{v <= 0}, 1 + #{v >= 0}) / (n + 1)``, capped at 1.
    """
    v = np.asarray(cal_values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise DataError("need calibration values")
    k = min(np.sum(v <= 0), np.sum(v >= 0))
    return float(min(1.0, 2.0 * (1 + k) / (v.size + 1)))


def band_report(bands, decisions=None, pvalues=None, coverages=None) -> dict:
    """JSON-ready per-feature table (quantiles, level, size, decision)."""
    decisions = decisions or select_features(bands)
    feats = []
    for k, b in enumerate(bands):
        row = asdict(b)
        row["decision"] = decisions[k]
        if pvalues is not None:
            row["p_value"] = float(pvalues[k])
        if coverages is not None:
            row["coverage"] = float(coverages[k])
        feats.append(row)
    return {"schema_version": SCHEMA_VERSION, "features": feats}


def write_band_report(path, report: dict) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
