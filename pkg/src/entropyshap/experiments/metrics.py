"""Scores used by the experiment harnesses."""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from ..errors import MetricError


def roc_auc(scores, labels):
    """ROC curve and AUC.

    The AUC is the Mann-Whitney statistic: the probability that a random
    positive outscores a random negative, with ties counted as one half.

    Returns
    -------
    curve : ndarray of shape (k, 2)
        ``(false positive rate, true positive rate)`` points, one per
        distinct score threshold, starting at (0, 0).
    auc : float
    """
    s = np.asarray(scores, dtype=np.float64).reshape(-1)
    y = np.asarray(labels).reshape(-1).astype(bool)
    if s.shape != y.shape:
        raise MetricError("scores and labels differ in length")
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        raise MetricError("ROC needs both positive and negative labels")
    ranks = rankdata(s)  # average ranks give half credit to ties
    auc = (ranks[y].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg)
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    last = np.r_[np.diff(s_sorted) != 0, True]
    tp = np.cumsum(y_sorted)[last]
    fp = np.cumsum(~y_sorted)[last]
    curve = np.column_stack([np.r_[0, fp / n_neg], np.r_[0, tp / n_pos]])
    return curve, float(auc)


def mean_abs_error(estimate, truth) -> float:
    return float(np.mean(np.abs(np.asarray(estimate) - np.asarray(truth))))


def mean_and_se(values):
    v = np.asarray(values, dtype=np.float64)
    se = v.std(ddof=1) / np.sqrt(v.size) if v.size > 1 else float("nan")
    return float(v.mean()), float(se)


def below_by_one_se(a_mean, a_se, b_mean, b_se) -> bool:
    """``a < b`` by more than one standard error of the difference."""
    return bool(b_mean - a_mean > np.hypot(a_se, b_se))
