"""Coalitions as integer bitmasks.

Bit ``j`` set means feature ``j`` (0-based) is in the coalition.  Plain
``int`` is used throughout so masks hash cheaply and can key memo tables.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from itertools import combinations
from math import factorial

import numpy as np

CoalitionMask = int


def full(d: int) -> CoalitionMask:
    return (1 << d) - 1


def from_members(members: Iterable[int]) -> CoalitionMask:
    mask = 0
    for j in members:
        mask |= 1 << int(j)
    return mask


def members(mask: CoalitionMask, d: int) -> list[int]:
    return [j for j in range(d) if mask >> j & 1]


def size(mask: CoalitionMask) -> int:
    return int(mask).bit_count()


def complement(mask: CoalitionMask, d: int) -> CoalitionMask:
    return full(d) & ~mask


def contains(mask: CoalitionMask, j: int) -> bool:
    return bool(mask >> j & 1)


def as_bool(mask: CoalitionMask, d: int) -> np.ndarray:
    if d < 63:
        return (mask >> np.arange(d)) & 1 == 1
    return np.array([mask >> j & 1 for j in range(d)], dtype=bool)


def all_masks(d: int) -> Iterator[CoalitionMask]:
    return iter(range(1 << d))


def shapley_weight(s: int, d: int) -> float:
    """Weight ``s! (d - s - 1)! / d!`` of a coalition of size ``s``."""
    return factorial(s) * factorial(d - s - 1) / factorial(d)


def enumerate_shapley(value, d: int) -> np.ndarray:
    """Reference Shapley values: explicit sum over every ``S`` not containing ``j``.

    ``value`` maps a mask to a payoff.  Written as the textbook double loop
    on purpose; the vectorized engine in :mod:`entropyshap.shapley` is
    checked against it.
    """
    phi = np.zeros(d)
    for j in range(d):
        others = [k for k in range(d) if k != j]
        for r in range(d):
            w = shapley_weight(r, d)
            for subset in combinations(others, r):
                S = from_members(subset)
                phi[j] += w * (value(S | 1 << j) - value(S))
    return phi
