"""Reproducible random streams.

A stream is identified by a root seed plus a path of non-negative integers.
Generators are built from ``numpy.random.SeedSequence(seed, spawn_key=path)``,
which is numpy's documented splitting scheme: distinct paths give
statistically independent PCG64 streams, identical paths give identical
streams.  Work units (rows, coalitions, trees, replicates) each own a path,
so results never depend on scheduling or worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# path tags keeping sibling streams for different purposes apart
TAG_GAME = 0
TAG_PERMUTATION = 1
TAG_SAMPLER = 2
TAG_FIT = 3
TAG_DATA = 4
TAG_SPLIT = 5
TAG_MASK = 6


@dataclass(frozen=True)
class RngStream:
    seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or any(p < 0 for p in self.path):
            raise ValueError("seed and stream ids must be non-negative")

    def child(self, *ids: int) -> RngStream:
        return RngStream(self.seed, self.path + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
        return np.random.default_rng(ss)


def make_rng(seed: int, *path: int) -> np.random.Generator:
    """Shorthand for ``RngStream(seed, path).generator()``."""
    return RngStream(int(seed), tuple(int(p) for p in path)).generator()
