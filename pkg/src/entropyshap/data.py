"""Tabular datasets, CSV ingestion, splitting and missingness masking."""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, DomainError, ParseError, SchemaError, SizeError
from .rng import TAG_MASK, TAG_SPLIT, make_rng

MISSING_SENTINEL = 0.0
DEFAULT_MISSING_TOKEN = "NA"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable n x d feature matrix with an optional target.

    Missing cells hold ``MISSING_SENTINEL`` in ``values`` and are flagged in
    the parallel boolean ``missing`` mask.  Use :meth:`as_nan` to obtain the
    NaN-coded matrix that predictors and samplers consume.
    """

    values: np.ndarray
    feature_names: tuple[str, ...]
    target: np.ndarray | None = None
    missing: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise SchemaError("feature matrix must be two-dimensional")
        n, d = values.shape
        if n < 1 or d < 1:
            raise SchemaError(f"dataset needs n >= 1 and d >= 1, got {n}x{d}")
        names = tuple(str(s) for s in self.feature_names)
        if len(names) != d:
            raise SchemaError(f"{len(names)} feature names for {d} columns")
        if len(set(names)) != d:
            raise SchemaError("feature names must be unique")
        if self.missing is None:
            missing = np.isnan(values)
        else:
            missing = np.array(self.missing, dtype=bool)
            if missing.shape != values.shape:
                raise SchemaError("missing mask shape differs from values")
            missing = missing | np.isnan(values)
        values[missing] = MISSING_SENTINEL
        target = None
        if self.target is not None:
            target = np.array(self.target, dtype=np.float64).reshape(-1)
            if target.shape[0] != n:
                raise SchemaError(f"target length {target.shape[0]} != n={n}")
            target.setflags(write=False)
        values.setflags(write=False)
        missing.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "missing", missing)
        object.__setattr__(self, "feature_names", names)
        object.__setattr__(self, "target", target)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def is_missing(self, i: int, j: int) -> bool:
        return bool(self.missing[i, j])

    def as_nan(self) -> np.ndarray:
        out = self.values.copy()
        out[self.missing] = np.nan
        return out

    def subset(self, rows) -> Dataset:
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(
            self.values[rows],
            self.feature_names,
            None if self.target is None else self.target[rows],
            self.missing[rows],
        )

    def with_missing(self, missing: np.ndarray) -> Dataset:
        return Dataset(self.values, self.feature_names, self.target, missing)

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.feature_names).encode())
        h.update(np.ascontiguousarray(self.values).tobytes())
        h.update(np.packbits(self.missing).tobytes())
        if self.target is not None:
            h.update(b"target")
            h.update(np.ascontiguousarray(self.target).tobytes())
        return h.hexdigest()[:16]


def from_arrays(X, y=None, feature_names=None) -> Dataset:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if feature_names is None:
        feature_names = [f"X{j + 1}" for j in range(X.shape[1])]
    return Dataset(X, tuple(feature_names), y)


def _parse_cell(text, token, row, col):
    if text == token:
        return np.nan, True
    try:
        return float(text), False
    except ValueError:
        raise ParseError(f"row {row}, column {col!r}: cannot parse {text!r}") from None


def load_csv(path, target_column: str | None = None,
             missing_token: str = DEFAULT_MISSING_TOKEN) -> Dataset:
    """Read a header-first CSV of decimal reals.

    Rows are numbered from 1 for the first data row in error messages.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from exc
    rows = [r for r in rows if r]
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise SchemaError(f"{path}: duplicate header column(s) {dupes}")
    body = rows[1:]
    if not body:
        raise SchemaError(f"{path}: header present but no data rows")
    if target_column is not None and target_column not in header:
        raise SchemaError(f"{path}: target column {target_column!r} not in header")

    n, width = len(body), len(header)
    values = np.empty((n, width))
    missing = np.zeros((n, width), dtype=bool)
    for i, r in enumerate(body, start=1):
        if len(r) != width:
            raise ParseError(f"row {i}: expected {width} cells, found {len(r)}")
        for k, cell in enumerate(r):
            values[i - 1, k], missing[i - 1, k] = _parse_cell(
                cell.strip(), missing_token, i, header[k])

    if target_column is None:
        return Dataset(values, tuple(header), None, missing)
    t = header.index(target_column)
    keep = [k for k in range(width) if k != t]
    target = values[:, t].copy()
    target[missing[:, t]] = np.nan
    return Dataset(values[:, keep], tuple(header[k] for k in keep), target,
                   missing[:, keep])


def write_csv(ds: Dataset, path, target_column: str | None = None,
              missing_token: str = DEFAULT_MISSING_TOKEN) -> None:
    """Write ``ds``; floats use ``repr`` so a reload is bit-exact."""
    header = list(ds.feature_names)
    if ds.target is not None:
        header.append(target_column or "target")
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(ds.n):
            row = [missing_token if ds.missing[i, j] else repr(float(ds.values[i, j]))
                   for j in range(ds.d)]
            if ds.target is not None:
                t = ds.target[i]
                row.append(missing_token if np.isnan(t) else repr(float(t)))
            w.writerow(row)


@dataclass(frozen=True)
class SplitPair:
    training_indices: np.ndarray
    calibration_indices: np.ndarray
    seed: int


def split_half(ds_or_n, seed: int) -> SplitPair:
    """Uniform random halving with ``|training| = floor(n / 2)``."""
    n = ds_or_n if isinstance(ds_or_n, int) else ds_or_n.n
    if n < 2:
        raise SizeError(f"cannot split n={n} rows into two halves")
    perm = make_rng(seed, TAG_SPLIT).permutation(n)
    k = n // 2
    return SplitPair(np.sort(perm[:k]), np.sort(perm[k:]), seed)


def mask_missing(ds: Dataset, fraction: float, seed: int) -> Dataset:
    """Flag each feature cell missing independently with probability ``fraction``."""
    if not 0.0 <= fraction <= 1.0:
        raise DomainError(f"missing fraction must lie in [0, 1], got {fraction}")
    if fraction == 0.0:
        return ds
    u = make_rng(seed, TAG_MASK).random(ds.values.shape)
    return ds.with_missing(ds.missing | (u < fraction))
