"""Numeric datasets, weighted instance views, splitting and noise injection."""

from __future__ import annotations

import csv
import hashlib
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

MISSING_TOKEN = "?"
MIN_WEIGHT = 1e-12


class DataError(ValueError):
    """Raised for malformed input data or infeasible data operations."""


@dataclass(frozen=True)
class AttributeMeta:
    name: str
    index: int
    kind: str = "numeric"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable numeric table with integer class labels.

    Attributes:
        X: (N, M) float array; NaN marks a missing cell.
        y: (N,) int array of class ids in 0..K-1.
        attributes: One AttributeMeta per column.
        class_names: Label text per class id. K is its length, so subsets
            keep the class count of the dataset they were cut from.
    """

    X: np.ndarray
    y: np.ndarray
    attributes: tuple
    class_names: tuple

    def __post_init__(self):
        X = np.array(self.X, dtype=float, copy=True)
        y = np.array(self.y, dtype=np.int64, copy=True)
        if X.ndim != 2:
            raise DataError("X must be two-dimensional")
        if y.shape != (X.shape[0],):
            raise DataError("y must hold one label per row")
        if X.shape[0] < 1:
            raise DataError("dataset has no rows")
        if len(self.attributes) != X.shape[1] or X.shape[1] < 1:
            raise DataError("attribute metadata does not match column count")
        if [a.index for a in self.attributes] != list(range(X.shape[1])):
            raise DataError("attribute indices must be 0..M-1 in order")
        if len(self.class_names) < 1:
            raise DataError("no classes")
        if y.min() < 0 or y.max() >= len(self.class_names):
            raise DataError("label id out of range")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "attributes", tuple(self.attributes))
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @classmethod
    def from_arrays(cls, X, y, names=None, class_names=None):
        """Builds a dataset from plain arrays with default metadata."""
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(y, dtype=np.int64)
        if names is None:
            names = [f"x{j + 1}" for j in range(X.shape[1])]
        if class_names is None:
            class_names = [str(k) for k in range(int(y.max()) + 1)]
        attrs = tuple(AttributeMeta(str(n), j) for j, n in enumerate(names))
        return cls(X, y, attrs, tuple(class_names))

    @property
    def n_rows(self):
        return self.X.shape[0]

    @property
    def n_attributes(self):
        return self.X.shape[1]

    @property
    def n_classes(self):
        return len(self.class_names)

    @property
    def attribute_names(self):
        return [a.name for a in self.attributes]

    @property
    def missing(self):
        return np.isnan(self.X)

    @cached_property
    def means(self):
        """Per-attribute means over non-missing cells (NaN if all missing)."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmean(self.X, axis=0)

    @cached_property
    def ranges(self):
        """Per-attribute max minus min over non-missing cells."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmax(self.X, axis=0) - np.nanmin(self.X, axis=0)

    def subset(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.X[rows], self.y[rows], self.attributes, self.class_names)

    def with_values(self, X):
        return Dataset(X, self.y, self.attributes, self.class_names)


class WeightedIndexSet:
    """Fractional view of a dataset: row indices paired with positive weights.

    Entries whose weight falls below ``MIN_WEIGHT`` are dropped on
    construction.
    """

    __slots__ = ("rows", "weights")

    def __init__(self, rows, weights):
        rows = np.asarray(rows, dtype=np.int64)
        weights = np.asarray(weights, dtype=float)
        if rows.shape != weights.shape or rows.ndim != 1:
            raise ValueError("rows and weights must be 1-D and equal length")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("weights must be finite and nonnegative")
        keep = weights >= MIN_WEIGHT
        if not keep.all():
            rows, weights = rows[keep], weights[keep]
        self.rows = rows
        self.weights = weights

    @classmethod
    def full(cls, n):
        return cls(np.arange(n), np.ones(n))

    def __len__(self):
        return self.rows.size

    @property
    def total(self):
        return math.fsum(self.weights)

    def class_weights(self, y, n_classes):
        return np.bincount(y[self.rows], weights=self.weights, minlength=n_classes)

    def __repr__(self):
        return f"WeightedIndexSet(n={len(self)}, total={self.total:.6g})"


class RngStream:
    """Seeded PCG64 stream identified by ``(seed, stream)``.

    Equal identifiers give identical sequences. ``derive`` builds child
    streams from arbitrary hashable keys without consuming parent state.
    """

    def __init__(self, seed, stream=0):
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def derive(self, *keys):
        digest = hashlib.blake2b(repr((self.stream,) + keys).encode(), digest_size=8)
        return RngStream(self.seed, int.from_bytes(digest.digest(), "little"))

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream={self.stream})"


def as_rng(rng):
    """Accepts an RngStream, an int seed or None and returns an RngStream."""
    if isinstance(rng, RngStream):
        return rng
    return RngStream(0 if rng is None else rng)


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise DataError(f"{path}:{i}: expected {len(header)} fields, got {len(r)}")
    return header, body


def _parse_matrix(body, cols, path):
    X = np.empty((len(body), len(cols)))
    for i, r in enumerate(body):
        for k, c in enumerate(cols):
            cell = r[c].strip()
            if cell == MISSING_TOKEN:
                X[i, k] = np.nan
                continue
            try:
                X[i, k] = float(cell)
            except ValueError:
                raise DataError(f"{path}:{i + 2}: non-numeric cell {cell!r}") from None
            if not math.isfinite(X[i, k]):
                raise DataError(f"{path}:{i + 2}: non-finite cell {cell!r}")
    return X


def load_csv(path, label_column="class"):
    """Reads a numeric CSV with a header row and one label column.

    Args:
        path: CSV file path.
        label_column: Name of the header field holding class labels.

    Returns:
        Dataset whose class ids follow first-appearance order of the labels.

    Raises:
        DataError: On unreadable files, unknown label columns, non-numeric
            cells, or attributes without any observed value.
    """
    header, body = _read_rows(path)
    if label_column not in header:
        raise DataError(f"{path}: no label column {label_column!r}")
    if not body:
        raise DataError(f"{path}: no data rows")
    li = header.index(label_column)
    cols = [c for c in range(len(header)) if c != li]
    if not cols:
        raise DataError(f"{path}: no attribute columns")
    X = _parse_matrix(body, cols, path)
    labels = [r[li].strip() for r in body]
    if any(lab == MISSING_TOKEN or lab == "" for lab in labels):
        raise DataError(f"{path}: missing class label")
    classes = list(dict.fromkeys(labels))
    lookup = {c: k for k, c in enumerate(classes)}
    y = np.array([lookup[lab] for lab in labels], dtype=np.int64)
    empty = np.all(np.isnan(X), axis=0)
    if empty.any():
        bad = [header[cols[k]] for k in np.flatnonzero(empty)]
        raise DataError(f"{path}: attributes without values: {bad}")
    if len(classes) == 1:
        warnings.warn(f"{path}: single class {classes[0]!r}; trees reduce to one leaf")
    attrs = tuple(AttributeMeta(header[c], k) for k, c in enumerate(cols))
    return Dataset(X, y, attrs, tuple(classes))


def load_features(path, drop_column=None):
    """Reads attribute columns only, ignoring ``drop_column`` when present.

    Returns:
        Tuple of (attribute names, (N, M) float matrix with NaN for "?").
    """
    header, body = _read_rows(path)
    cols = [c for c, h in enumerate(header) if h != drop_column]
    return [header[c] for c in cols], _parse_matrix(body, cols, path)


def _format_value(v):
    return MISSING_TOKEN if np.isnan(v) else repr(float(v))


def write_csv(data, path, label_column="class"):
    """Writes a dataset in the format accepted by :func:`load_csv`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(data.attribute_names + [label_column])
        for row, label in zip(data.X, data.y):
            w.writerow([_format_value(v) for v in row] + [data.class_names[label]])


def stratified_split_indices(y, train_fraction, rng):
    """Returns sorted (train_rows, test_rows) preserving class proportions."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    gen = as_rng(rng).generator
    y = np.asarray(y)
    train = []
    for k in np.unique(y):
        members = np.flatnonzero(y == k)
        if members.size < 2:
            raise DataError(f"class {k} has fewer than 2 rows")
        take = int(math.floor(train_fraction * members.size + 0.5))
        take = min(max(take, 1), members.size - 1)
        train.append(gen.permutation(members)[:take])
    train = np.sort(np.concatenate(train))
    test = np.setdiff1d(np.arange(y.size), train)
    return train, test


def stratified_split(data, train_fraction, rng):
    """Splits a dataset into stratified train and test parts."""
    tr, te = stratified_split_indices(data.y, train_fraction, rng)
    return data.subset(tr), data.subset(te)


def stratified_folds(y, n_folds, rng):
    """Assigns each row a fold id so every class is spread over all folds.

    Raises:
        DataError: If some class has fewer members than ``n_folds``.
    """
    gen = as_rng(rng).generator
    y = np.asarray(y)
    fold = np.empty(y.size, dtype=np.int64)
    offset = 0
    for k in np.unique(y):
        members = gen.permutation(np.flatnonzero(y == k))
        if members.size < n_folds:
            raise DataError(f"class {k} has {members.size} rows, fewer than {n_folds} folds")
        fold[members] = (offset + np.arange(members.size)) % n_folds
        offset += members.size
    return fold


def attribute_mean(data, j):
    """Mean of attribute ``j`` over its non-missing cells."""
    col = data.X[:, j]
    known = col[~np.isnan(col)]
    if known.size == 0:
        raise DataError(f"attribute {j} has no observed values")
    return float(known.mean())


def add_gaussian_noise(data, n, rng, means=None):
    """Adds zero-mean Gaussian noise with std ``n * |mean_j|`` per attribute.

    Args:
        data: Source dataset.
        n: Noise factor, >= 0.
        rng: RngStream (or int seed).
        means: Optional per-attribute means; defaults to the means of
            ``data`` itself.

    Returns:
        New dataset; missing cells and labels are left untouched.
    """
    if n < 0:
        raise ValueError("noise factor must be nonnegative")
    if n == 0:
        return data
    mu = data.means if means is None else np.asarray(means, dtype=float)
    scale = n * np.abs(mu)
    eps = as_rng(rng).generator.standard_normal(data.X.shape) * scale
    X = data.X + eps
    return data.with_values(np.where(np.isnan(data.X), np.nan, X))


class ValueHistogram(NamedTuple):
    values: np.ndarray
    weights: np.ndarray
    class_weights: np.ndarray


def histogram_from_arrays(x, w, y, n_classes):
    """Collapses (value, weight, class) triples to sorted distinct values.

    Missing values must already be removed.
    """
    values, inv = np.unique(x, return_inverse=True)
    d = values.size
    cw = np.bincount(inv * n_classes + y, weights=w, minlength=d * n_classes)
    cw = cw.reshape(d, n_classes)
    return ValueHistogram(values, cw.sum(axis=1), cw)


def sorted_distinct_values(data, view, j):
    """Distinct observed values of attribute ``j`` within ``view``.

    Returns:
        ValueHistogram with strictly increasing values, total weight per
        value and an array of per-class weights of shape (D, K).
    """
    x = data.X[view.rows, j]
    known = ~np.isnan(x)
    return histogram_from_arrays(x[known], view.weights[known], data.y[view.rows][known],
                                 data.n_classes)


def concat_datasets(parts: Sequence[Dataset]):
    first = parts[0]
    X = np.vstack([p.X for p in parts])
    y = np.concatenate([p.y for p in parts])
    return Dataset(X, y, first.attributes, first.class_names)
