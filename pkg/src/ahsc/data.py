"""Datasets, CSV ingestion, stratified splitting, standardization and batching."""
import csv
import logging
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DataError,
    EmptyBodyError,
    LabelError,
    LoadError,
    MissingFileError,
    NonFiniteError,
    NonNumericError,
    RaggedRowError,
)

log = logging.getLogger(__name__)

BUNDLED_DIR = os.path.join(os.path.dirname(__file__), "datasets")


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    k: int
    feature_names: Optional[tuple] = None
    label_names: Optional[tuple] = None

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        if X.shape[0] < 1:
            raise DataError("dataset has no samples")
        if y.shape != (X.shape[0],):
            raise DataError(f"labels shape {y.shape} does not match {X.shape[0]} samples")
        if not np.issubdtype(y.dtype, np.integer):
            raise LabelError("labels must be integers")
        if self.k < 1 or y.min() < 0 or y.max() >= self.k:
            raise LabelError(f"labels must lie in [0, {self.k})")
        if not np.all(np.isfinite(X)):
            raise DataError("features contain non-finite values")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y.astype(np.int64))

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.k, self.feature_names, self.label_names)


@dataclass(frozen=True)
class Batch:
    """Read-only view of ``data`` restricted to ``indices``."""

    data: Dataset
    indices: np.ndarray

    def __post_init__(self):
        if len(self.indices) == 0:
            raise DataError("empty batch")

    @property
    def X(self) -> np.ndarray:
        return self.data.features[self.indices]

    @property
    def y(self) -> np.ndarray:
        return self.data.labels[self.indices]

    @property
    def size(self) -> int:
        return len(self.indices)


def _parse_float(cell):
    try:
        return float(cell)
    except ValueError:
        return None


def load_csv(path, label_column=None) -> Dataset:
    """Load a headered, comma-separated file. The label column defaults to the last one.

    Labels that are all non-negative integers are used as class indices
    directly; anything else is mapped to 0..k-1 in order of first appearance.
    """
    if not os.path.isfile(path):
        raise MissingFileError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise EmptyBodyError("file has no header row")
    header, body = [h.strip() for h in rows[0]], rows[1:]
    body = [r for r in body if r]  # tolerate a trailing blank line
    if not body:
        raise EmptyBodyError("file has a header but no data rows")
    if label_column is None:
        li = len(header) - 1
    elif label_column in header:
        li = header.index(label_column)
    else:
        raise LoadError(f"label column {label_column!r} not in header")

    feats, raw_labels = [], []
    for r, row in enumerate(body, start=2):  # 1-based file line numbers
        if len(row) != len(header):
            raise RaggedRowError(f"expected {len(header)} fields, found {len(row)}", row=r)
        vals = []
        for c, cell in enumerate(row):
            if c == li:
                continue
            v = _parse_float(cell.strip())
            if v is None:
                raise NonNumericError(f"non-numeric feature {cell!r}", row=r, column=header[c])
            if not math.isfinite(v):
                raise NonFiniteError(f"non-finite feature {cell!r}", row=r, column=header[c])
            vals.append(v)
        feats.append(vals)
        raw_labels.append(row[li].strip())

    try:
        ints = [int(s) for s in raw_labels]
    except ValueError:
        ints = None
    if ints is not None and min(ints) >= 0:
        labels = np.array(ints, dtype=np.int64)
        k = int(labels.max()) + 1
        names = None
    else:
        mapping = {}
        for s in raw_labels:
            mapping.setdefault(s, len(mapping))
        labels = np.array([mapping[s] for s in raw_labels], dtype=np.int64)
        k = len(mapping)
        names = tuple(mapping)
    fnames = tuple(h for i, h in enumerate(header) if i != li)
    return Dataset(np.array(feats, dtype=np.float64).reshape(len(body), len(fnames)), labels, k, fnames, names)


def save_csv(data: Dataset, path):
    names = data.feature_names or tuple(f"x{i}" for i in range(data.n))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + ["label"])
        for x, y in zip(data.features, data.labels):
            lab = data.label_names[y] if data.label_names else int(y)
            w.writerow([repr(float(v)) for v in x] + [lab])


def bundled(name) -> str:
    """Path of a dataset shipped with the package (e.g. ``"iris.csv"``)."""
    return os.path.join(BUNDLED_DIR, name)


def split(data: Dataset, test_fraction: float, seed: int):
    """Stratified train/test split. Returns ``(train, test)`` with original order kept."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    test_idx = []
    for c in range(data.k):
        members = np.flatnonzero(data.labels == c)
        if len(members) == 0:
            continue
        if len(members) == 1:
            log.warning("class %d has a single sample; keeping it in the training split", c)
            continue
        n_test = int(math.floor(len(members) * test_fraction + 0.5))
        n_test = min(max(n_test, 1), len(members) - 1)
        test_idx.extend(rng.permutation(members)[:n_test].tolist())
    if not test_idx:
        raise DataError("no class has two samples, so the test split would be empty")
    mask = np.zeros(data.m, dtype=bool)
    mask[test_idx] = True
    return data.subset(np.flatnonzero(~mask)), data.subset(np.flatnonzero(mask))


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    std: np.ndarray
    # number of rows the statistics came from; transform() is not idempotent
    fitted_on: int = 0

    def transform(self, data: Dataset) -> Dataset:
        X = (data.features - self.mean) / self.std
        return Dataset(X, data.labels, data.k, data.feature_names, data.label_names)


def standardize(train: Dataset, test: Optional[Dataset] = None):
    """Per-feature z-scoring with statistics from ``train`` only. Returns ``(train', test', scaler)``."""
    mean = train.features.mean(axis=0)
    # pin constant columns to their exact value so they map to exact zeros
    const = np.ptp(train.features, axis=0) == 0
    mean[const] = train.features[0, const]
    std = np.maximum(train.features.std(axis=0), 1e-12)
    scaler = Scaler(mean, std, fitted_on=train.m)
    return scaler.transform(train), (scaler.transform(test) if test is not None else None), scaler


def batches(data: Dataset, batch_size: int, shuffle_seed: Optional[int] = None) -> list:
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = np.arange(data.m) if shuffle_seed is None else np.random.default_rng(shuffle_seed).permutation(data.m)
    return [Batch(data, order[i : i + batch_size]) for i in range(0, data.m, batch_size)]


def synthetic_blobs(m_per_class, k, dim, separation, noise_std, seed) -> Dataset:
    """Gaussian blobs; class ``c`` is centred at ``separation * e_(c mod dim)``.

    When ``k > dim`` the basis directions are cycled with a sign flip on every
    other pass so the centres stay distinct.
    """
    if min(m_per_class, k, dim) < 1:
        raise ValueError("m_per_class, k and dim must all be >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    centers = np.zeros((k, dim))
    for c in range(k):
        sign = -1.0 if (c // dim) % 2 else 1.0
        centers[c, c % dim] = sign * separation * (1 + c // (2 * dim))
    labels = np.repeat(np.arange(k), m_per_class)
    X = centers[labels] + noise_std * rng.standard_normal((len(labels), dim))
    return Dataset(X, labels, k)


def parse_synthetic(spec: str) -> Dataset:
    """Build a dataset from ``blobs:m=100,k=3,dim=4,sep=6,noise=1,seed=0``."""
    kind, _, rest = spec.partition(":")
    if kind != "blobs":
        raise ValueError(f"unknown synthetic generator {kind!r}")
    opts = {"m": "100", "k": "2", "dim": "2", "sep": "6", "noise": "1", "seed": "0"}
    for part in filter(None, rest.split(",")):
        key, eq, val = part.partition("=")
        if not eq or key not in opts:
            raise ValueError(f"bad synthetic option {part!r}")
        opts[key] = val
    return synthetic_blobs(
        int(opts["m"]), int(opts["k"]), int(opts["dim"]), float(opts["sep"]), float(opts["noise"]), int(opts["seed"])
    )
