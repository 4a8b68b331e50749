"""Datasets, synthetic blob generation, normalization and small geometry helpers."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._rng import make_rng
from .exceptions import (
    ArgumentError,
    ConfigurationError,
    DegenerateHullError,
    UndefinedCorrelationError,
)


class Point(NamedTuple):
    id: int
    coords: tuple


def _frozen(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


class Dataset:
    """An ordered, immutable collection of identified d-dimensional points.

    Row order is meaningful (shuffling relations change it); ids are stable
    across transformations and are unique within a dataset.
    """

    __slots__ = ("_ids", "_coords")

    def __init__(self, ids, coords):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        if coords.ndim != 2:
            raise ArgumentError("coords must be a 2-D array of shape (n, d)")
        ids = np.asarray(ids, dtype=np.int64).reshape(-1)
        if len(ids) != len(coords):
            raise ArgumentError(f"{len(ids)} ids for {len(coords)} points")
        if len(ids) and ids.min() < 0:
            raise ArgumentError("point ids must be non-negative")
        if len(np.unique(ids)) != len(ids):
            raise ArgumentError("point ids must be unique")
        if coords.shape[1] < 1:
            raise ArgumentError("dimensionality must be positive")
        self._ids = _frozen(ids)
        self._coords = _frozen(coords)

    @classmethod
    def from_array(cls, coords):
        coords = np.asarray(coords, dtype=float)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1)
        return cls(np.arange(len(coords)), coords)

    @property
    def ids(self) -> np.ndarray:
        return self._ids

    @property
    def coords(self) -> np.ndarray:
        return self._coords

    @property
    def dim(self) -> int:
        return self._coords.shape[1]

    @property
    def points(self) -> list[Point]:
        return [Point(int(i), tuple(float(v) for v in row)) for i, row in zip(self._ids, self._coords)]

    def __len__(self):
        return len(self._ids)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self._coords.shape == other._coords.shape
            and np.array_equal(self._ids, other._ids)
            and np.array_equal(self._coords, other._coords)
        )

    def __repr__(self):
        return f"Dataset(n={len(self)}, dim={self.dim})"

    def position_of(self) -> dict[int, int]:
        """Map from point id to row position."""
        return {int(i): p for p, i in enumerate(self._ids)}

    def take(self, positions) -> "Dataset":
        positions = np.asarray(positions, dtype=int)
        return Dataset(self._ids[positions], self._coords[positions])

    def with_coords(self, coords) -> "Dataset":
        return Dataset(self._ids, coords)


# --------------------------------------------------------------------------
# blobs


@dataclass(frozen=True)
class BlobConfig:
    n_samples: int = 100
    centers: int = 3
    n_features: int = 2
    cluster_std: float = 0.5
    center_box: tuple = (0.0, 10.0)
    seed: int = 0
    min_center_separation: float | None = None  # defaults to 6 * cluster_std

    def validate(self):
        if int(self.centers) < 1:
            raise ConfigurationError(f"centers must be >= 1, got {self.centers}")
        if int(self.n_features) < 1:
            raise ConfigurationError(f"n_features must be >= 1, got {self.n_features}")
        if int(self.n_samples) < int(self.centers):
            raise ConfigurationError(
                f"n_samples ({self.n_samples}) must be >= centers ({self.centers})"
            )
        if not self.cluster_std > 0:
            raise ConfigurationError(f"cluster_std must be > 0, got {self.cluster_std}")
        lo, hi = self.center_box
        if not lo < hi:
            raise ConfigurationError(f"center_box must satisfy low < high, got {self.center_box}")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")

    def replace(self, **changes) -> "BlobConfig":
        from dataclasses import replace

        return replace(self, **changes)


def _draw_centers(rng, config, max_attempts=10_000):
    lo, hi = map(float, config.center_box)
    sep = config.min_center_separation
    if sep is None:
        sep = 6.0 * config.cluster_std
    d = int(config.n_features)
    centers = []
    attempts = 0
    while len(centers) < config.centers:
        attempts += 1
        if attempts > max_attempts:
            raise ConfigurationError(
                f"could not place {config.centers} centers with separation {sep} "
                f"inside center_box {config.center_box}"
            )
        c = rng.uniform(lo, hi, size=d)
        if all(np.linalg.norm(c - o) >= sep for o in centers):
            centers.append(c)
    return np.array(centers)


def generate_blobs(config: BlobConfig) -> tuple[Dataset, np.ndarray]:
    """Isotropic Gaussian blobs, split as evenly as possible among the centers.

    Returns the dataset (ids ``0..n-1`` in shuffled row order) and the true
    cluster label of every row. The output is a pure function of ``config``.
    """
    config.validate()
    rng = make_rng(config.seed, "blobs")
    centers = _draw_centers(rng, config)
    n, c = int(config.n_samples), int(config.centers)
    sizes = [n // c + (1 if i < n % c else 0) for i in range(c)]
    labels = np.repeat(np.arange(c), sizes)
    noise = rng.standard_normal((n, int(config.n_features)))
    coords = centers[labels] + config.cluster_std * noise
    order = rng.permutation(n)
    return Dataset(np.arange(n), coords[order]), labels[order]


def blob_centers(config: BlobConfig) -> np.ndarray:
    """The centers ``generate_blobs`` would use for ``config``."""
    config.validate()
    return _draw_centers(make_rng(config.seed, "blobs"), config)


# --------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class NormalizationParams:
    min: np.ndarray
    max: np.ndarray

    @property
    def range(self) -> np.ndarray:
        return self.max - self.min


def _minmax_apply(X, params):
    rng = params.range
    safe = np.where(rng > 0, rng, 1.0)
    out = (X - params.min) / safe
    out[:, rng <= 0] = 0.0
    return out


def _minmax_invert(X, params):
    return X * params.range + params.min


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Per-attribute rescaling to [0, 1]; constant attributes map to 0."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=float)
        self.data_min_ = X.min(axis=0)
        self.data_max_ = X.max(axis=0)
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def params_(self) -> NormalizationParams:
        check_is_fitted(self, "data_min_")
        return NormalizationParams(self.data_min_.copy(), self.data_max_.copy())

    def transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, dtype=float)
        return _minmax_apply(X, self.params_)

    def inverse_transform(self, X):
        check_is_fitted(self, "data_min_")
        X = check_array(X, dtype=float)
        return _minmax_invert(X, self.params_)


def minmax_normalize(ds: Dataset) -> tuple[Dataset, NormalizationParams]:
    if len(ds) == 0:
        raise ArgumentError("cannot normalize an empty dataset")
    params = NormalizationParams(ds.coords.min(axis=0), ds.coords.max(axis=0))
    return ds.with_coords(_minmax_apply(ds.coords, params)), params


def denormalize(ds: Dataset, params: NormalizationParams) -> Dataset:
    return ds.with_coords(_minmax_invert(ds.coords, params))


# --------------------------------------------------------------------------
# statistics


def pearson(a, b) -> float:
    """Sample Pearson correlation of two equal-length vectors."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) != len(b):
        raise ArgumentError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ArgumentError("pearson needs at least 2 observations")
    da = a - a.mean()
    db = b - b.mean()
    sa = np.sqrt(np.dot(da, da))
    sb = np.sqrt(np.dot(db, db))
    if sa == 0 or sb == 0:
        raise UndefinedCorrelationError("correlation is undefined for a constant vector")
    r = float(np.dot(da, db) / (sa * sb))
    return min(1.0, max(-1.0, r))


def standardize(a) -> np.ndarray:
    a = np.asarray(a, dtype=float).ravel()
    sd = a.std()
    if sd == 0:
        raise UndefinedCorrelationError("cannot standardize a constant vector")
    return (a - a.mean()) / sd


def generate_correlated_attribute(a, rho: float, seed) -> np.ndarray:
    """A new attribute with population correlation ``rho`` to ``a``.

    Built as ``rho * z(a) + sqrt(1 - rho**2) * e`` with ``z`` the
    standardization of ``a`` and ``e`` independent standard normal noise.
    """
    if not 0.0 < rho < 1.0:
        raise ArgumentError(f"rho must lie in (0, 1), got {rho}")
    z = standardize(a)
    noise = make_rng(seed, "correlated-attribute").standard_normal(len(z))
    return rho * z + np.sqrt(1.0 - rho * rho) * noise


# --------------------------------------------------------------------------
# geometry


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull_2d(points) -> list[int]:
    """Counter-clockwise hull vertex indices (Andrew's monotone chain).

    Points lying on a hull edge are not reported as vertices.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise DegenerateHullError("convex_hull_2d expects 2-D points")
    if len(P) < 3:
        raise DegenerateHullError(f"need at least 3 points, got {len(P)}")
    order = sorted(range(len(P)), key=lambda i: (P[i, 0], P[i, 1], i))

    def half(indices):
        chain = []
        for i in indices:
            while len(chain) >= 2 and _cross(P[chain[-2]], P[chain[-1]], P[i]) <= 0:
                chain.pop()
            chain.append(i)
        return chain

    lower = half(order)
    upper = half(reversed(order))
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHullError("all points are collinear")
    return hull


# --------------------------------------------------------------------------
# CSV


def write_csv(ds: Dataset, path, labels: Sequence | None = None) -> None:
    path = Path(path)
    header = ["id"] + [f"x{j}" for j in range(ds.dim)]
    if labels is not None:
        header.append("label")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p, (i, row) in enumerate(zip(ds.ids, ds.coords)):
            cells = [str(int(i))] + ["%.17g" % v for v in row]
            if labels is not None:
                cells.append(str(int(labels[p])))
            w.writerow(cells)


def read_csv(path) -> tuple[Dataset, np.ndarray | None]:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "id":
        raise ArgumentError(f"{path}: missing 'id,x0,...' header")
    header = rows[0]
    has_label = header[-1] == "label"
    d = len(header) - 1 - int(has_label)
    body = rows[1:]
    ids = [int(r[0]) for r in body]
    coords = np.array([[float(v) for v in r[1 : 1 + d]] for r in body], dtype=float).reshape(-1, d)
    labels = np.array([int(r[-1]) for r in body], dtype=int) if has_label else None
    return Dataset(ids, coords), labels
