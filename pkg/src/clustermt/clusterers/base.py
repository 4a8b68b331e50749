"""Shared types and estimator plumbing for the subject clustering systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.utils.validation import check_array

from ..data import NormalizationParams, _minmax_apply, _minmax_invert
from ..exceptions import ArgumentError, ConfigurationError

NOISE = -1

SYSTEMS = ("KM", "XM", "EM", "AN", "FF", "DS")
ITERATIVE = frozenset({"KM", "XM", "EM"})


def system_kind(name: str) -> str:
    kind = str(name).upper()
    if kind not in SYSTEMS:
        raise ConfigurationError(f"unknown clustering system {name!r}; expected one of {SYSTEMS}")
    return kind


@dataclass(frozen=True)
class ClusteringOutcome:
    ids: np.ndarray
    assignments: np.ndarray
    centroids: np.ndarray | None = None
    iterations: int = 0
    model: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=int)
        object.__setattr__(self, "assignments", a)
        object.__setattr__(self, "ids", np.asarray(self.ids, dtype=np.int64))
        if len(self.ids) != len(a):
            raise ArgumentError("ids and assignments differ in length")
        if np.any(a < NOISE):
            raise ArgumentError("labels must be NOISE (-1) or a cluster index")
        k = self.n_clusters
        if self.centroids is not None and len(self.centroids) != k:
            raise ArgumentError(f"{len(self.centroids)} centroids for {k} clusters")

    @property
    def n_clusters(self) -> int:
        labels = self.assignments[self.assignments != NOISE]
        return int(labels.max()) + 1 if len(labels) else 0

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.assignments == NOISE))

    def label_map(self) -> dict[int, int]:
        return {int(i): int(l) for i, l in zip(self.ids, self.assignments)}


@dataclass(frozen=True)
class InitSpec:
    """How partitional systems pick their starting centroids."""

    mode: str = "seeded-random"
    centroid_ids: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("seeded-random", "explicit-centroid-ids"):
            raise ConfigurationError(f"unknown init mode {self.mode!r}")
        if self.mode == "explicit-centroid-ids":
            if not self.centroid_ids:
                raise ConfigurationError("explicit init needs centroid_ids")
            object.__setattr__(self, "centroid_ids", tuple(int(i) for i in self.centroid_ids))

    @classmethod
    def explicit(cls, ids, seed=0):
        return cls("explicit-centroid-ids", tuple(ids), seed)

    @property
    def is_explicit(self) -> bool:
        return self.mode == "explicit-centroid-ids"


@dataclass(frozen=True)
class ClusterParams:
    k: int | None = None
    k_min: int | None = None
    k_max: int | None = None
    linkage: str = "average"
    eps: float = 0.1
    min_pts: int = 8
    normalize: bool = True
    max_iterations: int = 500
    em_tolerance: float = 1e-6

    def __post_init__(self):
        if self.k is not None and self.k < 1:
            raise ConfigurationError(f"k must be positive, got {self.k}")
        if self.k_min is not None and self.k_max is not None and self.k_min > self.k_max:
            raise ConfigurationError(f"k_min ({self.k_min}) > k_max ({self.k_max})")
        if self.linkage not in ("single", "complete", "average"):
            raise ConfigurationError(f"unknown linkage {self.linkage!r}")
        if not self.eps > 0:
            raise ConfigurationError(f"eps must be > 0, got {self.eps}")
        if self.min_pts < 1:
            raise ConfigurationError(f"min_pts must be >= 1, got {self.min_pts}")
        if self.max_iterations < 1:
            raise ConfigurationError("max_iterations must be positive")
        if not self.em_tolerance > 0:
            raise ConfigurationError("em_tolerance must be positive")

    def replace(self, **changes) -> "ClusterParams":
        from dataclasses import replace

        return replace(self, **changes)


def pairwise_distances(A, B=None) -> np.ndarray:
    """Euclidean distances computed from explicit differences.

    Each entry depends only on its two rows, so the value for a pair does not
    change when the dataset is reordered.
    """
    B = A if B is None else B
    diff = A[:, None, :] - B[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def squared_distances(A, B) -> np.ndarray:
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


class BaseClusterer(ClusterMixin, BaseEstimator):
    """Estimator base: input validation and the embedded min-max step."""

    def _validate_X(self, X):
        return check_array(X, dtype=float, ensure_min_samples=1)

    def _to_working(self, X):
        """Fit the embedded normalization and return working coordinates."""
        X = self._validate_X(X)
        self.n_features_in_ = X.shape[1]
        if getattr(self, "normalize", False):
            self.norm_params_ = NormalizationParams(X.min(axis=0), X.max(axis=0))
            return X, _minmax_apply(X, self.norm_params_)
        self.norm_params_ = None
        return X, X.copy()

    def _working(self, X):
        X = self._validate_X(X)
        if self.norm_params_ is None:
            return X
        return _minmax_apply(X, self.norm_params_)

    def _from_working(self, W):
        if self.norm_params_ is None:
            return np.array(W, dtype=float, copy=True)
        return _minmax_invert(np.asarray(W, dtype=float), self.norm_params_)

    @staticmethod
    def _check_k(k, n):
        if k is None or int(k) < 1:
            raise ArgumentError(f"k must be a positive integer, got {k}")
        if int(k) > n:
            raise ArgumentError(f"k ({k}) exceeds the number of points ({n})")
        return int(k)


def compact_labels(labels: np.ndarray, centers: np.ndarray | None = None):
    """Drop unused labels, renumbering the survivors in ascending order."""
    used = np.unique(labels[labels != NOISE])
    remap = np.full(int(labels.max(initial=0)) + 1, NOISE, dtype=int)
    remap[used] = np.arange(len(used))
    out = np.where(labels == NOISE, NOISE, remap[np.maximum(labels, 0)])
    if centers is None:
        return out, None
    return out, np.asarray(centers)[used]
