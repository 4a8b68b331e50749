"""Dataset-level entry points returning :class:`ClusteringOutcome` records."""

from __future__ import annotations

import numpy as np

from ..data import Dataset
from ..exceptions import ArgumentError
from .agglomerative import Agglomerative
from .base import ClusteringOutcome, ClusterParams, InitSpec, system_kind
from .dbscan import DBSCAN
from .em import GaussianMixtureEM
from .farthest_first import FarthestFirst
from .kmeans import KMeans
from .xmeans import XMeans

DEFAULT_PARAMS = ClusterParams()


def _check_k(k, ds):
    if k is None or int(k) < 1:
        raise ArgumentError(f"k must be a positive integer, got {k}")
    if int(k) > len(ds):
        raise ArgumentError(f"k ({k}) exceeds dataset size ({len(ds)})")
    return int(k)


def _explicit_rows(ds, init, expected=None):
    pos = ds.position_of()
    missing = [i for i in init.centroid_ids if i not in pos]
    if missing:
        raise ArgumentError(f"centroid ids not in dataset: {missing}")
    if expected is not None and len(init.centroid_ids) != expected:
        raise ArgumentError(f"expected {expected} centroid ids, got {len(init.centroid_ids)}")
    return [pos[i] for i in init.centroid_ids]


def kmeans(ds: Dataset, k: int, init: InitSpec | None = None, params: ClusterParams = DEFAULT_PARAMS):
    k = _check_k(k, ds)
    init = init or InitSpec()
    start = ds.coords[_explicit_rows(ds, init, k)] if init.is_explicit else "random"
    est = KMeans(k, init=start, normalize=params.normalize, max_iter=params.max_iterations,
                 random_state=init.seed).fit(ds.coords)
    return ClusteringOutcome(
        ids=ds.ids,
        assignments=est.labels_,
        centroids=est.cluster_centers_,
        iterations=est.n_iter_,
        model={"sse_history": est.sse_history_, "inertia": est.inertia_},
    )


def xmeans(ds: Dataset, k_min: int, k_max: int, init: InitSpec | None = None,
           params: ClusterParams = DEFAULT_PARAMS):
    k_min, k_max = _check_k(k_min, ds), _check_k(k_max, ds)
    if k_min > k_max:
        raise ArgumentError(f"k_min ({k_min}) > k_max ({k_max})")
    init = init or InitSpec()
    start = ds.coords[_explicit_rows(ds, init, k_min)] if init.is_explicit else "random"
    est = XMeans(k_min, k_max, init=start, normalize=params.normalize,
                 max_iter=params.max_iterations, random_state=init.seed).fit(ds.coords)
    return ClusteringOutcome(
        ids=ds.ids,
        assignments=est.labels_,
        centroids=est.cluster_centers_,
        iterations=est.n_iter_,
        model={"bic_decisions": est.bic_decisions_},
    )


def em_cluster(ds: Dataset, k: int | None = None, params: ClusterParams = DEFAULT_PARAMS, seed: int = 0):
    if k is not None:
        k = _check_k(k, ds)
    est = GaussianMixtureEM(k, normalize=params.normalize, max_iter=params.max_iterations,
                            tol=params.em_tolerance, random_state=seed).fit(ds.coords)
    return ClusteringOutcome(
        ids=ds.ids,
        assignments=est.labels_,
        centroids=est.cluster_centers_,
        iterations=est.n_iter_,
        model={
            "weights": est.weights_,
            "means": est.means_,
            "variances": est.variances_,
            "responsibilities": est.responsibilities_,
            "log_likelihood_history": est.log_likelihood_history_,
            "bic_by_k": est.bic_by_k_,
        },
    )


def agglomerative(ds: Dataset, k: int, linkage: str = "average", params: ClusterParams = DEFAULT_PARAMS):
    k = _check_k(k, ds)
    est = Agglomerative(k, linkage=linkage, normalize=params.normalize).fit(ds.coords, ids=ds.ids)
    return ClusteringOutcome(ids=ds.ids, assignments=est.labels_, model={"merges": est.merges_})


def farthest_first(ds: Dataset, k: int, init: InitSpec | None = None, params: ClusterParams = DEFAULT_PARAMS):
    """Farthest-first clustering; an explicit init fixes the start point to its first id."""
    k = _check_k(k, ds)
    init = init or InitSpec()
    start = _explicit_rows(ds, init)[0] if init.is_explicit else "random"
    est = FarthestFirst(k, init=start, normalize=params.normalize, random_state=init.seed)
    est.fit(ds.coords, ids=ds.ids)
    ids = ds.ids
    parent = {int(ids[i]): (int(ids[p]) if p >= 0 else None) for i, p in enumerate(est.parent_)}
    radius = {int(ids[i]): float(r) for i, r in enumerate(est.radius_)}
    return ClusteringOutcome(
        ids=ids,
        assignments=est.labels_,
        centroids=est.cluster_centers_,
        model={
            "traversal": [int(ids[i]) for i in est.traversal_],
            "center_ids": [int(ids[i]) for i in est.center_indices_],
            "parent": parent,
            "radius": radius,
        },
    )


def dbscan(ds: Dataset, eps: float = 0.1, min_pts: int = 8, params: ClusterParams = DEFAULT_PARAMS):
    if not eps > 0:
        raise ArgumentError(f"eps must be > 0, got {eps}")
    if int(min_pts) < 1:
        raise ArgumentError(f"min_pts must be >= 1, got {min_pts}")
    est = DBSCAN(eps, int(min_pts), normalize=params.normalize).fit(ds.coords, ids=ds.ids)
    return ClusteringOutcome(
        ids=ds.ids,
        assignments=est.labels_,
        model={"core_ids": [int(i) for i in ds.ids[est.core_sample_mask_]]},
    )


def run_system(kind: str, ds: Dataset, params: ClusterParams = DEFAULT_PARAMS,
               init: InitSpec | None = None, k: int | None = None) -> ClusteringOutcome:
    """Dispatch to one of the six systems.

    ``k`` overrides ``params.k``; for XM the search range is ``[k-1, k]``
    unless ``params.k_min``/``params.k_max`` are set.
    """
    kind = system_kind(kind)
    init = init or InitSpec()
    k = k if k is not None else (params.k if params.k is not None else 3)
    if kind == "KM":
        return kmeans(ds, k, init, params)
    if kind == "XM":
        k_max = params.k_max if params.k_max is not None else k
        k_min = params.k_min if params.k_min is not None else max(1, k - 1)
        return xmeans(ds, k_min, k_max, init, params)
    if kind == "EM":
        return em_cluster(ds, params.k, params, seed=init.seed)
    if kind == "AN":
        return agglomerative(ds, k, params.linkage, params)
    if kind == "FF":
        return farthest_first(ds, k, init, params)
    return dbscan(ds, params.eps, params.min_pts, params)
