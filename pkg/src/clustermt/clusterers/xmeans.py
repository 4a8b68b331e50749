import math

import numpy as np

from .._rng import make_rng
from .base import BaseClusterer, compact_labels, squared_distances
from .kmeans import lloyd

_VARIANCE_FLOOR = 1e-12


def spherical_bic(points, labels, centers):
    """BIC of a hard-assigned mixture of identical-variance spherical Gaussians.

    The shared variance is the maximum-likelihood estimate SSE / (R * d) and
    the model has ``K * (d + 1)`` free parameters.
    """
    points = np.asarray(points, dtype=float)
    R, d = points.shape
    K = len(centers)
    resid = points - np.asarray(centers)[labels]
    var = max(float(np.sum(resid * resid)) / (R * d), _VARIANCE_FLOOR)
    counts = np.bincount(labels, minlength=K)
    counts = counts[counts > 0]
    loglik = float(np.sum(counts * np.log(counts / R)))
    loglik -= 0.5 * R * d * math.log(2 * math.pi * var)
    loglik -= 0.5 * float(np.sum(resid * resid)) / var
    return loglik - 0.5 * K * (d + 1) * math.log(R)


def _principal_offset(points):
    cov = np.atleast_2d(np.cov(points.T, bias=True))
    vals, vecs = np.linalg.eigh(cov)
    lam = vals[-1]
    if not lam > 0:
        return None
    return math.sqrt(lam) * vecs[:, -1]


class XMeans(BaseClusterer):
    """k-means that grows k by BIC-tested two-way splits within [k_min, k_max].

    Child centroids of a split start one standard deviation either side of
    the parent along the cluster's principal axis, so the split test uses no
    randomness and does not depend on row order.
    """

    def __init__(self, k_min=2, k_max=3, init="random", normalize=True, max_iter=500, random_state=0):
        self.k_min = k_min
        self.k_max = k_max
        self.init = init
        self.normalize = normalize
        self.max_iter = max_iter
        self.random_state = random_state

    def _try_split(self, pts, center):
        if len(pts) < 4:
            return None
        offset = _principal_offset(pts)
        if offset is None:
            return None
        child_labels, children, _, _ = lloyd(pts, np.stack([center - offset, center + offset]), self.max_iter)
        if len(np.unique(child_labels)) < 2:
            return None
        parent = spherical_bic(pts, np.zeros(len(pts), dtype=int), center[None, :])
        child = spherical_bic(pts, child_labels, children)
        return parent, child, children

    def fit(self, X, y=None):
        X, W = self._to_working(X)
        n = len(W)
        k_min = self._check_k(self.k_min, n)
        k_max = self._check_k(self.k_max, n)
        if k_min > k_max:
            raise ValueError(f"k_min ({k_min}) > k_max ({k_max})")
        if isinstance(self.init, str):
            rows = make_rng(self.random_state, "kmeans-init").choice(n, size=k_min, replace=False)
            C0 = W[rows]
        else:
            C0 = self._working(np.atleast_2d(np.asarray(self.init, dtype=float)))
            if C0.shape != (k_min, W.shape[1]):
                raise ValueError(f"init has shape {C0.shape}, expected {(k_min, W.shape[1])}")
        labels, C, total_iter, _ = lloyd(W, C0, self.max_iter)
        labels, C = compact_labels(labels, C)
        decisions = []
        while len(C) < k_max:
            proposals = []
            for j, center in enumerate(C):
                result = self._try_split(W[labels == j], center)
                if result is None:
                    continue
                parent, child, children = result
                decisions.append({"k": len(C), "cluster": j, "parent_bic": parent, "child_bic": child})
                if child > parent:
                    proposals.append((child - parent, j, children))
            if not proposals:
                break
            proposals.sort(key=lambda p: (-p[0], p[1]))
            accepted = {j: children for _, j, children in proposals[: k_max - len(C)]}
            for d in decisions:
                if d["k"] == len(C):
                    d["accepted"] = d["cluster"] in accepted
            new_centers = []
            for j, center in enumerate(C):
                if j in accepted:
                    new_centers.extend(accepted[j])
                else:
                    new_centers.append(center)
            labels, C, it, _ = lloyd(W, np.array(new_centers), self.max_iter)
            labels, C = compact_labels(labels, C)
            total_iter += it
        for d in decisions:
            d.setdefault("accepted", False)
        self.labels_ = labels
        self.working_centers_ = C
        self.cluster_centers_ = self._from_working(C)
        self.n_iter_ = total_iter
        self.bic_decisions_ = decisions
        return self

    def predict(self, X):
        W = self._working(X)
        return np.argmin(squared_distances(W, self.working_centers_), axis=1)
