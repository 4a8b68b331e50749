from collections import deque

import numpy as np

from .base import NOISE, BaseClusterer, pairwise_distances


def density_clusters(W, eps, min_pts, ids=None):
    """DBSCAN labels and the core-point mask.

    A point is core when at least ``min_pts`` points (itself included) lie
    within distance ``eps``. Clusters are discovered by scanning points in
    ascending id order, so a border point reachable from two clusters joins
    the one whose lowest core id is smaller.
    """
    n = len(W)
    ids = np.arange(n) if ids is None else np.asarray(ids)
    adj = pairwise_distances(W) <= eps
    core = adj.sum(axis=1) >= min_pts
    labels = np.full(n, NOISE)
    cluster = 0
    for p in np.argsort(ids, kind="stable"):
        if labels[p] != NOISE or not core[p]:
            continue
        labels[p] = cluster
        queue = deque([p])
        while queue:
            q = queue.popleft()
            if not core[q]:
                continue
            for r in np.flatnonzero(adj[q]):
                if labels[r] == NOISE:
                    labels[r] = cluster
                    queue.append(r)
        cluster += 1
    return labels, core


class DBSCAN(BaseClusterer):
    def __init__(self, eps=0.1, min_pts=8, normalize=True):
        self.eps = eps
        self.min_pts = min_pts
        self.normalize = normalize

    def fit(self, X, y=None, ids=None):
        if not self.eps > 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if int(self.min_pts) < 1:
            raise ValueError(f"min_pts must be >= 1, got {self.min_pts}")
        X, W = self._to_working(X)
        self.labels_, self.core_sample_mask_ = density_clusters(W, self.eps, int(self.min_pts), ids)
        return self
