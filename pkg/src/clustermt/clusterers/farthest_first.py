import numpy as np

from .._rng import make_rng
from .base import BaseClusterer, pairwise_distances


def traverse(W, start, ids=None):
    """Farthest-first ordering of every row of ``W`` beginning at ``start``.

    Returns ``(order, parent, radius)`` where ``parent[i]`` is the row of the
    earliest-labelled nearest predecessor of row ``i`` and ``radius[i]`` the
    distance to it (``-1`` and ``0`` for the start point). Distance ties
    go to the lowest point id.
    """
    n = len(W)
    ids = np.arange(n) if ids is None else np.asarray(ids)
    D = pairwise_distances(W)
    order = [int(start)]
    chosen = np.zeros(n, dtype=bool)
    chosen[start] = True
    nearest = np.full(n, int(start))
    mind = D[start].copy()
    parent = np.full(n, -1)
    radius = np.zeros(n)
    for _ in range(n - 1):
        cand = np.where(chosen, -np.inf, mind)
        best = cand.max()
        ties = np.flatnonzero(cand == best)
        nxt = int(ties[np.argmin(ids[ties])])
        parent[nxt] = nearest[nxt]
        radius[nxt] = mind[nxt]
        order.append(nxt)
        chosen[nxt] = True
        closer = D[nxt] < mind
        mind = np.where(closer, D[nxt], mind)
        nearest = np.where(closer, nxt, nearest)
    return np.array(order), parent, radius


class FarthestFirst(BaseClusterer):
    """Farthest-first traversal clustering.

    The first ``n_clusters`` points of the traversal become centers and every
    point joins its closest center. ``init`` is ``"random"`` or the row
    index of the starting point.
    """

    def __init__(self, n_clusters=3, init="random", normalize=True, random_state=0):
        self.n_clusters = n_clusters
        self.init = init
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y=None, ids=None):
        X, W = self._to_working(X)
        n = len(W)
        k = self._check_k(self.n_clusters, n)
        if isinstance(self.init, str):
            start = int(make_rng(self.random_state, "ff-start").integers(n))
        else:
            start = int(self.init)
            if not 0 <= start < n:
                raise ValueError(f"start row {start} out of range")
        order, parent, radius = traverse(W, start, ids)
        centers = order[:k]
        d = pairwise_distances(W, W[centers])
        self.labels_ = np.argmin(d, axis=1)
        self.center_indices_ = centers
        self.cluster_centers_ = X[centers].copy()
        self.traversal_ = order
        self.parent_ = parent
        self.radius_ = radius
        return self

    def predict(self, X):
        W = self._working(X)
        centers = self._working(self.cluster_centers_)
        return np.argmin(pairwise_distances(W, centers), axis=1)
