import numpy as np

from .._rng import make_rng
from .base import BaseClusterer, compact_labels, squared_distances


def lloyd(W, centers, max_iter=500):
    """Plain Lloyd iteration on working coordinates.

    Returns ``(labels, centers, iterations, sse_history)``. ``sse_history``
    holds the within-cluster SSE after every assignment step. A cluster that
    loses all its members keeps its previous centroid.
    """
    C = np.array(centers, dtype=float, copy=True)
    n = len(W)
    labels = None
    history = []
    iterations = 0
    for _ in range(max_iter):
        d2 = squared_distances(W, C)
        new = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        updated = C.copy()
        for j in range(len(C)):
            members = W[labels == j]
            if len(members):
                updated[j] = members.mean(axis=0)
        iterations += 1
        if np.array_equal(updated, C):
            break
        C = updated
    return labels, C, iterations, history


def sse(W, labels, centers):
    return float(sum(np.sum((W[labels == j] - c) ** 2) for j, c in enumerate(centers)))


class KMeans(BaseClusterer):
    """Lloyd's k-means with random or explicit starting centroids.

    Parameters
    ----------
    n_clusters : int
    init : "random" or array-like of shape (n_clusters, n_features)
        Starting centroids in input coordinates, or ``"random"`` to draw
        ``n_clusters`` distinct data points from ``random_state``.
    normalize : bool
        Run on min-max normalized coordinates. Centroids are always reported
        in input coordinates.
    """

    def __init__(self, n_clusters=3, init="random", normalize=True, max_iter=500, random_state=0):
        self.n_clusters = n_clusters
        self.init = init
        self.normalize = normalize
        self.max_iter = max_iter
        self.random_state = random_state

    def _initial_centers(self, W, k):
        if isinstance(self.init, str):
            if self.init != "random":
                raise ValueError(f"unknown init {self.init!r}")
            rows = make_rng(self.random_state, "kmeans-init").choice(len(W), size=k, replace=False)
            return W[rows]
        C = self._working(np.atleast_2d(np.asarray(self.init, dtype=float)))
        if C.shape != (k, W.shape[1]):
            raise ValueError(f"init has shape {C.shape}, expected {(k, W.shape[1])}")
        return C

    def fit(self, X, y=None):
        X, W = self._to_working(X)
        k = self._check_k(self.n_clusters, len(W))
        C0 = self._initial_centers(W, k)
        labels, C, it, history = lloyd(W, C0, self.max_iter)
        labels, C = compact_labels(labels, C)
        self.labels_ = labels
        self.working_centers_ = C
        self.cluster_centers_ = self._from_working(C)
        self.n_iter_ = it
        self.sse_history_ = history
        self.inertia_ = sse(W, labels, C)
        return self

    def predict(self, X):
        W = self._working(X)
        return np.argmin(squared_distances(W, self.working_centers_), axis=1)
