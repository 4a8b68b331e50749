import numpy as np

from .base import BaseClusterer, pairwise_distances


def _lance_williams(linkage, d_ki, d_kj, n_i, n_j):
    if linkage == "single":
        return np.minimum(d_ki, d_kj)
    if linkage == "complete":
        return np.maximum(d_ki, d_kj)
    return (n_i * d_ki + n_j * d_kj) / (n_i + n_j)


def agglomerate(W, n_clusters, linkage="average", ids=None):
    """Bottom-up merging until ``n_clusters`` remain.

    Equal linkage distances are resolved by the pair whose smallest member
    ids are lexicographically lowest, which makes the result independent of
    row order. Returns ``(labels, merges)``; clusters are numbered by
    ascending smallest member id.
    """
    n = len(W)
    ids = np.arange(n) if ids is None else np.asarray(ids)
    D = pairwise_distances(W)
    np.fill_diagonal(D, np.inf)
    active = np.ones(n, dtype=bool)
    size = np.ones(n)
    min_id = ids.astype(float).copy()
    members = [[i] for i in range(n)]
    merges = []
    for _ in range(n - n_clusters):
        m = D.min()
        rows, cols = np.nonzero(np.triu(D == m, 1))
        a, b = min_id[rows], min_id[cols]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        pick = np.lexsort((hi, lo))[0]
        i, j = int(rows[pick]), int(cols[pick])
        merges.append((int(min(min_id[i], min_id[j])), int(max(min_id[i], min_id[j])), float(m)))
        D[i, :] = _lance_williams(linkage, D[i, :], D[j, :], size[i], size[j])
        D[:, i] = D[i, :]
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        active[j] = False
        size[i] += size[j]
        min_id[i] = min(min_id[i], min_id[j])
        members[i].extend(members[j])
        members[j] = []
    survivors = sorted(np.flatnonzero(active), key=lambda s: min_id[s])
    labels = np.empty(n, dtype=int)
    for label, s in enumerate(survivors):
        labels[members[s]] = label
    return labels, merges


class Agglomerative(BaseClusterer):
    """Agglomerative nesting with a dendrogram cut at ``n_clusters``."""

    def __init__(self, n_clusters=3, linkage="average", normalize=True):
        self.n_clusters = n_clusters
        self.linkage = linkage
        self.normalize = normalize

    def fit(self, X, y=None, ids=None):
        X, W = self._to_working(X)
        k = self._check_k(self.n_clusters, len(W))
        if self.linkage not in ("single", "complete", "average"):
            raise ValueError(f"unknown linkage {self.linkage!r}")
        if ids is not None and len(ids) != len(W):
            raise ValueError("ids must match the number of rows")
        self.labels_, self.merges_ = agglomerate(W, k, self.linkage, ids)
        return self
