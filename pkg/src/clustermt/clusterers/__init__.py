"""The six subject clustering systems.

Each system is available as a scikit-learn style estimator (``fit``,
``labels_``, ``get_params``) and as a function taking a :class:`Dataset` and
returning a :class:`ClusteringOutcome`.
"""

from .agglomerative import Agglomerative
from .api import agglomerative, dbscan, em_cluster, farthest_first, kmeans, run_system, xmeans
from .base import ITERATIVE, NOISE, SYSTEMS, ClusteringOutcome, ClusterParams, InitSpec, system_kind
from .dbscan import DBSCAN
from .em import GaussianMixtureEM
from .farthest_first import FarthestFirst
from .kmeans import KMeans
from .xmeans import XMeans

__all__ = [
    "Agglomerative", "DBSCAN", "FarthestFirst", "GaussianMixtureEM", "KMeans", "XMeans",
    "agglomerative", "dbscan", "em_cluster", "farthest_first", "kmeans", "run_system", "xmeans",
    "ITERATIVE", "NOISE", "SYSTEMS", "ClusteringOutcome", "ClusterParams", "InitSpec", "system_kind",
]
