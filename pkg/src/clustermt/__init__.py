"""Metamorphic testing of clustering systems."""

from .clusterers import (
    DBSCAN,
    NOISE,
    SYSTEMS,
    Agglomerative,
    ClusteringOutcome,
    ClusterParams,
    FarthestFirst,
    GaussianMixtureEM,
    InitSpec,
    KMeans,
    XMeans,
    run_system,
)
from .data import BlobConfig, Dataset, generate_blobs
from .harness import CampaignSummary, TrialRecord, align_labels, compute_rp, run_campaign, run_trial
from .patterns import PatternLabel, classify_pattern
from .relations import MR_IDS, MRCase, is_applicable
from .selection import SelectionScheme, select_system

__version__ = "0.1.0"

__all__ = [
    "KMeans", "XMeans", "GaussianMixtureEM", "Agglomerative", "FarthestFirst", "DBSCAN",
    "NOISE", "SYSTEMS", "ClusteringOutcome", "ClusterParams", "InitSpec", "run_system",
    "BlobConfig", "Dataset", "generate_blobs",
    "CampaignSummary", "TrialRecord", "align_labels", "compute_rp", "run_campaign", "run_trial",
    "PatternLabel", "classify_pattern", "MR_IDS", "MRCase", "is_applicable",
    "SelectionScheme", "select_system",
]
