"""The eleven generic metamorphic relations as dataset transformations.

Each ``mr*`` function builds an :class:`MRCase`: the source dataset, its
follow-up, the identity map between them, any added point ids and a
declarative description of the expected follow-up labels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ._rng import make_rng
from .clusterers.base import NOISE, ClusteringOutcome, InitSpec, system_kind
from .data import BlobConfig, Dataset, convex_hull_2d, generate_blobs, generate_correlated_attribute, read_csv, write_csv
from .exceptions import ApplicabilityError, ArgumentError, DegenerateHullError

MR_IDS = ("MR1.1", "MR1.2", "MR2.1", "MR2.2", "MR3.1", "MR3.2", "MR4.1", "MR4.2", "MR5.1", "MR5.2", "MR6")

SAME_AS_SOURCE = "SAME-AS-SOURCE"
PARENT_CLUSTER = "PARENT-CLUSTER"
MIRROR_GROUP = "MIRROR-GROUP"
OUTLIER_ISOLATED = "OUTLIER-ISOLATED"

_NOT_APPLICABLE = {
    "MR1.2": {"EM", "AN", "DS"},
    "MR2.1": {"AN", "DS"},
}


def mr_id(name: str) -> str:
    """Canonical relation id: ``"mr1.1"`` -> ``"MR1.1"``."""
    key = str(name).strip().upper()
    if not key.startswith("MR"):
        key = "MR" + key
    if key not in MR_IDS:
        raise ArgumentError(f"unknown metamorphic relation {name!r}")
    return key


def is_applicable(mr: str, system: str) -> bool:
    return system_kind(system) not in _NOT_APPLICABLE.get(mr_id(mr), ())


def applicability_matrix() -> dict[str, dict[str, bool]]:
    from .clusterers.base import SYSTEMS

    return {m: {s: is_applicable(m, s) for s in SYSTEMS} for m in MR_IDS}


def check_applicable(mr: str, system: str) -> None:
    if not is_applicable(mr, system):
        raise ApplicabilityError(f"{mr_id(mr)} not applicable to {system_kind(system)}")


@dataclass(frozen=True)
class Expectation:
    """Expected follow-up labels.

    Mapped points always keep their source cluster. ``added`` describes each
    added point: ``{"parent_label": l}`` for PARENT-CLUSTER,
    ``{"mirror_of": source_id}`` for MIRROR-GROUP, ``{}`` for the outlier.
    """

    rule: str = SAME_AS_SOURCE
    added: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MRCase:
    mr_id: str
    source: Dataset
    followup: Dataset
    old_to_new: dict
    added_ids: tuple = ()
    expectation: Expectation = field(default_factory=Expectation)
    transform_params: dict = field(default_factory=dict)

    def __post_init__(self):
        images = list(self.old_to_new.values())
        if set(self.old_to_new) != set(int(i) for i in self.source.ids):
            raise ArgumentError("old_to_new must be total on source ids")
        if len(set(images)) != len(images):
            raise ArgumentError("old_to_new must be injective")
        fu = set(int(i) for i in self.followup.ids)
        added = set(self.added_ids)
        if set(images) & added or set(images) | added != fu:
            raise ArgumentError("follow-up ids must be the disjoint union of mapped and added ids")


def _identity_map(ds):
    return {int(i): int(i) for i in ds.ids}


def _fresh_ids(ds, count):
    start = int(ds.ids.max()) + 1 if len(ds) else 0
    return np.arange(start, start + count)


def _reference_points(source, outcome):
    """Per-cluster reference point: returned centroid when available, else member mean."""
    labels = outcome.assignments
    k = outcome.n_clusters
    if outcome.centroids is not None:
        return np.asarray(outcome.centroids, dtype=float)
    return np.array([source.coords[labels == j].mean(axis=0) for j in range(k)])


def _check_outcome(source, outcome):
    if not np.array_equal(source.ids, outcome.ids):
        raise ArgumentError("source outcome does not correspond to the source dataset")


def default_n_add(n):
    return max(1, int(round(0.05 * n)))


# --------------------------------------------------------------------------
# MR1: object order


def _shuffle(source, rng):
    n = len(source)
    if n < 2:
        raise ArgumentError("shuffling needs at least 2 points")
    perm = rng.permutation(n)
    while np.array_equal(perm, np.arange(n)):
        perm = rng.permutation(n)
    return source.take(perm), perm


def mr1_1_shuffle(source: Dataset, seed) -> MRCase:
    followup, perm = _shuffle(source, make_rng(seed, "MR1.1"))
    return MRCase("MR1.1", source, followup, _identity_map(source),
                  transform_params={"permutation": perm.tolist()})


def mr1_2_shuffle_fixed_centroids(source: Dataset, k: int, seed, system: str | None = None):
    """Shuffle while fixing the starting centroids to the same point ids.

    Returns the case and a ``(source_init, followup_init)`` pair.
    """
    if system is not None:
        check_applicable("MR1.2", system)
    if not 1 <= k <= len(source):
        raise ArgumentError(f"k ({k}) must lie in [1, {len(source)}]")
    rng = make_rng(seed, "MR1.2")
    followup, perm = _shuffle(source, rng)
    ids = tuple(int(i) for i in rng.choice(source.ids, size=k, replace=False))
    init = InitSpec.explicit(ids, seed=int(seed) % 2**64)
    case = MRCase("MR1.2", source, followup, _identity_map(source),
                  transform_params={"permutation": perm.tolist(), "centroid_ids": list(ids)})
    return case, (init, init)


# --------------------------------------------------------------------------
# MR2: distinctness


def mr2_1_shrink(source: Dataset, source_outcome: ClusteringOutcome, shrink_fraction: float = 0.5,
                 clusters_to_shrink=None, seed=0) -> MRCase:
    """Move members of the chosen clusters ``shrink_fraction`` of the way to their centroid.

    With ``clusters_to_shrink=None`` a random non-empty subset of clusters is
    drawn from ``seed``.
    """
    _check_outcome(source, source_outcome)
    if source_outcome.centroids is None:
        raise ApplicabilityError("MR2.1 requires the system to return cluster centroids")
    if not 0.0 <= shrink_fraction <= 1.0:
        raise ArgumentError(f"shrink_fraction must lie in [0, 1], got {shrink_fraction}")
    k = source_outcome.n_clusters
    if clusters_to_shrink is None:
        rng = make_rng(seed, "MR2.1")
        size = int(rng.integers(1, k + 1))
        clusters_to_shrink = sorted(int(c) for c in rng.choice(k, size=size, replace=False))
    clusters_to_shrink = sorted(set(int(c) for c in clusters_to_shrink))
    if not clusters_to_shrink:
        raise ArgumentError("clusters_to_shrink must be non-empty")
    if any(not 0 <= c < k for c in clusters_to_shrink):
        raise ArgumentError(f"cluster labels must lie in [0, {k})")
    coords = source.coords.copy()
    centroids = np.asarray(source_outcome.centroids, dtype=float)
    for c in clusters_to_shrink:
        rows = source_outcome.assignments == c
        coords[rows] += shrink_fraction * (centroids[c] - coords[rows])
    return MRCase("MR2.1", source, source.with_coords(coords), _identity_map(source),
                  transform_params={"shrink_fraction": shrink_fraction, "clusters": clusters_to_shrink})


def mirror_dataset(source: Dataset, axis: int = 0) -> MRCase:
    """Append reflections of every point across ``axis`` (x -> -x by default)."""
    if source.dim != 2:
        raise ApplicabilityError("MR2.2 requires 2-D data")
    if np.any(source.coords <= 0):
        raise ArgumentError("MR2.2 source clusters must lie inside the positive quadrant")
    mirrored = source.coords.copy()
    mirrored[:, axis] = -mirrored[:, axis]
    new_ids = _fresh_ids(source, len(source))
    followup = Dataset(np.concatenate([source.ids, new_ids]), np.vstack([source.coords, mirrored]))
    added = {int(n): {"mirror_of": int(o)} for n, o in zip(new_ids, source.ids)}
    return MRCase("MR2.2", source, followup, _identity_map(source), tuple(int(i) for i in new_ids),
                  Expectation(MIRROR_GROUP, added), {"mirror_axis": axis, "quadrants": 1})


def mr2_2_mirror(source_config: BlobConfig, seed=None) -> MRCase:
    """Generate a positive-quadrant source from ``source_config`` and mirror it.

    ``seed`` overrides the config's seed when given.
    """
    if seed is not None:
        source_config = source_config.replace(seed=int(seed))
    if source_config.n_features != 2:
        raise ApplicabilityError("MR2.2 requires 2-D data")
    source, _ = generate_blobs(source_config)
    return mirror_dataset(source)


# --------------------------------------------------------------------------
# MR3: density


def _eligible_clusters(outcome):
    return [j for j in range(outcome.n_clusters) if np.any(outcome.assignments == j)]


def mr3_1_add_near_centroids(source: Dataset, source_outcome: ClusteringOutcome, n_add: int | None = None,
                             seed=0) -> MRCase:
    _check_outcome(source, source_outcome)
    n_add = default_n_add(len(source)) if n_add is None else int(n_add)
    if n_add < 1:
        raise ArgumentError("n_add must be >= 1")
    clusters = _eligible_clusters(source_outcome)
    if not clusters:
        raise ApplicabilityError("MR3.1 needs at least one source cluster")
    refs = _reference_points(source, source_outcome)
    rng = make_rng(seed, "MR3.1")
    new_ids = _fresh_ids(source, n_add)
    pts, added, parents = [], {}, []
    for nid in new_ids:
        c = int(rng.choice(clusters))
        rows = np.flatnonzero(source_outcome.assignments == c)
        r = int(rng.choice(rows))
        pts.append(0.5 * (refs[c] + source.coords[r]))
        added[int(nid)] = {"parent_label": c}
        parents.append(int(source.ids[r]))
    followup = Dataset(np.concatenate([source.ids, new_ids]), np.vstack([source.coords, pts]))
    return MRCase("MR3.1", source, followup, _identity_map(source), tuple(int(i) for i in new_ids),
                  Expectation(PARENT_CLUSTER, added), {"n_add": n_add, "spawned_from": parents})


def mr3_2_add_on_hull(source: Dataset, source_outcome: ClusteringOutcome, n_add: int | None = None,
                      seed=0) -> MRCase:
    _check_outcome(source, source_outcome)
    if source.dim != 2:
        raise ApplicabilityError("MR3.2 requires 2-D data")
    n_add = default_n_add(len(source)) if n_add is None else int(n_add)
    if n_add < 1:
        raise ArgumentError("n_add must be >= 1")
    hulls = {}
    for c in _eligible_clusters(source_outcome):
        member_coords = source.coords[source_outcome.assignments == c]
        try:
            hulls[c] = member_coords[convex_hull_2d(member_coords)]
        except DegenerateHullError:
            continue
    if not hulls:
        raise ApplicabilityError("MR3.2: no cluster has a proper convex hull")
    eligible = sorted(hulls)
    rng = make_rng(seed, "MR3.2")
    new_ids = _fresh_ids(source, n_add)
    pts, added = [], {}
    for nid in new_ids:
        c = int(rng.choice(eligible))
        hull = hulls[c]
        e = int(rng.integers(len(hull)))
        t = float(rng.uniform())
        a, b = hull[e], hull[(e + 1) % len(hull)]
        pts.append(a + t * (b - a))
        added[int(nid)] = {"parent_label": c}
    followup = Dataset(np.concatenate([source.ids, new_ids]), np.vstack([source.coords, pts]))
    return MRCase("MR3.2", source, followup, _identity_map(source), tuple(int(i) for i in new_ids),
                  Expectation(PARENT_CLUSTER, added), {"n_add": n_add})


# --------------------------------------------------------------------------
# MR4: attributes


def mr4_1_add_informative_attribute(source: Dataset, source_outcome: ClusteringOutcome,
                                    noise_code: float | None = None) -> MRCase:
    """Append the source cluster label as a new attribute.

    NOISE points have no label to encode; they raise unless ``noise_code``
    supplies the value to use for them.
    """
    _check_outcome(source, source_outcome)
    labels = source_outcome.assignments.astype(float)
    if np.any(source_outcome.assignments == NOISE):
        if noise_code is None:
            raise ApplicabilityError("MR4.1 label encoding is undefined for NOISE points")
        labels = np.where(source_outcome.assignments == NOISE, float(noise_code), labels)
    followup = source.with_coords(np.column_stack([source.coords, labels]))
    return MRCase("MR4.1", source, followup, _identity_map(source),
                  transform_params={"noise_code": noise_code})


def mr4_2_remove_redundant_attribute(blob_config: BlobConfig, rho: float = 0.8, seed=0) -> MRCase:
    """Source is (A, B, A') with A' correlated to A; the follow-up drops A'."""
    base, _ = generate_blobs(blob_config)
    a_prime = generate_correlated_attribute(base.coords[:, 0], rho, seed)
    source = base.with_coords(np.column_stack([base.coords, a_prime]))
    return MRCase("MR4.2", source, base, _identity_map(source),
                  transform_params={"rho": rho, "removed_attribute": base.dim})


# --------------------------------------------------------------------------
# MR5: coordinate system


def rotate(coords, theta_deg):
    t = math.radians(theta_deg)
    c, s = math.cos(t), math.sin(t)
    # row vector times [[cos, -sin], [sin, cos]]
    return coords @ np.array([[c, -s], [s, c]])


def mr5_1_rotate(source: Dataset, seed=0, theta: float | None = None) -> MRCase:
    if source.dim != 2:
        raise ApplicabilityError("MR5.1 requires 2-D data")
    if theta is None:
        theta = float(make_rng(seed, "MR5.1").uniform(0.0, 90.0))
    return MRCase("MR5.1", source, source.with_coords(rotate(source.coords, theta)), _identity_map(source),
                  transform_params={"theta_deg": theta})


def mr5_2_scale(source: Dataset, seed=0, scale: float | None = None) -> MRCase:
    if source.dim != 2:
        raise ApplicabilityError("MR5.2 requires 2-D data")
    if scale is None:
        scale = float(make_rng(seed, "MR5.2").uniform(0.2, 5.0))
    coords = source.coords @ np.diag([scale, scale])
    return MRCase("MR5.2", source, source.with_coords(coords), _identity_map(source),
                  transform_params={"s_a": scale, "s_b": scale})


# --------------------------------------------------------------------------
# MR6: outliers

OUTLIER_FACTOR = 5.0


def mr6_insert_outlier(source: Dataset, source_outcome: ClusteringOutcome, seed=0,
                       factor: float = OUTLIER_FACTOR) -> MRCase:
    """Append one point far from every cluster.

    The point sits in a random direction from the data mean, at ``factor``
    times the mean inter-centroid distance beyond the farthest centroid, so
    its distance to the mean and to every centroid is at least that multiple.
    """
    _check_outcome(source, source_outcome)
    k = source_outcome.n_clusters
    if k < 2:
        raise ApplicabilityError("MR6 needs at least two source clusters")
    refs = _reference_points(source, source_outcome)
    gaps = [np.linalg.norm(refs[i] - refs[j]) for i in range(k) for j in range(i + 1, k)]
    mean_gap = float(np.mean(gaps))
    center = source.coords.mean(axis=0)
    reach = float(max(np.linalg.norm(r - center) for r in refs))
    direction = make_rng(seed, "MR6").standard_normal(source.dim)
    direction /= np.linalg.norm(direction)
    outlier = center + (factor * mean_gap + reach) * direction
    (nid,) = _fresh_ids(source, 1)
    followup = Dataset(np.append(source.ids, nid), np.vstack([source.coords, outlier]))
    return MRCase("MR6", source, followup, _identity_map(source), (int(nid),),
                  Expectation(OUTLIER_ISOLATED, {int(nid): {}}),
                  {"outlier": outlier.tolist(), "mean_centroid_distance": mean_gap, "factor": factor})


# --------------------------------------------------------------------------
# persistence


def _jsonable(obj: Any):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def write_case(case: MRCase, directory, source_labels=None, followup_labels=None) -> None:
    """Write ``source.csv``, ``followup.csv`` and ``manifest.json`` to ``directory``."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_csv(case.source, d / "source.csv", source_labels)
    write_csv(case.followup, d / "followup.csv", followup_labels)
    manifest = {
        "mr_id": case.mr_id,
        "transform_params": case.transform_params,
        "old_to_new": case.old_to_new,
        "added_ids": list(case.added_ids),
        "expectation": {"rule": case.expectation.rule, "added": case.expectation.added},
    }
    (d / "manifest.json").write_text(json.dumps(_jsonable(manifest), indent=2, sort_keys=True) + "\n")


def read_case(directory) -> tuple[MRCase, np.ndarray | None, np.ndarray | None]:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    source, src_labels = read_csv(d / "source.csv")
    followup, fu_labels = read_csv(d / "followup.csv")
    exp = manifest["expectation"]
    case = MRCase(
        manifest["mr_id"],
        source,
        followup,
        {int(k): int(v) for k, v in manifest["old_to_new"].items()},
        tuple(int(i) for i in manifest["added_ids"]),
        Expectation(exp["rule"], {int(k): v for k, v in exp["added"].items()}),
        manifest["transform_params"],
    )
    return case, src_labels, fu_labels
