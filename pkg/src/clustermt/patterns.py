"""Violation-pattern classification from contingency, noise and count evidence."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clusterers.base import NOISE

NONE = "NONE"
BORDER = "BORDER"
MERGE_AND_SPLIT = "MERGE_AND_SPLIT"
SPLIT = "SPLIT"
NOISE_PATTERN = "NOISE"
NUM = "NUM"

PATTERN_KINDS = (NONE, BORDER, MERGE_AND_SPLIT, SPLIT, NOISE_PATTERN, NUM)


@dataclass(frozen=True)
class PatternLabel:
    kind: str
    evidence: dict = field(default_factory=dict)

    def __str__(self):
        return self.kind


@dataclass(frozen=True)
class PatternThresholds:
    share: float = 0.2  # merge/split: fraction of a source cluster's members
    noise_dominance: float = 0.5


def contingency(source_labels, followup_labels):
    """Counts of mapped points per (source label, follow-up label), NOISE excluded.

    Returns ``(matrix, source_label_values, followup_label_values)``.
    """
    s = np.asarray(source_labels)
    f = np.asarray(followup_labels)
    keep = (s != NOISE) & (f != NOISE)
    rows = np.unique(s[s != NOISE])
    cols = np.unique(f[f != NOISE])
    C = np.zeros((len(rows), len(cols)), dtype=int)
    ri = {int(v): i for i, v in enumerate(rows)}
    ci = {int(v): j for j, v in enumerate(cols)}
    for a, b in zip(s[keep], f[keep]):
        C[ri[int(a)], ci[int(b)]] += 1
    return C, rows, cols


def expected_cluster_counts(mr: str, source_count: int) -> set[int]:
    if mr == "MR2.2":
        return {2 * source_count}
    if mr == "MR6":
        return {source_count, source_count + 1}
    return {source_count}


def classify_evidence(mr, C, rows, source_count, followup_count, noise_flips,
                      noise_delta, reclustered, rp, thresholds=PatternThresholds()):
    """Run the decision cascade NUM > NOISE > MERGE_AND_SPLIT > SPLIT > BORDER."""
    if rp == 0:
        return PatternLabel(NONE)
    evidence = {
        "cluster_counts": [int(source_count), int(followup_count)],
        "noise_delta": int(noise_delta),
        "noise_flips": int(noise_flips),
    }
    if followup_count not in expected_cluster_counts(mr, source_count):
        return PatternLabel(NUM, evidence)
    if (noise_flips > 0 and noise_flips >= thresholds.noise_dominance * reclustered) or abs(
        noise_delta
    ) >= max(1.0, thresholds.noise_dominance * reclustered):
        return PatternLabel(NOISE_PATTERN, evidence)

    C = np.asarray(C)
    row_tot = C.sum(axis=1, keepdims=True)
    strong = (C > 0) & (C >= thresholds.share * np.maximum(row_tot, 1))
    merged = []
    for j in range(C.shape[1]):
        srcs = [int(rows[i]) for i in np.flatnonzero(strong[:, j])]
        if len(srcs) >= 2:
            merged.append(srcs)
    split = [int(rows[i]) for i in range(C.shape[0]) if strong[i].sum() >= 2]
    evidence["merged"] = merged
    evidence["split"] = split
    if merged and split:
        return PatternLabel(MERGE_AND_SPLIT, evidence)
    if split:
        return PatternLabel(SPLIT, evidence)
    return PatternLabel(BORDER, evidence)


def classify_pattern(case, source_outcome, followup_outcome, rp_result,
                     thresholds: PatternThresholds = PatternThresholds()) -> PatternLabel:
    src = source_outcome.label_map()
    fu = followup_outcome.label_map()
    pairs = [(src[o], fu[n]) for o, n in case.old_to_new.items()]
    s = np.array([p[0] for p in pairs], dtype=int)
    f = np.array([p[1] for p in pairs], dtype=int)
    C, rows, _ = contingency(s, f)
    flips = int(np.sum((s == NOISE) != (f == NOISE)))
    noise_delta = int(np.sum(f == NOISE)) - int(np.sum(s == NOISE))
    fu_all = followup_outcome.assignments
    return classify_evidence(
        case.mr_id,
        C,
        rows,
        len(np.unique(source_outcome.assignments[source_outcome.assignments != NOISE])),
        len(np.unique(fu_all[fu_all != NOISE])),
        flips,
        noise_delta,
        rp_result.d_old + rp_result.d_new,
        rp_result.rp,
        thresholds,
    )
