"""Source/follow-up execution, label alignment, RP and campaign aggregation."""

from __future__ import annotations

import csv
import io
import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import relations as R
from ._rng import derive_seed, make_rng
from .clusterers.base import ITERATIVE, NOISE, SYSTEMS, ClusteringOutcome, ClusterParams, InitSpec, system_kind
from .clusterers.api import run_system
from .data import BlobConfig, generate_blobs, pearson
from .exceptions import ApplicabilityError, ArgumentError, UndefinedCorrelationError
from .patterns import NONE, PatternLabel, classify_pattern, contingency

N_SAMPLES_RANGE = (50, 200)
MAX_REDRAWS = 10


# --------------------------------------------------------------------------
# alignment


@dataclass(frozen=True)
class LabelAlignment:
    mapping: dict
    unmatched_source: frozenset
    unmatched_followup: frozenset


def _assignment_value(W):
    if W.size == 0:
        return 0
    r, c = linear_sum_assignment(W, maximize=True)
    return int(W[r, c].sum())


def _lexicographic_assignment(W):
    """Maximum-weight assignment; among optima, lowest column for each row in turn."""
    n_rows, n_cols = W.shape
    target = _assignment_value(W)
    chosen = {}
    fixed = 0
    free_cols = list(range(n_cols))
    for i in range(n_rows):
        rest_rows = list(range(i + 1, n_rows))
        picked = None
        for j in free_cols:
            cols = [c for c in free_cols if c != j]
            rest = _assignment_value(W[np.ix_(rest_rows, cols)]) if rest_rows and cols else 0
            if fixed + W[i, j] + rest == target:
                picked = j
                break
        if picked is None:
            # row i is left unassigned in every optimum that respects earlier rows
            continue
        chosen[i] = picked
        fixed += int(W[i, picked])
        free_cols.remove(picked)
    return chosen


def align_from_labels(source_labels, followup_labels) -> LabelAlignment:
    C, rows, cols = contingency(source_labels, followup_labels)
    chosen = _lexicographic_assignment(C)
    mapping = {int(rows[i]): int(cols[j]) for i, j in chosen.items() if C[i, j] > 0}
    return LabelAlignment(
        mapping,
        frozenset(int(r) for r in rows) - set(mapping),
        frozenset(int(c) for c in cols) - set(mapping.values()),
    )


def align_labels(source_outcome: ClusteringOutcome, followup_outcome: ClusteringOutcome,
                 old_to_new: dict) -> LabelAlignment:
    src = source_outcome.label_map()
    fu = followup_outcome.label_map()
    s = [src[o] for o in sorted(old_to_new)]
    f = [fu[old_to_new[o]] for o in sorted(old_to_new)]
    return align_from_labels(s, f)


# --------------------------------------------------------------------------
# reclustering percentage


@dataclass(frozen=True)
class RPResult:
    d_old: int
    d_new: int
    size: int
    alignment: LabelAlignment | None = None

    @property
    def rp(self) -> float:
        return (self.d_old + self.d_new) / self.size if self.size else 0.0


def _majority(labels):
    counts = Counter(int(l) for l in labels)
    top = max(counts.values())
    return min(l for l, c in counts.items() if c == top)


def _d_new(case, src, fu, alignment):
    exp = case.expectation
    if not case.added_ids:
        return 0
    if exp.rule == R.PARENT_CLUSTER:
        bad = 0
        for nid in case.added_ids:
            want = alignment.mapping.get(int(exp.added[nid]["parent_label"]))
            bad += int(want is None or fu[nid] != want)
        return bad
    if exp.rule == R.OUTLIER_ISOLATED:
        bad = 0
        for nid in case.added_ids:
            label = fu[nid]
            if label == NOISE:
                continue
            shared = any(l == label for i, l in fu.items() if i != nid)
            bad += int(shared)
        return bad
    if exp.rule == R.MIRROR_GROUP:
        groups = {}
        for nid in case.added_ids:
            groups.setdefault(src[int(exp.added[nid]["mirror_of"])], []).append(nid)
        taken = set(alignment.mapping.values())
        bad = 0
        for g in sorted(groups):
            labels = [fu[nid] for nid in groups[g]]
            if g == NOISE:
                bad += sum(l != NOISE for l in labels)
                continue
            major = _majority(labels)
            if major == NOISE or major in taken:
                bad += len(labels)
                continue
            taken.add(major)
            bad += sum(l != major for l in labels)
        return bad
    raise ArgumentError(f"added points present but rule {exp.rule!r} defines no expectation")


def compute_rp(case: R.MRCase, source_outcome: ClusteringOutcome, followup_outcome: ClusteringOutcome,
               count_noise_flips: bool = True) -> RPResult:
    """Reclustering percentage of a follow-up run against its MR expectation.

    Source and follow-up labels are first aligned by a maximum-overlap
    assignment, so arbitrary relabelling never counts as reclustering.
    NOISE <-> cluster changes of mapped points count toward ``d_old`` unless
    ``count_noise_flips`` is False.
    """
    if len(source_outcome.ids) != len(case.source) or not np.array_equal(source_outcome.ids, case.source.ids):
        raise ArgumentError("source outcome does not match the case's source dataset")
    if len(followup_outcome.ids) != len(case.followup) or not np.array_equal(
        followup_outcome.ids, case.followup.ids
    ):
        raise ArgumentError("follow-up outcome does not match the case's follow-up dataset")
    src = source_outcome.label_map()
    fu = followup_outcome.label_map()
    alignment = align_labels(source_outcome, followup_outcome, case.old_to_new)
    d_old = 0
    for o, n in case.old_to_new.items():
        s, f = src[o], fu[n]
        if s == NOISE or f == NOISE:
            if count_noise_flips and (s == NOISE) != (f == NOISE):
                d_old += 1
            continue
        if alignment.mapping.get(s) != f:
            d_old += 1
    d_new = _d_new(case, src, fu, alignment)
    return RPResult(d_old, d_new, len(case.followup), alignment)


# --------------------------------------------------------------------------
# trials


@dataclass(frozen=True)
class TrialRecord:
    system: str
    mr: str
    trial: int
    seed: int
    n_samples: int
    d_old: int
    d_new: int
    followup_size: int
    source_iters: int
    followup_iters: int
    sfr: float | None
    pattern: str
    evidence: dict = field(default_factory=dict, compare=False)

    @property
    def rp(self) -> float:
        return (self.d_old + self.d_new) / self.followup_size

    @property
    def violated(self) -> bool:
        return self.rp > 0

    @property
    def trial_id(self) -> str:
        return f"{self.system.lower()}_{self.mr.lower()}_{self.trial:03d}"


@dataclass
class TrialRun:
    """A record plus everything needed to inspect or plot it."""

    record: TrialRecord
    case: R.MRCase
    source_outcome: ClusteringOutcome
    followup_outcome: ClusteringOutcome


def _k_of(params):
    return params.k if params.k is not None else 3


def sfr(source_iters, followup_iters):
    if followup_iters == 0:
        return None
    return source_iters / followup_iters


INIT_MODES = ("seeded", "explicit")
_N_START_IDS = {"KM": lambda k: k, "XM": lambda k: max(1, k - 1), "FF": lambda k: k}


def _explicit_init(kind, source, k, seed):
    n_ids = _N_START_IDS[kind](k)
    ids = make_rng(seed, "explicit-init").choice(source.ids, size=n_ids, replace=False)
    return InitSpec.explicit(tuple(int(i) for i in ids), seed=derive_seed(seed, "init"))


def _build_case(kind, mr, blob_config, params, seed, attempt, init_mode="seeded"):
    """Source run plus MR transformation; returns (case, inits, ks, source_outcome).

    Both executions share the init seed. With ``init_mode="explicit"``,
    partitional systems additionally start from the same point ids.
    """
    k = _k_of(params)
    data_seed = derive_seed(seed, "data", attempt)
    mr_seed = derive_seed(seed, "mr", attempt)
    init = InitSpec(seed=derive_seed(seed, "init"))
    explicit = init_mode == "explicit" and kind in _N_START_IDS
    k_src = k_fu = k
    inits = (init, init)

    if mr == "MR2.2":
        config = blob_config.replace(centers=2, center_box=(3.0, 10.0), seed=data_seed)
        case = R.mr2_2_mirror(config)
        k_src, k_fu = 2, 4
        src_out = run_system(kind, case.source, params, init, k=k_src)
        return case, inits, (k_src, k_fu), src_out
    if mr == "MR4.2":
        case = R.mr4_2_remove_redundant_attribute(blob_config.replace(seed=data_seed), 0.8, mr_seed)
        if explicit:
            init = _explicit_init(kind, case.source, k, seed)
            inits = (init, init)
        src_out = run_system(kind, case.source, params, init, k=k_src)
        return case, inits, (k_src, k_fu), src_out

    source, _ = generate_blobs(blob_config.replace(seed=data_seed))
    if mr == "MR1.2":
        case, inits = R.mr1_2_shuffle_fixed_centroids(source, _N_START_IDS[kind](k), mr_seed, system=kind)
        src_out = run_system(kind, source, params, inits[0], k=k_src)
        return case, inits, (k_src, k_fu), src_out
    if explicit:
        init = _explicit_init(kind, source, k, seed)
        inits = (init, init)
    src_out = run_system(kind, source, params, init, k=k_src)
    if mr == "MR1.1":
        case = R.mr1_1_shuffle(source, mr_seed)
    elif mr == "MR2.1":
        case = R.mr2_1_shrink(source, src_out, seed=mr_seed)
    elif mr == "MR3.1":
        case = R.mr3_1_add_near_centroids(source, src_out, seed=mr_seed)
    elif mr == "MR3.2":
        case = R.mr3_2_add_on_hull(source, src_out, seed=mr_seed)
    elif mr == "MR4.1":
        case = R.mr4_1_add_informative_attribute(source, src_out, noise_code=-1.0)
    elif mr == "MR5.1":
        case = R.mr5_1_rotate(source, mr_seed)
    elif mr == "MR5.2":
        case = R.mr5_2_scale(source, mr_seed)
    elif mr == "MR6":
        case = R.mr6_insert_outlier(source, src_out, mr_seed)
        if kind in ("AN", "FF"):
            k_fu = k + 1
    else:
        raise ArgumentError(f"unknown relation {mr}")
    return case, inits, (k_src, k_fu), src_out


def execute_trial(system: str, mr: str, blob_config: BlobConfig, params: ClusterParams, seed: int,
                  trial: int = 0, count_noise_flips: bool = True, init_mode: str = "seeded") -> TrialRun:
    """Source run, MR transformation, follow-up run, RP and pattern for one trial.

    A data-dependent inapplicability (e.g. MR6 on a source with a single
    cluster) triggers a deterministic redraw of the dataset, up to
    ``MAX_REDRAWS`` times.
    """
    kind = system_kind(system)
    mr = R.mr_id(mr)
    R.check_applicable(mr, kind)
    if init_mode not in INIT_MODES:
        raise ArgumentError(f"init_mode must be one of {INIT_MODES}")
    last_error = None
    for attempt in range(MAX_REDRAWS):
        try:
            case, inits, (k_src, k_fu), src_out = _build_case(kind, mr, blob_config, params, seed, attempt, init_mode)
            break
        except ApplicabilityError as exc:
            last_error = exc
    else:
        raise last_error
    fu_out = run_system(kind, case.followup, params, inits[1], k=k_fu)
    rp = compute_rp(case, src_out, fu_out, count_noise_flips)
    pattern = classify_pattern(case, src_out, fu_out, rp)
    record = TrialRecord(
        system=kind,
        mr=mr,
        trial=int(trial),
        seed=int(seed),
        n_samples=len(case.source),
        d_old=rp.d_old,
        d_new=rp.d_new,
        followup_size=len(case.followup),
        source_iters=int(src_out.iterations),
        followup_iters=int(fu_out.iterations),
        sfr=sfr(src_out.iterations, fu_out.iterations) if kind in ITERATIVE else None,
        pattern=pattern.kind,
        evidence=pattern.evidence,
    )
    return TrialRun(record, case, src_out, fu_out)


def run_trial(system: str, mr: str, blob_config: BlobConfig, params: ClusterParams, seed: int,
              trial: int = 0, **options) -> TrialRecord:
    return execute_trial(system, mr, blob_config, params, seed, trial, **options).record


# --------------------------------------------------------------------------
# campaigns


@dataclass
class SummaryCell:
    applicable: bool
    n_trials: int = 0
    n_violated: int = 0
    rp_sum_violated: float = 0.0
    patterns: Counter = field(default_factory=Counter)
    rp_values: list = field(default_factory=list)
    sfr_values: list = field(default_factory=list)

    @property
    def vr(self) -> float | None:
        if not self.applicable or self.n_trials == 0:
            return None
        return self.n_violated / self.n_trials

    @property
    def mean_rp(self) -> float | None:
        if not self.n_violated:
            return None
        return self.rp_sum_violated / self.n_violated

    def rp_sfr_correlation(self) -> float | None:
        pairs = [(r, s) for r, s in zip(self.rp_values, self.sfr_values) if s is not None]
        if len(pairs) < 2:
            return None
        try:
            return pearson([p[0] for p in pairs], [p[1] for p in pairs])
        except UndefinedCorrelationError:
            return None

    def to_dict(self) -> dict:
        out = {"applicable": self.applicable}
        if not self.applicable:
            return out
        out.update(n_trials=self.n_trials, n_violated=self.n_violated, vr=self.vr)
        if self.mean_rp is not None:
            out["mean_rp"] = self.mean_rp
        out["patterns"] = {k: self.patterns[k] for k in sorted(self.patterns)}
        corr = self.rp_sfr_correlation()
        if corr is not None:
            out["rp_sfr_correlation"] = corr
        return out


class CampaignSummary:
    """Per (system, MR) violation statistics, keyed like the VR/RP tables."""

    def __init__(self, systems: Iterable[str], mrs: Iterable[str]):
        self.systems = [system_kind(s) for s in systems]
        self.mrs = [R.mr_id(m) for m in mrs]
        self.cells = {
            (s, m): SummaryCell(R.is_applicable(m, s)) for s in self.systems for m in self.mrs
        }

    def add(self, rec: TrialRecord) -> None:
        cell = self.cells[(rec.system, rec.mr)]
        cell.n_trials += 1
        cell.rp_values.append(rec.rp)
        cell.sfr_values.append(rec.sfr)
        if rec.violated:
            cell.n_violated += 1
            cell.rp_sum_violated += rec.rp
            cell.patterns[rec.pattern] += 1

    @classmethod
    def from_records(cls, records, systems, mrs) -> "CampaignSummary":
        summary = cls(systems, mrs)
        key = {(s, m): (i, j) for i, s in enumerate(SYSTEMS) for j, m in enumerate(R.MR_IDS)}
        for rec in sorted(records, key=lambda r: (key[(r.system, r.mr)], r.trial)):
            summary.add(rec)
        return summary

    def cell(self, system, mr) -> SummaryCell:
        return self.cells[(system_kind(system), R.mr_id(mr))]

    def violated_mrs(self, system) -> list[str]:
        s = system_kind(system)
        return [m for m in self.mrs if self.cells[(s, m)].n_violated > 0]

    def to_dict(self) -> dict:
        return {s: {m: self.cells[(s, m)].to_dict() for m in self.mrs} for s in self.systems}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "CampaignSummary":
        systems = list(doc)
        mrs = list(next(iter(doc.values()))) if doc else []
        summary = cls(systems, mrs)
        for s in summary.systems:
            for m in summary.mrs:
                raw = doc[s][m]
                cell = summary.cells[(s, m)]
                cell.applicable = bool(raw["applicable"])
                if not cell.applicable:
                    continue
                cell.n_trials = int(raw["n_trials"])
                cell.n_violated = int(raw["n_violated"])
                if raw.get("mean_rp") is not None:
                    cell.rp_sum_violated = float(raw["mean_rp"]) * cell.n_violated
                cell.patterns = Counter({k: int(v) for k, v in raw.get("patterns", {}).items()})
        return summary


def trial_seed(master_seed: int, system: str, mr: str, trial: int) -> int:
    return derive_seed(master_seed, system_kind(system), R.mr_id(mr), int(trial))


def campaign_tasks(systems, mrs, n_trials, master_seed, blob_template: BlobConfig):
    if n_trials < 1:
        raise ArgumentError("n_trials must be >= 1")
    lo, hi = N_SAMPLES_RANGE
    for s in systems:
        for m in mrs:
            if not R.is_applicable(m, s):
                continue
            for t in range(n_trials):
                seed = trial_seed(master_seed, s, m, t)
                n = int(make_rng(seed, "n_samples").integers(lo, hi + 1))
                yield (system_kind(s), R.mr_id(m), blob_template.replace(n_samples=n, seed=0), seed, t)


def _run_task(task, params, keep, options):
    system, mr, config, seed, t = task
    run = execute_trial(system, mr, config, params, seed, t, **options)
    return run if keep else run.record


def run_campaign(systems, mrs, n_trials: int = 100, master_seed: int = 0,
                 blob_template: BlobConfig | None = None, params: ClusterParams | None = None,
                 jobs: int = 1, keep_runs: bool = False, init_mode: str = "seeded",
                 count_noise_flips: bool = True):
    """Run every applicable (system, MR) pair for ``n_trials`` trials.

    Returns ``(records, summary)``, or ``(runs, summary)`` with full
    :class:`TrialRun` objects when ``keep_runs`` is set. Results do not
    depend on ``jobs``.
    """
    blob_template = blob_template or BlobConfig()
    params = params or ClusterParams()
    systems = [system_kind(s) for s in systems]
    mrs = [R.mr_id(m) for m in mrs]
    tasks = list(campaign_tasks(systems, mrs, n_trials, master_seed, blob_template))
    options = {"init_mode": init_mode, "count_noise_flips": count_noise_flips}
    if jobs > 1:
        n = len(tasks)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks, [params] * n, [keep_runs] * n, [options] * n,
                                    chunksize=max(1, n // (4 * jobs))))
    else:
        results = [_run_task(t, params, keep_runs, options) for t in tasks]
    records = [r.record if keep_runs else r for r in results]
    return results, CampaignSummary.from_records(records, systems, mrs)


TRIAL_COLUMNS = ("system", "mr", "trial", "seed", "n_samples", "rp", "d_old", "d_new",
                 "source_iters", "followup_iters", "sfr", "pattern", "violated")


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def trials_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for r in records:
        w.writerow([_fmt(v) for v in (r.system, r.mr, r.trial, r.seed, r.n_samples, r.rp, r.d_old, r.d_new,
                                       r.source_iters, r.followup_iters, r.sfr, r.pattern, r.violated)])
    return buf.getvalue()


def read_trials_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))
