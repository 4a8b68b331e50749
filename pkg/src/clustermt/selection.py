"""Weighted MR-compliance scoring for choosing among clustering systems.

Each candidate system is scored as ``S = sum_j w1_j * w2_j * x_j`` over the
nice-to-have relations, where ``x_j`` flags at least one violation of
``MR_j`` and ``w2_j`` is the heaviest pattern weight observed for it.
Systems violating any must-have relation are eliminated first; the lowest
score wins.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .exceptions import ConfigurationError, EmptyCandidateError
from .patterns import NONE, PATTERN_KINDS
from .relations import mr_id


def _open_unit(name, value):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number, got {value!r}") from None
    if not 0.0 < v < 1.0:
        raise ConfigurationError(f"{name} must lie strictly inside (0, 1), got {v}")
    return v


@dataclass(frozen=True)
class SelectionScheme:
    mr_weights: Mapping[str, float]
    pattern_weights: Mapping[str, float]
    must_have: frozenset = frozenset()

    def __post_init__(self):
        mw = {mr_id(k): _open_unit(f"weight for {k}", v) for k, v in dict(self.mr_weights).items()}
        pw = {}
        for k, v in dict(self.pattern_weights).items():
            kind = str(k).upper()
            if kind not in PATTERN_KINDS or kind == NONE:
                raise ConfigurationError(f"unknown pattern kind {k!r}")
            pw[kind] = _open_unit(f"weight for pattern {kind}", v)
        must = frozenset(mr_id(m) for m in self.must_have)
        overlap = must & set(mw)
        if overlap:
            raise ConfigurationError(f"MRs cannot be both must-have and weighted: {sorted(overlap)}")
        object.__setattr__(self, "mr_weights", mw)
        object.__setattr__(self, "pattern_weights", pw)
        object.__setattr__(self, "must_have", must)

    def scaled(self, c: float) -> "SelectionScheme":
        """Copy with every w1 multiplied by ``c``."""
        return SelectionScheme({k: v * c for k, v in self.mr_weights.items()}, self.pattern_weights, self.must_have)

    @classmethod
    def from_dict(cls, doc: dict) -> "SelectionScheme":
        if not isinstance(doc, dict):
            raise ConfigurationError("selection scheme must be a JSON object")
        unknown = set(doc) - {"must_have", "mr_weights", "pattern_weights"}
        if unknown:
            raise ConfigurationError(f"unknown scheme keys: {sorted(unknown)}")
        return cls(doc.get("mr_weights", {}), doc.get("pattern_weights", {}), frozenset(doc.get("must_have", ())))

    @classmethod
    def load(cls, path) -> "SelectionScheme":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read selection scheme {path}: {exc}") from None
        return cls.from_dict(doc)


@dataclass(frozen=True)
class MREvidence:
    """What a campaign observed for one (system, MR) pair."""

    violated: bool
    patterns: frozenset = frozenset()
    applicable: bool = True


def evidence_from_summary(summary, system: str) -> dict[str, MREvidence]:
    """Per-MR evidence for ``system`` from a :class:`CampaignSummary`."""
    out = {}
    for m in summary.mrs:
        cell = summary.cell(system, m)
        out[m] = MREvidence(cell.n_violated > 0, frozenset(k for k, c in cell.patterns.items() if c > 0),
                            cell.applicable)
    return out


def _mr_term(mr, ev, scheme):
    if ev is None or not ev.applicable or not ev.violated:
        return 0.0, None
    kinds = sorted(ev.patterns - {NONE})
    missing = [k for k in kinds if k not in scheme.pattern_weights]
    if missing or not kinds:
        raise ConfigurationError(f"no pattern weight for {mr} violation pattern(s) {missing or ['<none recorded>']}")
    w2 = max(scheme.pattern_weights[k] for k in kinds)
    return scheme.mr_weights[mr] * w2, w2


def score_breakdown(evidence: Mapping[str, MREvidence], scheme: SelectionScheme) -> dict[str, dict]:
    rows = {}
    for mr, w1 in sorted(scheme.mr_weights.items()):
        ev = evidence.get(mr)
        term, w2 = _mr_term(mr, ev, scheme)
        rows[mr] = {"w1": w1, "w2": w2, "x": int(term > 0), "term": term}
    return rows


def score_system(evidence: Mapping[str, MREvidence], scheme: SelectionScheme) -> float:
    """Score of one system; inapplicable or unobserved MRs count as non-violations."""
    return float(sum(r["term"] for r in score_breakdown(evidence, scheme).values()))


def violates_must_have(evidence: Mapping[str, MREvidence], scheme: SelectionScheme) -> list[str]:
    return sorted(m for m in scheme.must_have
                  if (ev := evidence.get(m)) is not None and ev.applicable and ev.violated)


@dataclass(frozen=True)
class SelectionResult:
    eliminated: dict
    scores: dict
    ranking: list
    chosen: str
    tied_with: list = field(default_factory=list)
    breakdown: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "chosen": self.chosen,
            "tie_break": "lexicographic" if self.tied_with else None,
            "tied_with": self.tied_with,
            "ranking": self.ranking,
            "scores": self.scores,
            "eliminated": self.eliminated,
            "breakdown": self.breakdown,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def select_system(evidence_by_system: Mapping[str, Mapping[str, MREvidence]],
                  scheme: SelectionScheme) -> SelectionResult:
    eliminated, scores, breakdown = {}, {}, {}
    for system in sorted(evidence_by_system):
        ev = evidence_by_system[system]
        bad = violates_must_have(ev, scheme)
        if bad:
            eliminated[system] = bad
            continue
        breakdown[system] = score_breakdown(ev, scheme)
        scores[system] = float(sum(r["term"] for r in breakdown[system].values()))
    if not scores:
        raise EmptyCandidateError(
            "every candidate violates a must-have MR; relax the must-have set "
            f"(currently {sorted(scheme.must_have)}) or add candidates"
        )
    ranking = sorted(scores, key=lambda s: (scores[s], s))
    chosen = ranking[0]
    tied = [s for s in ranking[1:] if scores[s] == scores[chosen]]
    return SelectionResult(eliminated, scores, ranking, chosen, tied, breakdown)


def select_from_summary(summary, scheme: SelectionScheme) -> SelectionResult:
    return select_system({s: evidence_from_summary(summary, s) for s in summary.systems}, scheme)
