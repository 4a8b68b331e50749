import json
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clustermt import relations as R
from clustermt.clusterers import NOISE, ClusteringOutcome, ClusterParams
from clustermt.data import BlobConfig, Dataset
from clustermt.exceptions import ApplicabilityError, ArgumentError
from clustermt.harness import (
    CampaignSummary,
    RPResult,
    TrialRecord,
    align_from_labels,
    align_labels,
    campaign_tasks,
    compute_rp,
    execute_trial,
    read_trials_csv,
    run_campaign,
    run_trial,
    sfr,
    trial_seed,
    trials_csv,
)

from rp_cases import build_cases


def record(system="KM", mr="MR1.1", trial=0, d_old=0, d_new=0, size=100, pattern="NONE", sfr_value=1.0):
    return TrialRecord(system, mr, trial, 1, size, d_old, d_new, size, 3, 3, sfr_value, pattern)


class TestAlignment:
    def test_identity(self):
        a = align_from_labels([0, 0, 1, 1], [0, 0, 1, 1])
        assert a.mapping == {0: 0, 1: 1} and not a.unmatched_source

    def test_recovers_permutation(self):
        perm = {0: 2, 1: 0, 2: 1}
        s = [0, 0, 1, 1, 1, 2]
        assert align_from_labels(s, [perm[x] for x in s]).mapping == perm

    def test_tie_goes_to_low_labels(self):
        s = [0] * 10 + [1] * 10
        f = [0] * 5 + [1] * 5 + [0] * 5 + [1] * 5
        assert align_from_labels(s, f).mapping == {0: 0, 1: 1}

    def test_noise_never_mapped(self):
        a = align_from_labels([NOISE, NOISE, 0], [NOISE, 0, 0])
        assert NOISE not in a.mapping and NOISE not in a.mapping.values()

    def test_unmatched_sets(self):
        a = align_from_labels([0, 0, 1, 1, 2, 2], [0, 0, 0, 0, 1, 1])
        assert a.mapping == {0: 0, 2: 1}
        assert a.unmatched_source == {1} and not a.unmatched_followup

    @settings(max_examples=60)
    @given(st.lists(st.integers(0, 4), min_size=1, max_size=40), st.data())
    def test_optimal_and_permutation_invariant(self, s, data):
        f = data.draw(st.lists(st.integers(0, 4), min_size=len(s), max_size=len(s)))
        perm = data.draw(st.permutations(range(5)))
        a = align_from_labels(s, f)
        b = align_from_labels(s, [perm[x] for x in f])
        overlap = lambda m, ff: sum(1 for x, y in zip(s, ff) if m.get(x) == y)
        assert overlap(a.mapping, f) == overlap(b.mapping, [perm[x] for x in f])
        # brute-force optimum over all injective maps on at most 5 labels
        from itertools import permutations
        best = max(sum(1 for x, y in zip(s, f) if p[x] == y) for p in permutations(range(5)))
        assert overlap(a.mapping, f) == best

    def test_outcome_level(self):
        ds = Dataset.from_array([[0.0], [1.0], [2.0]])
        fu = ds.take([2, 0, 1])
        a = align_labels(ClusteringOutcome(ds.ids, [0, 0, 1]), ClusteringOutcome(fu.ids, [0, 1, 1]),
                         {0: 0, 1: 1, 2: 2})
        assert a.mapping == {0: 1, 1: 0}


class TestRP:
    def test_formula(self):
        assert RPResult(2, 1, 60).rp == pytest.approx(0.05)
        assert RPResult(0, 0, 60).rp == 0

    @pytest.mark.parametrize("c", build_cases(), ids=lambda c: c.name)
    def test_hand_cases(self, c):
        res = compute_rp(c.case, c.source, c.followup, **c.options)
        assert (res.d_old, res.d_new, len(c.case.followup)) == c.expected
        assert res.rp == (c.expected[0] + c.expected[1]) / c.expected[2]

    def test_size_mismatch(self):
        c = build_cases()[0]
        with pytest.raises(ArgumentError):
            compute_rp(c.case, c.source, ClusteringOutcome([0, 1], [0, 0]))

    def test_scaled_identical_outcomes(self):
        ds = Dataset.from_array([[1.0, 1.0], [2.0, 2.0], [9.0, 9.0]])
        case = R.mr5_2_scale(ds, scale=3.0)
        out = ClusteringOutcome(ds.ids, [0, 0, 1])
        assert compute_rp(case, out, out).rp == 0

    @settings(max_examples=60)
    @given(st.lists(st.integers(-1, 3), min_size=2, max_size=30), st.data())
    def test_relabel_invariance_and_bounds(self, s, data):
        f = data.draw(st.lists(st.integers(-1, 3), min_size=len(s), max_size=len(s)))
        perm = data.draw(st.permutations(range(4)))
        ds = Dataset.from_array(np.arange(len(s), dtype=float))
        case = R.MRCase("MR1.1", ds, ds, {i: i for i in range(len(s))})
        src = ClusteringOutcome(ds.ids, s)
        a = compute_rp(case, src, ClusteringOutcome(ds.ids, f))
        b = compute_rp(case, src, ClusteringOutcome(ds.ids, [x if x < 0 else perm[x] for x in f]))
        assert (a.d_old, a.d_new) == (b.d_old, b.d_new)
        assert a.d_new == 0 and 0 <= a.rp <= 1
        assert a.rp * len(ds) == pytest.approx(a.d_old + a.d_new)
        assert (a.rp == 0) == (a.d_old == a.d_new == 0)


class TestTrials:
    def test_an_order_independent(self):
        for seed in range(5):
            assert run_trial("AN", "MR1.1", BlobConfig(n_samples=80), ClusterParams(), seed).rp == 0

    def test_km_scale(self):
        for seed in range(5):
            assert run_trial("KM", "MR5.2", BlobConfig(n_samples=80), ClusterParams(), seed).rp == 0

    def test_sfr(self):
        assert sfr(6, 2) == 3.0
        assert sfr(3, 0) is None

    def test_sfr_only_for_iterative(self):
        cfg = BlobConfig(n_samples=60)
        assert run_trial("FF", "MR1.1", cfg, ClusterParams(), 1).sfr is None
        rec = run_trial("KM", "MR2.1", cfg, ClusterParams(), 1)
        assert rec.sfr == rec.source_iters / rec.followup_iters

    def test_inapplicable(self):
        with pytest.raises(ApplicabilityError):
            run_trial("DS", "MR2.1", BlobConfig(), ClusterParams(), 0)

    def test_mirror_uses_four_clusters(self):
        run = execute_trial("KM", "MR2.2", BlobConfig(n_samples=80), ClusterParams(), 3)
        assert run.source_outcome.n_clusters == 2
        assert len(run.case.followup) == 160
        assert run.followup_outcome.n_clusters <= 4

    def test_outlier_gets_extra_cluster_for_an(self):
        run = execute_trial("AN", "MR6", BlobConfig(n_samples=80), ClusterParams(normalize=False), 3)
        assert run.followup_outcome.n_clusters == run.source_outcome.n_clusters + 1
        assert run.record.d_new == 0

    def test_violation_flag_and_pattern(self):
        rec = record(d_old=1)
        assert rec.violated and rec.rp == 0.01
        assert not record().violated
        assert record(system="KM", mr="MR2.1", trial=7).trial_id == "km_mr2.1_007"

    def test_pattern_consistent_with_rp(self):
        for seed in range(6):
            rec = run_trial("KM", "MR1.1", BlobConfig(n_samples=90), ClusterParams(), seed)
            assert (rec.pattern == "NONE") == (rec.rp == 0)


class TestCampaign:
    def test_vr_ratio(self):
        recs = [record(trial=t, d_old=1 if t < 5 else 0, pattern="BORDER") for t in range(100)]
        cell = CampaignSummary.from_records(recs, ["KM"], ["MR1.1"]).cell("KM", "MR1.1")
        assert cell.vr == 0.05 and cell.mean_rp == pytest.approx(0.01)
        assert cell.patterns == {"BORDER": 5}

    def test_mean_rp_absent_without_violations(self):
        summary = CampaignSummary.from_records([record(trial=t) for t in range(10)], ["KM"], ["MR1.1"])
        assert summary.cell("KM", "MR1.1").mean_rp is None
        assert "mean_rp" not in summary.to_dict()["KM"]["MR1.1"]

    def test_na_cells(self):
        summary = CampaignSummary(["AN"], ["MR2.1"])
        assert summary.to_dict() == {"AN": {"MR2.1": {"applicable": False}}}

    def test_order_independent_fold(self):
        rng = np.random.default_rng(0)
        recs = [record(system=s, mr=m, trial=t, d_old=int(rng.integers(0, 3)), pattern="BORDER",
                       sfr_value=float(rng.uniform(0.5, 2)))
                for s in ("KM", "FF") for m in ("MR1.1", "MR6") for t in range(20)]
        recs = [r if r.d_old else replace(r, pattern="NONE") for r in recs]
        a = CampaignSummary.from_records(recs, ["KM", "FF"], ["MR1.1", "MR6"]).to_json()
        shuffled = [recs[i] for i in rng.permutation(len(recs))]
        assert CampaignSummary.from_records(shuffled, ["KM", "FF"], ["MR1.1", "MR6"]).to_json() == a

    def test_seeds_and_sizes(self):
        tasks = list(campaign_tasks(["KM", "AN"], ["MR1.1", "MR2.1"], 5, 42, BlobConfig()))
        assert len(tasks) == 15
        assert all(50 <= t[2].n_samples <= 200 for t in tasks)
        assert trial_seed(42, "km", "mr1.1", 3) == trial_seed(42, "KM", "MR1.1", 3)
        assert trial_seed(42, "KM", "MR1.1", 3) != trial_seed(43, "KM", "MR1.1", 3)

    def test_rejects_zero_trials(self):
        with pytest.raises(ArgumentError):
            run_campaign(["KM"], ["MR1.1"], 0)

    def test_deterministic_and_parallel_safe(self):
        a_recs, a = run_campaign(["KM", "DS"], ["MR1.1", "MR6"], 4, 7)
        b_recs, b = run_campaign(["KM", "DS"], ["MR1.1", "MR6"], 4, 7, jobs=2)
        assert trials_csv(a_recs) == trials_csv(b_recs)
        assert a.to_json() == b.to_json()

    def test_correlation_produced_for_km_shrink(self):
        _, summary = run_campaign(["KM"], ["MR2.1"], 30, 5)
        cell = summary.to_dict()["KM"]["MR2.1"]
        assert isinstance(cell.get("rp_sfr_correlation"), float)

    def test_summary_round_trip(self):
        _, summary = run_campaign(["KM", "AN"], ["MR1.1", "MR2.1"], 3, 1)
        back = CampaignSummary.from_dict(json.loads(summary.to_json()))
        for s in ("KM", "AN"):
            for m in ("MR1.1", "MR2.1"):
                assert back.cell(s, m).vr == summary.cell(s, m).vr


def test_trials_csv_columns():
    text = trials_csv([record(d_old=2, pattern="BORDER"), record(system="FF", sfr_value=None)])
    lines = text.splitlines()
    assert lines[0] == "system,mr,trial,seed,n_samples,rp,d_old,d_new,source_iters,followup_iters,sfr,pattern,violated"
    rows = read_trials_csv(text)
    assert rows[0]["violated"] == "1" and rows[0]["rp"] == "0.02"
    assert rows[1]["sfr"] == ""
