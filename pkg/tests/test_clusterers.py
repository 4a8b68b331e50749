import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone

from clustermt.clusterers import (
    DBSCAN,
    NOISE,
    Agglomerative,
    ClusteringOutcome,
    ClusterParams,
    FarthestFirst,
    GaussianMixtureEM,
    InitSpec,
    KMeans,
    XMeans,
    agglomerative,
    dbscan,
    em_cluster,
    farthest_first,
    kmeans,
    run_system,
    xmeans,
)
from clustermt.clusterers.xmeans import spherical_bic
from clustermt.data import BlobConfig, Dataset, generate_blobs
from clustermt.exceptions import ArgumentError, ConfigurationError

from oracles import brute_agglomerate, dbscan_closure, optimal_sse, partition

RAW = ClusterParams(normalize=False)
small_coords = st.integers(3, 10).flatmap(
    lambda n: arrays(np.float64, (n, 2), elements=st.integers(0, 20).map(float))
)


def blobs(n=120, centers=3, seed=0, **kw):
    return generate_blobs(BlobConfig(n_samples=n, centers=centers, seed=seed, **kw))[0]


def two_far_blobs(seed=0, n=60):
    rng = np.random.default_rng(seed)
    std = 0.5
    a = rng.normal([0, 0], std, size=(n // 2, 2))
    b = rng.normal([20 * std, 0], std, size=(n - n // 2, 2))
    return Dataset.from_array(np.vstack([a, b]))


class TestOutcome:
    def test_noise_count_and_map(self):
        out = ClusteringOutcome(ids=[4, 5, 6], assignments=[0, NOISE, 0])
        assert out.noise_count == 1 and out.n_clusters == 1
        assert out.label_map() == {4: 0, 5: NOISE, 6: 0}

    def test_rejects_bad_labels(self):
        with pytest.raises(ArgumentError):
            ClusteringOutcome(ids=[0, 1], assignments=[0, -2])

    def test_centroid_count_must_match(self):
        with pytest.raises(ArgumentError):
            ClusteringOutcome(ids=[0, 1], assignments=[0, 1], centroids=[[0.0, 0.0]])


class TestParams:
    def test_defaults(self):
        p = ClusterParams()
        assert (p.linkage, p.eps, p.min_pts, p.normalize, p.max_iterations, p.em_tolerance) == (
            "average", 0.1, 8, True, 500, 1e-6)

    @pytest.mark.parametrize("kw", [{"eps": 0}, {"k_min": 3, "k_max": 2}, {"linkage": "ward"}, {"k": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ConfigurationError):
            ClusterParams(**kw)

    def test_explicit_init(self):
        init = InitSpec.explicit([3, 1], seed=2)
        assert init.is_explicit and init.centroid_ids == (3, 1)


class TestKMeans:
    def test_four_points_two_clusters(self):
        ds = Dataset.from_array([[0, 0], [0, 1], [10, 0], [10, 1]])
        # brute force over all 2-partitions: the x-split has SSE 1, every other one is larger
        assert optimal_sse(ds.coords, 2) == pytest.approx(1.0)
        out = kmeans(ds, 2, InitSpec.explicit([0, 2]), RAW)
        assert partition(out.assignments) == {frozenset({0, 1}), frozenset({2, 3})}
        got = sorted(map(tuple, out.centroids))
        assert got == [(0.0, 0.5), (10.0, 0.5)]

    def test_k_one(self):
        ds = blobs(50)
        out = kmeans(ds, 1, InitSpec(seed=3))
        assert set(out.assignments) == {0}
        np.testing.assert_allclose(out.centroids[0], ds.coords.mean(axis=0), atol=1e-12)
        assert out.iterations <= 2

    def test_k_equals_n_fixed_point(self):
        ds = blobs(12)
        out = kmeans(ds, 12, InitSpec.explicit(ds.ids.tolist()))
        assert len(set(out.assignments)) == 12
        assert out.iterations == 1

    def test_errors(self):
        ds = blobs(10)
        with pytest.raises(ArgumentError):
            kmeans(ds, 11)
        with pytest.raises(ArgumentError):
            kmeans(ds, 2, InitSpec.explicit([0, 999]))

    def test_sse_non_increasing(self):
        for seed in range(20):
            est = KMeans(4, random_state=seed).fit(blobs(150, seed=seed).coords)
            h = np.array(est.sse_history_)
            assert np.all(np.diff(h) <= 1e-9)

    def test_deterministic(self):
        ds = blobs(100, seed=9)
        a, b = kmeans(ds, 3, InitSpec(seed=4)), kmeans(ds, 3, InitSpec(seed=4))
        assert a.assignments.tobytes() == b.assignments.tobytes()
        assert a.centroids.tobytes() == b.centroids.tobytes()

    def test_centroids_denormalized(self):
        ds = blobs(90, seed=2)
        out = kmeans(ds, 3, InitSpec(seed=1))
        for j in range(out.n_clusters):
            np.testing.assert_allclose(out.centroids[j], ds.coords[out.assignments == j].mean(0), atol=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(3, 8), st.just(2)), elements=st.integers(0, 9).map(float)),
           st.integers(1, 3), st.integers(0, 2**32))
    def test_local_optimum_containment(self, X, k, seed):
        k = min(k, len(X))
        est = KMeans(k, normalize=False, random_state=seed).fit(X)
        assert est.inertia_ >= optimal_sse(X, k) - 1e-9

    def test_estimator_api(self):
        est = KMeans(n_clusters=2, random_state=1)
        assert est.get_params()["n_clusters"] == 2
        X = blobs(60, centers=2).coords
        est2 = clone(est).fit(X)
        np.testing.assert_array_equal(est2.predict(X), est2.labels_)
        assert est2.fit_predict(X).tolist() == est2.labels_.tolist()

    def test_rotation_invariance_without_normalization(self):
        ds = blobs(150, seed=12)
        t = np.radians(37.0)
        rot = ds.with_coords(ds.coords @ np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]]))
        init = InitSpec.explicit([3, 50, 90])
        a, b = kmeans(ds, 3, init, RAW), kmeans(rot, 3, init, RAW)
        np.testing.assert_array_equal(a.assignments, b.assignments)


class TestXMeans:
    def test_degenerate_range_equals_kmeans(self):
        for seed in range(10):
            ds = blobs(120, seed=seed)
            init = InitSpec(seed=seed)
            a = xmeans(ds, 3, 3, init)
            b = kmeans(ds, 3, init)
            np.testing.assert_array_equal(a.assignments, b.assignments)

    def test_two_far_blobs_choose_two(self):
        ds = two_far_blobs()
        out = xmeans(ds, 1, 2, InitSpec(seed=0), RAW)
        assert out.n_clusters == 2
        # hand oracle: BIC of the true 2-split beats the single spherical cluster
        X = ds.coords
        truth = (np.arange(len(X)) >= len(X) // 2).astype(int)
        centers2 = np.array([X[truth == j].mean(0) for j in range(2)])
        one = spherical_bic(X, np.zeros(len(X), int), X.mean(0, keepdims=True))
        two = spherical_bic(X, truth, centers2)
        assert two > one
        assert partition(out.assignments) == partition(truth)

    def test_spherical_bic_formula(self):
        X = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]])
        labels = np.zeros(4, int)
        c = X.mean(0, keepdims=True)
        # SSE = 8, R=4, d=2 -> var = 1; ll = 0 - 4 log(2 pi) - 4 ; penalty 3/2 log 4
        expected = -4 * np.log(2 * np.pi) - 4 - 1.5 * np.log(4)
        assert spherical_bic(X, labels, c) == pytest.approx(expected)

    def test_never_exceeds_k_max(self):
        for seed in range(15):
            out = run_system("XM", blobs(150, seed=seed), ClusterParams(k=3), InitSpec(seed=seed))
            assert out.n_clusters in (2, 3)

    def test_records_decisions(self):
        est = XMeans(1, 3, random_state=0).fit(blobs(150).coords)
        assert est.bic_decisions_ and all("parent_bic" in d and "child_bic" in d for d in est.bic_decisions_)


class TestEM:
    def test_k_one_fixed_point(self):
        ds = blobs(80, seed=5)
        out = em_cluster(ds, 1, RAW)
        resp = out.model["responsibilities"]
        np.testing.assert_allclose(resp, 1.0)
        np.testing.assert_allclose(out.model["means"][0], ds.coords.mean(0), atol=1e-12)
        np.testing.assert_allclose(out.model["variances"][0], ds.coords.var(0), rtol=1e-9)

    def test_two_far_blobs_match_kmeans(self):
        for seed in range(5):
            ds = two_far_blobs(seed)
            a = em_cluster(ds, 2, ClusterParams(), seed=seed)
            b = kmeans(ds, 2, InitSpec(seed=seed))
            assert partition(a.assignments) == partition(b.assignments)

    def test_monotone_and_normalized(self):
        for seed in range(5):
            est = GaussianMixtureEM(random_state=seed).fit(blobs(100, seed=seed).coords)
            h = np.array(est.log_likelihood_history_)
            assert np.all(np.diff(h) >= -1e-9)
            assert abs(est.weights_.sum() - 1) <= 1e-9
            assert np.max(np.abs(est.responsibilities_.sum(1) - 1)) <= 1e-9

    def test_bic_sweep_finds_three(self):
        est = GaussianMixtureEM(random_state=0).fit(blobs(150, seed=1).coords)
        assert set(est.bic_by_k_) == set(range(1, 7))
        assert len(np.unique(est.labels_)) == 3

    def test_variance_floor_on_duplicates(self):
        X = np.array([[1.0, 1.0]] * 5 + [[5.0, 5.0]] * 5)
        est = GaussianMixtureEM(2, normalize=False).fit(X)
        assert np.all(np.isfinite(est.log_likelihood_history_))
        assert np.all(est.variances_ >= 1e-6 * 16 - 1e-15)

    def test_predict_proba(self):
        X = blobs(90).coords
        est = GaussianMixtureEM(3).fit(X)
        np.testing.assert_allclose(est.predict_proba(X).sum(1), 1.0)


class TestAgglomerative:
    def test_three_points_one_d(self):
        ds = Dataset.from_array([[0.0], [1.0], [5.0]])
        out = agglomerative(ds, 2, params=RAW)
        assert partition(out.assignments) == {frozenset({0, 1}), frozenset({2})}
        assert out.iterations == 0

    def test_extremes(self):
        ds = blobs(15)
        assert len(set(agglomerative(ds, 15).assignments)) == 15
        assert set(agglomerative(ds, 1).assignments) == {0}

    @settings(max_examples=60, deadline=None)
    @given(small_coords, st.integers(1, 4))
    def test_matches_brute_force(self, X, k):
        k = min(k, len(X))
        ids = np.arange(len(X))
        out = agglomerative(Dataset(ids, X), k, params=RAW)
        assert partition(out.assignments) == brute_agglomerate(X, k, ids)

    def test_shuffle_invariance_on_ties(self):
        # a square has four equal nearest pairs
        X = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
        ds = Dataset.from_array(X)
        base = agglomerative(ds, 2, params=RAW).label_map()
        for perm in ([3, 2, 1, 0], [2, 0, 3, 1]):
            other = agglomerative(ds.take(perm), 2, params=RAW).label_map()
            assert partition([base[i] for i in range(4)]) == partition([other[i] for i in range(4)])

    @pytest.mark.parametrize("linkage", ["single", "complete"])
    def test_other_linkages(self, linkage):
        X = blobs(60, seed=3).coords
        est = Agglomerative(3, linkage=linkage).fit(X)
        assert len(set(est.labels_)) == 3


class TestFarthestFirst:
    def test_three_points_one_d(self):
        ds = Dataset.from_array([[0.0], [1.0], [5.0]])
        out = farthest_first(ds, 2, InitSpec.explicit([0]))
        assert out.model["center_ids"] == [0, 2]
        assert partition(out.assignments) == {frozenset({0, 1}), frozenset({2})}
        assert out.model["parent"][2] == 0 and out.model["radius"][2] == pytest.approx(1.0)

    def test_k_one(self):
        out = farthest_first(blobs(30), 1, InitSpec(seed=2))
        assert set(out.assignments) == {0}

    def test_same_seed_same_traversal(self):
        ds = blobs(80, seed=4)
        assert farthest_first(ds, 3, InitSpec(seed=8)).model["traversal"] == \
            farthest_first(ds, 3, InitSpec(seed=8)).model["traversal"]

    @settings(max_examples=40, deadline=None)
    @given(small_coords)
    def test_each_center_is_farthest(self, X):
        est = FarthestFirst(len(X), init=0, normalize=False).fit(X)
        order = est.traversal_
        D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
        for t in range(1, len(order)):
            d_set = D[:, order[:t]].min(1)
            assert d_set[order[t]] == pytest.approx(d_set.max())
            assert est.radius_[order[t]] == pytest.approx(d_set[order[t]])


class TestDBSCAN:
    def test_chain(self):
        out = dbscan(Dataset.from_array([[0.0], [0.5], [1.0]]), eps=0.6, min_pts=2)
        assert set(out.assignments) == {0} and out.noise_count == 0

    def test_min_pts_above_n(self):
        out = dbscan(blobs(20), eps=0.1, min_pts=21)
        assert out.noise_count == 20

    def test_isolated_point_is_noise(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal([0, 0], 0.5, (50, 2)), rng.normal([10, 10], 0.5, (49, 2)), [[5.0, 30.0]]])
        out = dbscan(Dataset.from_array(X), eps=0.1, min_pts=8)
        assert out.assignments[-1] == NOISE
        comps, reach, noise, _ = dbscan_closure(out_working(X), 0.1, 8)
        assert 99 in noise

    def test_errors(self):
        with pytest.raises(ArgumentError):
            dbscan(blobs(10), eps=0, min_pts=2)
        with pytest.raises(ArgumentError):
            dbscan(blobs(10), eps=0.1, min_pts=0)

    def test_estimator(self):
        est = DBSCAN(eps=0.1, min_pts=8).fit(blobs(100).coords)
        assert est.core_sample_mask_.dtype == bool
        assert clone(est).get_params() == {"eps": 0.1, "min_pts": 8, "normalize": True}


def out_working(X):
    lo, hi = X.min(0), X.max(0)
    return (X - lo) / np.where(hi > lo, hi - lo, 1)


def dbscan_oracle_labels(X, eps, min_pts):
    comps, reach, noise, core = dbscan_closure(X, eps, min_pts)
    labels = np.full(len(X), NOISE)
    for c, comp in enumerate(comps):
        for i in comp:
            if core[i]:
                labels[i] = c
    for i, cs in reach.items():
        if cs:
            labels[i] = min(cs)
    return labels


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.just(2)), elements=st.integers(0, 12).map(float)),
       st.sampled_from([1.0, 1.5, 2.0, 3.0]), st.integers(1, 5))
def test_dbscan_matches_closure_property(X, eps, min_pts):
    out = dbscan(Dataset.from_array(X), eps=eps, min_pts=min_pts, params=RAW)
    np.testing.assert_array_equal(out.assignments, dbscan_oracle_labels(X, eps, min_pts))


def test_run_system_dispatch():
    ds = blobs(90)
    for kind in ("KM", "XM", "EM", "AN", "FF", "DS"):
        out = run_system(kind, ds, ClusterParams(), InitSpec(seed=1))
        assert len(out.assignments) == len(ds)
        if kind in ("AN", "FF", "DS"):
            assert out.iterations == 0
        else:
            assert out.iterations >= 1
