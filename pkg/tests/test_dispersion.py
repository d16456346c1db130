import itertools
import math

import numpy as np
import pytest

from pianoeval.dispersion import (
    SelectionConfig,
    exact_pdispersion,
    farthest_pair,
    min_pairwise_distance,
    select_dispersed,
    selection_pipeline,
    ward_cluster,
)

# ---------------------------------------------------------------------------
# independent oracles
# ---------------------------------------------------------------------------


def naive_ward(X, p):
    """From-scratch Ward agglomeration: each step recomputes every merge's
    within-cluster sum-of-squares increase directly."""
    X = np.asarray(X, dtype=float)

    def sse(indices):
        pts = X[indices]
        return float(((pts - pts.mean(axis=0)) ** 2).sum())

    clusters = {i: [i] for i in range(len(X))}
    history = []
    while len(clusters) > p:
        best = None
        for i in sorted(clusters):
            for j in sorted(clusters):
                if j <= i:
                    continue
                cost = sse(clusters[i] + clusters[j]) - sse(clusters[i]) - sse(clusters[j])
                if best is None or cost < best[2]:
                    best = (i, j, cost)
        i, j, cost = best
        history.append(best)
        clusters[i] = clusters[i] + clusters[j]
        del clusters[j]
    labels = np.empty(len(X), dtype=int)
    for label, rep in enumerate(sorted(clusters)):
        labels[clusters[rep]] = label
    return labels, history


def criterion_score(X, labels, method, i, cluster):
    """Direct recomputation of each selection criterion for one candidate."""
    n = len(X)
    others = [k for k in range(n) if k != i]
    if method == "A":
        centroid = X[others].mean(axis=0)
        return math.dist(X[i], centroid)
    if method == "B":
        scores = []
        for c in set(labels) - {cluster}:
            members = np.nonzero(labels == c)[0]
            scores.append(math.dist(X[i], X[members].mean(axis=0)))
        return min(scores) if scores else -math.inf
    if method == "C":
        outside = [k for k in range(n) if labels[k] != cluster]
        return min(math.dist(X[i], X[k]) for k in outside) if outside else -math.inf
    outside = others
    return min(math.dist(X[i], X[k]) for k in outside) if outside else -math.inf


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 19))
    d = int(rng.integers(2, 5))
    if rng.random() < 0.5:
        k = int(rng.integers(2, 5))
        centers = rng.uniform(-6, 6, size=(k, d))
        X = centers[rng.integers(0, k, size=n)] + rng.normal(0, 0.8, size=(n, d))
    else:
        X = rng.uniform(-5, 5, size=(n, d))
    p = int(rng.integers(2, 5))
    p = min(p, n - 1)
    return X, p, rng


# ---------------------------------------------------------------------------
# ward clustering
# ---------------------------------------------------------------------------


class TestWardCluster:
    def test_two_separated_groups(self):
        rng = np.random.default_rng(0)
        X = np.vstack(
            [rng.normal(0, 0.2, size=(6, 2)), rng.normal(20, 0.2, size=(7, 2))]
        )
        labels = ward_cluster(X, 2)
        assert len(set(labels.labels[:6])) == 1
        assert len(set(labels.labels[6:])) == 1
        assert labels.labels[0] != labels.labels[6]

    def test_p_equals_n(self):
        X = np.arange(10.0)[:, None]
        labels = ward_cluster(X, 10)
        assert sorted(labels.labels) == list(range(10))
        assert labels.merge_history == ()

    def test_p_too_large_errors(self):
        with pytest.raises(ValueError):
            ward_cluster(np.zeros((3, 2)), 4)

    def test_merge_costs_non_decreasing(self):
        for seed in range(20):
            X, p, _ = random_instance(seed)
            history = ward_cluster(X, 1).merge_history
            costs = [cost for _, _, cost in history]
            for a, b in zip(costs, costs[1:]):
                assert b >= a - 1e-9 * max(1.0, abs(a))

    def test_matches_naive_oracle(self):
        for seed in range(100):
            rng = np.random.default_rng(10_000 + seed)
            n = int(rng.integers(4, 11))
            d = int(rng.integers(1, 4))
            X = rng.normal(size=(n, d))
            p = int(rng.integers(1, n + 1))
            got = ward_cluster(X, p)
            want_labels, want_history = naive_ward(X, p)
            assert [(i, j) for i, j, _ in got.merge_history] == [
                (i, j) for i, j, _ in want_history
            ], f"seed {seed}: merge order differs"
            for (_, _, a), (_, _, b) in zip(got.merge_history, want_history):
                assert a == pytest.approx(b, rel=1e-8, abs=1e-10)
            assert list(got.labels) == list(want_labels)


# ---------------------------------------------------------------------------
# dispersion selection
# ---------------------------------------------------------------------------


class TestSelectDispersed:
    def test_criteria_match_exhaustive_recomputation(self):
        for seed in range(40):
            X, p, _ = random_instance(seed)
            labels = ward_cluster(X, p)
            for method in ("A", "B", "C", "D"):
                result = select_dispersed(X, labels, method)
                assert len(result.indices) == p
                assert len(set(result.indices)) == p
                by_cluster = {}
                for idx in result.indices:
                    by_cluster[labels.labels[idx]] = idx
                assert len(by_cluster) == p  # one pick per cluster
                for cluster, idx in by_cluster.items():
                    members = np.nonzero(labels.labels == cluster)[0]
                    scores = {
                        int(i): criterion_score(X, labels.labels, method, i, cluster)
                        for i in members
                    }
                    best = max(scores.values())
                    winners = sorted(i for i, s in scores.items() if s >= best - 1e-12)
                    assert idx == winners[0], f"seed {seed} method {method}"

    def test_method_d_single_cluster_hand_case(self):
        X = np.array([[0.0], [1.0], [2.0], [10.0]])
        labels = ward_cluster(X, 1)
        assert select_dispersed(X, labels, "D").indices == (3,)

    def test_singleton_clusters_forced(self):
        X = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
        labels = ward_cluster(X, 3)
        for method in ("A", "B", "C", "D"):
            assert select_dispersed(X, labels, method).indices == (0, 1, 2)

    def test_method_a_cluster_variant_differs_by_scope(self):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(12, 3))
        labels = ward_cluster(X, 3)
        r_self = select_dispersed(X, labels, "A", centroid_excludes="self")
        r_cluster = select_dispersed(X, labels, "A", centroid_excludes="cluster")
        assert len(r_self.indices) == len(r_cluster.indices) == 3

    def test_min_pairwise_matches_recomputation(self):
        for seed in range(10):
            X, p, rng = random_instance(seed)
            labels = ward_cluster(X, p)
            result = select_dispersed(X, labels, "C")
            direct = min(
                math.dist(X[a], X[b])
                for a, b in itertools.combinations(result.indices, 2)
            )
            assert result.min_pairwise == pytest.approx(direct)


class TestExactPdispersion:
    def test_endpoints(self):
        X = np.arange(5.0)[:, None]
        r = exact_pdispersion(X, 2)
        assert r.indices == (0, 4)
        assert r.min_pairwise == pytest.approx(4.0)

    def test_three_points_symmetric(self):
        X = np.arange(5.0)[:, None]
        r = exact_pdispersion(X, 3)
        assert r.indices == (0, 2, 4)
        assert r.min_pairwise == pytest.approx(2.0)

    def test_unit_square_corners(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]])
        r = exact_pdispersion(X, 4)
        assert r.indices == (0, 1, 2, 3)
        assert r.min_pairwise == pytest.approx(1.0)

    def test_guard(self):
        with pytest.raises(ValueError, match="guard"):
            exact_pdispersion(np.zeros((60, 2)), 20)

    def test_matches_plain_enumeration(self):
        for seed in range(15):
            rng = np.random.default_rng(200 + seed)
            X = rng.uniform(size=(9, 2))
            got = exact_pdispersion(X, 3)
            best_set, best_min = None, -math.inf
            for combo in itertools.combinations(range(9), 3):
                d = min(
                    math.dist(X[a], X[b]) for a, b in itertools.combinations(combo, 2)
                )
                if d > best_min:
                    best_set, best_min = combo, d
            assert got.indices == best_set
            assert got.min_pairwise == pytest.approx(best_min)


class TestMinPairwiseAndFarthest:
    def test_two_points(self):
        X = np.array([[0.0, 0.0], [3.0, 0.0]])
        assert min_pairwise_distance(X, [0, 1]) == pytest.approx(3.0)

    def test_duplicate_point(self):
        X = np.array([[1.0], [1.0], [5.0]])
        assert min_pairwise_distance(X, [0, 1, 2]) == 0.0

    def test_needs_two_indices(self):
        with pytest.raises(ValueError):
            min_pairwise_distance(np.zeros((3, 2)), [1])

    def test_manhattan_metric(self):
        X = np.array([[0.0, 0.0], [1.0, 1.0]])
        assert min_pairwise_distance(X, [0, 1], "manhattan") == pytest.approx(2.0)

    def test_farthest_pair_hand_case(self):
        assert farthest_pair(np.array([[0.0], [1.0], [5.0]])) == (0, 2)

    def test_farthest_pair_square(self):
        X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        i, j = farthest_pair(X)
        assert math.dist(X[i], X[j]) == pytest.approx(math.sqrt(2))
        assert (i, j) == (0, 3)  # lexicographically smallest diagonal

    def test_farthest_equals_exact_p2(self):
        for seed in range(20):
            rng = np.random.default_rng(300 + seed)
            X = rng.normal(size=(10, 3))
            assert farthest_pair(X) == exact_pdispersion(X, 2).indices


class TestDominanceAndBaseline:
    def test_exact_dominates_heuristics_and_beats_random_median(self):
        wins = {m: 0 for m in ("A", "B", "C", "D")}
        total = 200
        for seed in range(total):
            X, p, rng = random_instance(1_000_000 + seed)
            exact = exact_pdispersion(X, p)
            labels = ward_cluster(X, p)
            n = X.shape[0]
            randoms = []
            for _ in range(100):
                subset = rng.choice(n, size=p, replace=False)
                randoms.append(min_pairwise_distance(X, subset))
            median_random = float(np.median(randoms))
            for method in wins:
                heuristic = select_dispersed(X, labels, method)
                assert heuristic.min_pairwise <= exact.min_pairwise + 1e-9
                if heuristic.min_pairwise >= median_random:
                    wins[method] += 1
        for method, count in wins.items():
            assert count / total >= 0.9, f"method {method}: {count}/{total}"


class TestSelectionPipeline:
    def test_medoid_appends_fifth_index(self):
        rng = np.random.default_rng(77)
        X = rng.normal(size=(30, 6))
        cfg = SelectionConfig(p=4, add_medoid=True)
        result = selection_pipeline(X, cfg)
        assert len(result.indices) == 5
        assert len(set(result.indices)) == 5
        assert result.pca_components_kept >= 1

    def test_boundary_n_equals_p_plus_one(self):
        rng = np.random.default_rng(78)
        X = rng.normal(size=(5, 3))
        result = selection_pipeline(X, SelectionConfig(p=4, add_medoid=True))
        assert sorted(result.indices) == [0, 1, 2, 3, 4]

    def test_n_not_greater_than_p_errors(self):
        with pytest.raises(ValueError):
            selection_pipeline(np.zeros((4, 2)), SelectionConfig(p=4))

    def test_four_clusters_plus_center(self):
        rng = np.random.default_rng(79)
        centers = np.array([[8.0, 8.0], [-8.0, 8.0], [8.0, -8.0], [-8.0, -8.0]])
        blobs = [c + rng.normal(0, 0.3, size=(4, 2)) for c in centers]
        X = np.vstack(blobs + [np.zeros((1, 2))])  # center point is row 16
        result = selection_pipeline(X, SelectionConfig(p=4, add_medoid=True))
        picks, medoid_pick = result.indices[:4], result.indices[4]
        assert medoid_pick == 16
        blobs_hit = {idx // 4 for idx in picks}
        assert blobs_hit == {0, 1, 2, 3}

    def test_medoid_collision_falls_back(self):
        # with p = n - 1 the medoid usually collides with a selected point
        X = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 4.0], [2.0, 2.0]])
        result = selection_pipeline(X, SelectionConfig(p=3, add_medoid=True))
        assert len(result.indices) == 4
        assert len(set(result.indices)) == 4
