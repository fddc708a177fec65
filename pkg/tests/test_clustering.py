import itertools

import numpy as np
import pytest

from intervalcast.clustering import (
    Clustering,
    clustering_from_dict,
    clustering_to_dict,
    elbow_scan,
    kmeans,
    lloyd,
    load_clustering,
    nearest_cluster,
    save_clustering,
    wss,
)
from intervalcast.errors import DataError


def day_shape(level, seed=None, dim=96):
    base = level * (1.0 + 0.3 * np.sin(2 * np.pi * np.arange(dim) / dim))
    if seed is None:
        return base
    return base + np.random.default_rng(seed).normal(0, 0.05 * level, dim)


def best_two_partition(X):
    """Exhaustive oracle: minimum-WSS 2-partition over all assignments."""
    n = len(X)
    best_wss, best = np.inf, None
    for bits in itertools.product([0, 1], repeat=n):
        if len(set(bits)) < 2:
            continue
        total = 0.0
        for c in (0, 1):
            pts = X[np.array(bits) == c]
            total += ((pts - pts.mean(axis=0)) ** 2).sum()
        if total < best_wss:
            best_wss, best = total, bits
    return best_wss, best


class TestKmeans:
    def test_one_cluster_per_vector(self):
        X = [day_shape(lvl) for lvl in (1, 2, 3, 4)]
        c = kmeans(X, 4, seed=0)
        assert c.wss == pytest.approx(0.0, abs=1e-18)
        assert sorted(c.assignment.values()) == [0, 1, 2, 3]

    def test_single_cluster_closed_form(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(size=(10, 96))
        c = kmeans(X, 1, seed=0)
        assert np.allclose(c.centroids[0], X.mean(axis=0))
        assert c.wss == pytest.approx(((X - X.mean(axis=0)) ** 2).sum())

    def test_matches_exhaustive_two_partition(self):
        X = np.array(
            [day_shape(1.0, s) for s in range(3)] + [day_shape(20.0, s) for s in range(3)]
        )
        oracle_wss, oracle_bits = best_two_partition(X)
        c = kmeans(X, 2, seed=1)
        labels = np.array([c.assignment[j] for j in range(1, 7)])
        same = np.array_equal(labels, np.array(oracle_bits))
        flipped = np.array_equal(1 - labels, np.array(oracle_bits))
        assert same or flipped
        assert c.wss == pytest.approx(oracle_wss)

    def test_determinism(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(size=(20, 96))
        a = kmeans(X, 3, seed=42)
        b = kmeans(X, 3, seed=42)
        assert a.assignment == b.assignment
        assert np.array_equal(a.centroids, b.centroids)

    def test_permutation_invariance_of_partition(self):
        # separation guarantees all restarts hit the one global optimum, so
        # the recovered partition cannot depend on input order
        rng = np.random.default_rng(3)
        X = np.array([day_shape(lvl, s) for lvl in (1.0, 10.0, 100.0) for s in range(4)])
        perm = rng.permutation(12)
        a = kmeans(X, 3, seed=5)
        b = kmeans(X[perm], 3, seed=5, day_index=list(perm + 1))
        parts_a = frozenset(
            frozenset(j for j, k in a.assignment.items() if k == c) for c in range(3)
        )
        parts_b = frozenset(
            frozenset(j for j, k in b.assignment.items() if k == c) for c in range(3)
        )
        assert parts_a == parts_b

    def test_too_many_clusters(self):
        with pytest.raises(DataError):
            kmeans(np.ones((3, 96)), 4, seed=0)

    def test_non_finite_rejected(self):
        X = np.ones((5, 96))
        X[0, 0] = np.inf
        with pytest.raises(DataError):
            kmeans(X, 2, seed=0)

    def test_lloyd_wss_monotone(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(size=(40, 10))
        init = X[:4].copy()
        _, _, history = lloyd(X, init)
        assert all(b <= a + 1e-9 for a, b in zip(history, history[1:]))

    def test_assignment_optimal_at_fixpoint(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(size=(30, 8))
        c = kmeans(X, 3, seed=6, day_index=list(range(30)))
        for j, x in enumerate(X):
            assert c.assignment[j] == nearest_cluster(c, x)


class TestWss:
    def test_identical_vectors(self):
        X = np.ones((5, 96))
        c = kmeans(X, 1, seed=0)
        assert wss(c, X) == 0.0

    def test_hand_arithmetic(self):
        X = np.stack([np.zeros(96), np.full(96, 2.0)])
        c = kmeans(X, 1, seed=0)
        assert wss(c, X) == pytest.approx(192.0)

    def test_relabel_invariance(self):
        rng = np.random.default_rng(6)
        X = rng.uniform(size=(8, 96))
        c = kmeans(X, 2, seed=7)
        swapped = Clustering(
            n_clusters=2,
            centroids=c.centroids[::-1].copy(),
            assignment={j: 1 - k for j, k in c.assignment.items()},
            wss=c.wss,
            seed=c.seed,
        )
        assert wss(swapped, X) == pytest.approx(wss(c, X))

    def test_recomputes_from_fields(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(size=(15, 96))
        c = kmeans(X, 3, seed=8)
        assert wss(c, X) == pytest.approx(c.wss, rel=1e-6)

    def test_dangling_assignment(self):
        X = np.ones((3, 96))
        c = kmeans(X, 1, seed=0)
        with pytest.raises(DataError, match="no cluster assignment"):
            wss(c, X, day_index=[1, 2, 99])


class TestElbow:
    def test_single_k(self):
        rng = np.random.default_rng(8)
        X = rng.uniform(size=(10, 96))
        scan = elbow_scan(X, range(1, 2), seed=0)
        assert len(scan) == 1
        assert scan[0][0] == 1
        assert scan[0][1] == pytest.approx(((X - X.mean(axis=0)) ** 2).sum())

    def test_planted_clusters_show_elbow(self):
        X = np.array(
            [day_shape(lvl, s) for lvl in (1.0, 5.0, 25.0, 125.0) for s in range(8)]
        )
        scan = dict(elbow_scan(X, range(1, 7), seed=1))
        drop_to_4 = (scan[3] - scan[4]) / scan[3]
        drop_to_5 = (scan[4] - scan[5]) / scan[4]
        assert drop_to_4 > drop_to_5

    def test_duplicates_reach_zero(self):
        X = np.array([day_shape(1.0), day_shape(1.0), day_shape(3.0), day_shape(3.0)])
        scan = dict(elbow_scan(X, range(1, 4), seed=2))
        assert scan[2] == pytest.approx(0.0, abs=1e-18)

    def test_empty_range(self):
        with pytest.raises(DataError, match="empty"):
            elbow_scan(np.ones((4, 96)), range(0), seed=0)


class TestNearestCluster:
    def _clustering(self, centroids):
        return Clustering(
            n_clusters=len(centroids),
            centroids=np.asarray(centroids, dtype=float),
            assignment={},
            wss=0.0,
            seed=0,
        )

    def test_exact_centroid(self):
        c = self._clustering([np.zeros(96), np.full(96, 5.0)])
        assert nearest_cluster(c, np.full(96, 5.0)) == 1

    def test_tie_goes_to_smaller_label(self):
        c = self._clustering([np.zeros(96), np.full(96, 2.0)])
        assert nearest_cluster(c, np.full(96, 1.0)) == 0

    def test_matches_linear_scan_oracle(self):
        rng = np.random.default_rng(9)
        cents = rng.uniform(size=(4, 96))
        c = self._clustering(cents)
        for _ in range(20):
            q = rng.uniform(size=96)
            dists = [((q - cent) ** 2).sum() for cent in cents]
            assert nearest_cluster(c, q) == int(np.argmin(dists))


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(10)
        X = rng.uniform(size=(12, 96))
        c = kmeans(X, 3, seed=11)
        path = tmp_path / "c.json"
        save_clustering(c, path)
        loaded = load_clustering(path)
        assert loaded.assignment == c.assignment
        assert np.allclose(loaded.centroids, c.centroids)
        assert loaded.wss == c.wss

    def test_version_check(self):
        doc = clustering_to_dict(kmeans(np.ones((3, 96)), 1, seed=0))
        doc["format_version"] = 99
        with pytest.raises(DataError, match="format"):
            clustering_from_dict(doc)
