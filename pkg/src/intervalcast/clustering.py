"""K-means over day vectors: Lloyd iterations with k-means++ seeding,
within-cluster sum of squares, elbow scan, and nearest-centroid lookup.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .rng import TAG_KMEANS, substream

CLUSTERING_FORMAT_VERSION = 1
MAX_ITER = 300
RESTARTS = 10


@dataclass(frozen=True)
class Clustering:
    n_clusters: int
    centroids: np.ndarray       # (n_clusters, dim)
    assignment: dict            # day label -> cluster label
    wss: float
    seed: int

    def labels_for(self, days) -> np.ndarray:
        return np.array([self.assignment[j] for j in days])


def kmeans(vectors, n_clusters: int, seed: int, day_index=None) -> Clustering:
    """Deterministic k-means: k-means++ x 10 restarts, keep the lowest WSS.

    Each restart draws from its own (seed, restart) substream, so the result
    is independent of scheduling order.
    """
    X = _as_matrix(vectors)
    n = len(X)
    if n_clusters < 1 or n_clusters > n:
        raise DataError(f"n_clusters {n_clusters} outside [1, {n}]")
    if day_index is None:
        day_index = list(range(1, n + 1))
    if len(day_index) != n:
        raise DataError("day_index length mismatch")

    best = None
    for restart in range(RESTARTS):
        rng = substream(seed, TAG_KMEANS, restart)
        init = _kmeanspp_init(X, n_clusters, rng)
        labels, centroids, history = lloyd(X, init)
        total = history[-1]
        if best is None or total < best[0]:
            best = (total, labels, centroids)
    total, labels, centroids = best
    return Clustering(
        n_clusters=n_clusters,
        centroids=centroids,
        assignment={j: int(k) for j, k in zip(day_index, labels)},
        wss=float(total),
        seed=seed,
    )


def lloyd(X: np.ndarray, centroids: np.ndarray, max_iter: int = MAX_ITER):
    """Lloyd iterations from given centroids.

    Returns (labels, centroids, wss_history) where the history holds one
    WSS value per iteration (after the centroid update) and is non-increasing.
    """
    X = np.asarray(X, dtype=float)
    centroids = np.asarray(centroids, dtype=float).copy()
    k = len(centroids)
    labels = None
    history = []
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = d2.argmin(axis=1)
        new_labels = _repair_empty(X, centroids, new_labels, k)
        for c in range(k):
            mask = new_labels == c
            centroids[c] = X[mask].mean(axis=0)
        history.append(float(((X - centroids[new_labels]) ** 2).sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return labels, centroids, history


def _repair_empty(X, centroids, labels, k):
    # keep every cluster populated: move the globally farthest point into
    # each empty cluster
    for c in range(k):
        if not np.any(labels == c):
            dist_own = ((X - centroids[labels]) ** 2).sum(axis=1)
            # never strip a singleton cluster
            counts = np.bincount(labels, minlength=k)
            dist_own[counts[labels] <= 1] = -np.inf
            labels = labels.copy()
            labels[int(np.argmax(dist_own))] = c
    return labels


def _kmeanspp_init(X, k, rng):
    n = len(X)
    centers = [X[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = np.min(
            ((X[:, None, :] - np.asarray(centers)[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        total = d2.sum()
        if total == 0.0:
            p = np.full(n, 1.0 / n)
        else:
            p = d2 / total
        centers.append(X[int(rng.choice(n, p=p))])
    return np.asarray(centers)


def wss(clustering: Clustering, vectors, day_index=None) -> float:
    """Recompute total within-cluster sum of squares from the assignment."""
    X = _as_matrix(vectors)
    if day_index is None:
        day_index = list(range(1, len(X) + 1))
    total = 0.0
    for x, j in zip(X, day_index):
        if j not in clustering.assignment:
            raise DataError(f"day {j} has no cluster assignment")
        total += float(((x - clustering.centroids[clustering.assignment[j]]) ** 2).sum())
    return total


def elbow_scan(vectors, k_range, seed: int) -> list[tuple[int, float]]:
    """One kmeans run per k; returns (k, wss) pairs."""
    ks = list(k_range)
    if not ks:
        raise DataError("empty k range")
    return [(k, kmeans(vectors, k, seed).wss) for k in ks]


def nearest_cluster(clustering: Clustering, query) -> int:
    """Label of the centroid nearest the query; ties go to the smaller label."""
    q = np.asarray(query, dtype=float)
    if not np.isfinite(q).all():
        raise DataError("non-finite query vector")
    d2 = ((clustering.centroids - q) ** 2).sum(axis=1)
    return int(np.argmin(d2))


def _as_matrix(vectors) -> np.ndarray:
    X = np.asarray(vectors, dtype=float)
    if X.ndim != 2:
        raise DataError("expected a list of equal-length vectors")
    if not np.isfinite(X).all():
        raise DataError("non-finite vector")
    return X


def clustering_to_dict(c: Clustering) -> dict:
    return {
        "format_version": CLUSTERING_FORMAT_VERSION,
        "n_clusters": c.n_clusters,
        "centroids": c.centroids.tolist(),
        "assignment": {str(j): k for j, k in c.assignment.items()},
        "wss": c.wss,
        "seed": c.seed,
    }


def clustering_from_dict(doc: dict) -> Clustering:
    if doc.get("format_version") != CLUSTERING_FORMAT_VERSION:
        raise DataError(f"unsupported clustering format {doc.get('format_version')!r}")
    return Clustering(
        n_clusters=int(doc["n_clusters"]),
        centroids=np.asarray(doc["centroids"], dtype=float),
        assignment={int(j): int(k) for j, k in doc["assignment"].items()},
        wss=float(doc["wss"]),
        seed=int(doc["seed"]),
    )


def save_clustering(c: Clustering, path) -> None:
    with open(path, "w") as fh:
        json.dump(clustering_to_dict(c), fh)


def load_clustering(path) -> Clustering:
    with open(path) as fh:
        return clustering_from_dict(json.load(fh))
