"""Seeded k-means++ initialization and Lloyd's algorithm.

Shared by tissue-landmark clustering (2D) and mixture-model initialization
(4D). Everything is driven by an explicit numpy Generator, so results are
reproducible bit-for-bit for a fixed seed.
"""

from __future__ import annotations

import numpy as np


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Pick k initial centers with the k-means++ seeding rule."""
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    min_d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = float(min_d2.sum())
        if total <= 0.0:
            # All remaining points coincide with chosen centers.
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=min_d2 / total))
        centers[i] = points[idx]
        min_d2 = np.minimum(min_d2, np.sum((points - centers[i]) ** 2, axis=1))
    return centers


def lloyd(
    points: np.ndarray,
    k: int,
    rng: np.random.Generator,
    max_iters: int = 100,
    on_empty: str = "keep",
):
    """Run Lloyd's algorithm from a k-means++ start.

    Returns (centers, labels, converged). Convergence means the assignment
    stopped changing before ``max_iters`` passes.

    ``on_empty`` controls what happens to clusters that lose all members
    during an update: "keep" leaves the stale center in place (the caller
    decides whether an empty final cluster is an error), "farthest" reseats
    the center on the point currently worst-served by its own cluster,
    which guarantees every final cluster is non-empty.
    """
    n = points.shape[0]
    centers = kmeans_plus_plus(points, k, rng)
    labels = np.full(n, -1, dtype=int)
    converged = False
    for _ in range(max_iters):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(d2, axis=1)

        if on_empty == "farthest":
            own_d2 = d2[np.arange(n), new_labels].copy()
            for c in range(k):
                if not np.any(new_labels == c):
                    idx = int(np.argmax(own_d2))
                    new_labels[idx] = c
                    own_d2[idx] = -1.0

        if np.array_equal(new_labels, labels):
            converged = True
            break
        labels = new_labels
        for c in range(k):
            members = points[labels == c]
            if len(members):
                centers[c] = members.mean(axis=0)
    return centers, labels, converged
