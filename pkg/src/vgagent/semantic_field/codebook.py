"""Two-level k-means codebook: root clusters on feature and position, leaves on feature only."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.cluster.vq import kmeans2

from ..errors import EmptyScene

KMEANS_ITERS = 100
N_INIT = 10


def kmeans(x, k, seed=0, iters=KMEANS_ITERS, n_init=N_INIT):
    """Best of ``n_init`` k-means++ seeded Lloyd runs; k is capped at the number of distinct rows."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        raise EmptyScene("no points to cluster")
    k = max(1, min(k, len(np.unique(x, axis=0))))
    if k == 1:
        return x.mean(axis=0, keepdims=True), np.zeros(len(x), dtype=np.int64)
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(n_init):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # empty clusters are compacted below
            cent, lab = kmeans2(x, k, iter=iters, minit="++", seed=rng, missing="warn")
        inertia = ((x - cent[lab]) ** 2).sum()
        if best is None or inertia < best[0]:
            best = (inertia, cent, lab)
    _, cent, lab = best
    # compact labels so that empty clusters never leave gaps
    used, lab = np.unique(lab, return_inverse=True)
    return cent[used], lab.astype(np.int64)


def merge_close(centroids, labels, tol):
    """Union centroids closer than ``tol``; returns (merged centroids, relabelled assignment)."""
    k = len(centroids)
    parent = list(range(k))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(k):
        for j in range(i + 1, k):
            if np.linalg.norm(centroids[i] - centroids[j]) < tol:
                parent[find(j)] = find(i)
    roots = sorted({find(i) for i in range(k)})
    remap = np.array([roots.index(find(i)) for i in range(k)])
    new_labels = remap[labels]
    merged = np.array([centroids[remap == r].mean(axis=0) for r in range(len(roots))])
    return merged, new_labels


@dataclass
class Codebook:
    root_centroids: np.ndarray  # (k1', C + 3)
    leaf_centroids: list  # per root, (k2', C)
    assignment: np.ndarray  # (N, 2) -> (root, leaf)
    k2: int

    def quantized(self):
        """Per-splat quantized feature (its leaf centroid)."""
        return np.array([self.leaf_centroids[r][l] for r, l in self.assignment])

    @property
    def n_codes(self):
        return sum(len(c) for c in self.leaf_centroids)


def discretize_codebook(features, positions, k1, k2, pos_weight=0.5, seed=0, iters=KMEANS_ITERS,
                        leaf_features=None, merge_tol=0.0):
    """Root k-means on ``[f, pos_weight * x]``, then leaf k-means on features inside each root.

    ``leaf_features`` replaces the features used at leaf level (the refined ones); leaves
    closer than ``merge_tol`` are merged.
    """
    if k1 < 1 or k2 < 1:
        raise ValueError("k1 and k2 must be at least 1")
    f = np.asarray(features, dtype=np.float64)
    if len(f) == 0:
        raise EmptyScene("no splats")
    x = np.asarray(positions, dtype=np.float64)
    lf = f if leaf_features is None else np.asarray(leaf_features, dtype=np.float64)
    roots, root_lab = kmeans(np.hstack([f, pos_weight * x]), k1, seed, iters)
    return leaf_codebook(roots, root_lab, lf, k2, seed, iters, merge_tol)


def leaf_codebook(roots, root_lab, leaf_features, k2, seed=0, iters=KMEANS_ITERS, merge_tol=0.0):
    """Leaf k-means on features inside each root cluster."""
    assignment = np.zeros((len(root_lab), 2), dtype=np.int64)
    assignment[:, 0] = root_lab
    leaves = []
    for r in range(len(roots)):
        idx = np.flatnonzero(root_lab == r)
        cent, lab = kmeans(leaf_features[idx], k2, seed + 1 + r, iters)
        if merge_tol > 0:
            cent, lab = merge_close(cent, lab, merge_tol)
        leaves.append(cent)
        assignment[idx, 1] = lab
    return Codebook(np.asarray(roots), leaves, assignment, k2)


def segment_instances(codebook: Codebook) -> np.ndarray:
    """Flatten (root, leaf) pairs into integer instance ids."""
    return codebook.assignment[:, 0] * codebook.k2 + codebook.assignment[:, 1]
