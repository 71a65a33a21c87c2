"""Occlusion-aware cluster masks and visibility-driven view selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnknownCluster
from .render import blend_weights

ALPHA_MIN = 0.5


@dataclass
class ClusterRender:
    """Per-cluster alpha and expected depth for one camera, each cluster rendered on its own."""

    ids: np.ndarray  # (M,)
    alpha: np.ndarray  # (M, P)
    depth: np.ndarray  # (M, P), inf where the cluster's alpha is at most alpha_min
    weights: list  # per-cluster BlendWeights
    members: list  # per-cluster splat indices
    shape: tuple

    def row(self, cluster_id):
        hit = np.flatnonzero(self.ids == cluster_id)
        if len(hit) == 0:
            raise UnknownCluster(f"cluster {cluster_id} has no splats")
        return int(hit[0])


def render_clusters(scene, labels, cam, alpha_min=ALPHA_MIN) -> ClusterRender:
    labels = np.asarray(labels)
    ids = np.unique(labels)
    alphas, depths, weights, members = [], [], [], []
    for c in ids:
        idx = np.flatnonzero(labels == c)
        bw = blend_weights(scene, cam, idx)
        a = bw.alpha
        d = bw.expected_depth()
        alphas.append(a)
        depths.append(np.where(a > alpha_min, d, np.inf))
        weights.append(bw)
        members.append(idx)
    P = cam.n_pixels
    return ClusterRender(ids, np.array(alphas).reshape(-1, P), np.array(depths).reshape(-1, P), weights, members,
                         (cam.height, cam.width))


def occlusion_mask(scene, labels, cluster_id, cam, alpha_min=ALPHA_MIN, rendered=None) -> np.ndarray:
    """Pixels where ``cluster_id`` is opaque enough and nearer than every other cluster."""
    cr = render_clusters(scene, labels, cam, alpha_min) if rendered is None else rendered
    r = cr.row(cluster_id)
    others = np.delete(cr.depth, r, axis=0)
    occ = others.min(axis=0) if len(others) else np.full(cr.depth.shape[1], np.inf)
    mask = (cr.alpha[r] > alpha_min) & (cr.depth[r] < occ)
    return mask.reshape(cr.shape)


def footprint(scene, labels, cluster_id, cam, alpha_min=ALPHA_MIN, rendered=None) -> np.ndarray:
    cr = render_clusters(scene, labels, cam, alpha_min) if rendered is None else rendered
    return (cr.alpha[cr.row(cluster_id)] > alpha_min).reshape(cr.shape)


def select_training_views(scene, labels, cluster_id, views, delta_vis, alpha_min=ALPHA_MIN, rendered=None):
    """Views whose visible pixel count for the cluster exceeds ``delta_vis``.

    Returns ``(selected view indices, per-view visible pixel counts)``.
    """
    if delta_vis < 0:
        raise ValueError("delta_vis must be non-negative")
    scores = []
    for v, cam in enumerate(views):
        cr = None if rendered is None else rendered[v]
        scores.append(int(occlusion_mask(scene, labels, cluster_id, cam, alpha_min, cr).sum()))
    scores = np.array(scores)
    return [v for v in range(len(views)) if scores[v] > delta_vis], scores
