"""Lifting, codebook discretization and evaluation, with the two occlusion mechanisms switchable."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import Diverged
from .codebook import Codebook, kmeans, leaf_codebook, segment_instances
from .evaluate import label_masks, segmentation_scores
from .occlusion import ALPHA_MIN, footprint, occlusion_mask, render_clusters
from .train import Adam, train_features, view_weights


@dataclass(frozen=True)
class FieldConfig:
    lift_iters: int = 150
    lift_lr: float = 0.05
    lambda_c: float = 1.0
    lambda_s: float = 0.1
    k1: int = 4
    k2: int = 2
    pos_weight: float = 0.5
    quant_iters: int = 100
    quant_lr: float = 0.02
    delta_vis: int = 50
    merge_tol: float = 0.5
    min_mask_pixels: int = 4
    use_occlusion: bool = True
    use_view_selection: bool = True
    seed: int = 0


@dataclass
class FieldResult:
    labels: np.ndarray
    miou: float
    macc: float
    root_labels: np.ndarray
    refined: np.ndarray
    codebook: Codebook
    stats: dict = field(default_factory=dict)


def gt_masks(scene, views, weights, min_pixels=4):
    return [label_masks(scene, scene.gt, cam, min_pixels=min_pixels, weights=w) for cam, w in zip(views, weights)]


def refine_cluster(targets, cluster_weights, pixel_masks, f0, iters, lr, rng):
    """Minimize the masked L1 gap between the cluster-only render and the scene render.

    One training view is drawn per iteration and the loss is averaged over its masked pixels,
    the usual per-view schedule of splat training.
    """
    g = f0.copy()
    if not cluster_weights:
        return g
    opt = Adam(lr)
    for it in range(iters):
        v = int(rng.integers(len(cluster_weights)))
        m = pixel_masks[v]
        W = cluster_weights[v][m]
        r = W @ g - targets[v][m]
        loss = np.abs(r).mean()
        if not math.isfinite(loss):
            raise Diverged("quantization loss is not finite", it)
        g = opt.step(g, W.T @ np.sign(r) / r.size)
    return g


def unit_rows(x):
    n = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.where(n > 0, n, 1.0)


def unit_positions(x):
    """Center positions and scale them into the unit ball."""
    c = x - x.mean(axis=0)
    r = np.linalg.norm(c, axis=1).max()
    return c / r if r > 0 else c


def quantize(scene, views, weights, cfg: FieldConfig, features):
    """Root clustering, per-cluster refinement under L_q, then leaf clustering."""
    space = np.hstack([unit_rows(features), cfg.pos_weight * unit_positions(scene.centers)])
    roots, root_lab = kmeans(space, cfg.k1, cfg.seed)
    targets = [w.W @ features for w in weights]
    rendered = [render_clusters(scene, root_lab, cam) for cam in views]
    refined = features.copy()
    used_views = {}
    for c in range(len(roots)):
        idx = np.flatnonzero(root_lab == c)
        sel, masks, Ws, Fs = [], [], [], []
        for v, cam in enumerate(views):
            cr = rendered[v]
            if cfg.use_occlusion:
                m = occlusion_mask(scene, root_lab, c, cam, rendered=cr).reshape(-1)
            else:
                m = footprint(scene, root_lab, c, cam, rendered=cr).reshape(-1)
            vis = int(occlusion_mask(scene, root_lab, c, cam, rendered=cr).sum())
            if cfg.use_view_selection and vis <= cfg.delta_vis:
                continue
            if not m.any():
                continue
            sel.append(v)
            masks.append(m)
            Ws.append(cr.weights[cr.row(c)].W)
            Fs.append(targets[v])
        used_views[c] = sel
        rng = np.random.default_rng([cfg.seed, c])
        refined[idx] = refine_cluster(Fs, Ws, masks, features[idx], cfg.quant_iters, cfg.quant_lr, rng)
    return root_lab, refined, used_views


def run_pipeline(scene, views, cfg: FieldConfig = FieldConfig(), weights=None, lifted=None) -> FieldResult:
    weights = view_weights(scene, views) if weights is None else weights
    gts = gt_masks(scene, views, weights, cfg.min_mask_pixels)
    if lifted is None:
        masks = [list(m.values()) for m in gts]
        lifted = train_features(scene, views, masks, cfg.lift_iters, cfg.lift_lr, cfg.lambda_c, cfg.lambda_s,
                                weights=weights)
    f = lifted.features
    root_lab, refined, used = quantize(scene, views, weights, cfg, f)
    roots = np.array([refined[root_lab == c].mean(axis=0) for c in range(root_lab.max() + 1)])
    book = leaf_codebook(roots, root_lab, unit_rows(refined), cfg.k2, cfg.seed, merge_tol=cfg.merge_tol)
    labels = segment_instances(book)
    miou, macc = segmentation_scores(scene, labels, views, gts, weights)
    return FieldResult(labels, miou, macc, root_lab, refined, book, {"views": used})
