"""View scoring for instance annotation and dimmed-background prompt images."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy.ndimage import binary_erosion

from ..errors import NoVisibleView
from .occlusion import ALPHA_MIN, footprint, occlusion_mask, render_clusters
from .render import render_colors

ALPHA_SCORE = 1.0
DIM = 0.3
CONTOUR = (255, 0, 0)


def mask_iou(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    union = (a | b).sum()
    return float((a & b).sum() / union) if union else 0.0


def view_score(iou, visibility_ratio, alpha_score=ALPHA_SCORE):
    return iou + alpha_score * visibility_ratio


@dataclass
class RankedView:
    view: int
    score: float
    iou: float
    visibility: float
    image: Image.Image | None = None


def highlight(rgb, mask, dim=DIM):
    """Dim everything outside ``mask`` and draw its one-pixel contour."""
    img = np.asarray(rgb, dtype=np.float64)
    if img.max() <= 1.0:
        img = img * 255.0
    mask = np.asarray(mask, dtype=bool)
    out = np.where(mask[..., None], img, img * dim)
    edge = mask & ~binary_erosion(mask, border_value=0)
    out[edge] = CONTOUR
    return Image.fromarray(np.clip(np.round(out), 0, 255).astype(np.uint8))


def rank_annotation_views(scene, labels, instance, views, alpha_score=ALPHA_SCORE, k_views=5, reference=None,
                          alpha_min=ALPHA_MIN, images=True):
    """Top views for describing ``instance``.

    The segmentation term is the IoU of the instance's visible mask with ``reference[v]`` (an
    external 2D mask for that view) when given, else with its projected footprint.
    """
    if k_views < 1:
        raise ValueError("k_views must be at least 1")
    ranked = []
    for v, cam in enumerate(views):
        cr = render_clusters(scene, labels, cam, alpha_min)
        foot = footprint(scene, labels, instance, cam, alpha_min, cr).reshape(-1)
        vis = occlusion_mask(scene, labels, instance, cam, alpha_min, cr).reshape(-1)
        n_foot = foot.sum()
        ratio = float(vis.sum() / n_foot) if n_foot else 0.0
        ref = foot if reference is None or reference[v] is None else np.asarray(reference[v]).reshape(-1)
        iou = mask_iou(vis, ref)
        ranked.append(RankedView(v, view_score(iou, ratio, alpha_score), iou, ratio))
    if all(r.score == 0 for r in ranked):
        raise NoVisibleView(f"instance {instance} is not visible in any view")
    ranked.sort(key=lambda r: (-r.score, r.view))
    top = ranked[:k_views]
    if images:
        for r in top:
            cam = views[r.view]
            vis = occlusion_mask(scene, labels, instance, cam, alpha_min)
            r.image = highlight(render_colors(scene, cam), vis)
    return top
