"""Instance-mask metrics and label matching."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import EmptyGroundTruth
from .render import blend_weights

ALPHA_MIN = 0.5


def evaluate_segmentation(pred_masks, gt_masks):
    """Macro-averaged IoU and pixel accuracy over paired masks."""
    if len(pred_masks) != len(gt_masks):
        raise ValueError("mask lists must be paired")
    if not gt_masks:
        raise EmptyGroundTruth("no ground-truth masks")
    ious, accs = [], []
    for p, g in zip(pred_masks, gt_masks):
        p = np.asarray(p, dtype=bool)
        g = np.asarray(g, dtype=bool)
        n_g = g.sum()
        if n_g == 0:
            raise EmptyGroundTruth("ground-truth mask is empty")
        inter = (p & g).sum()
        ious.append(inter / (p | g).sum())
        accs.append(inter / n_g)
    return float(np.mean(ious)), float(np.mean(accs))


def label_masks(scene, labels, cam, alpha_min=ALPHA_MIN, min_pixels=1, weights=None):
    """Per-label masks from the dominant label's share of the blend at each pixel."""
    bw = blend_weights(scene, cam) if weights is None else weights
    labels = np.asarray(labels)
    ids = np.unique(labels)
    share = np.stack([bw.W[:, labels == i].sum(axis=1) for i in ids], axis=1)
    win = ids[np.argmax(share, axis=1)]
    solid = bw.alpha > alpha_min
    out = {}
    for i in ids:
        m = (win == i) & solid
        if m.sum() >= min_pixels:
            out[int(i)] = m.reshape(cam.height, cam.width)
    return out


def match_labels(pred, gt):
    """Hungarian matching of predicted ids to ground-truth ids by splat overlap."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    p_ids, g_ids = np.unique(pred), np.unique(gt)
    overlap = np.array([[np.sum((pred == p) & (gt == g)) for g in g_ids] for p in p_ids])
    rows, cols = linear_sum_assignment(-overlap)
    return {int(g_ids[c]): int(p_ids[r]) for r, c in zip(rows, cols)}


def segmentation_scores(scene, pred_labels, views, gt_masks, weights=None):
    """mIoU / mAcc over every (view, instance) ground-truth mask."""
    match = match_labels(pred_labels, scene.gt)
    preds, gts = [], []
    for v, cam in enumerate(views):
        pm = label_masks(scene, pred_labels, cam, weights=None if weights is None else weights[v])
        empty = np.zeros((cam.height, cam.width), dtype=bool)
        for inst, g in gt_masks[v].items():
            gts.append(g)
            preds.append(pm.get(match.get(inst, -1), empty))
    return evaluate_segmentation(preds, gts)
