"""Feature-lifting losses with analytic gradients w.r.t. the rendered feature map."""

from __future__ import annotations

import numpy as np

from ..errors import EmptyMask, ShapeMismatch, TooFewMasks

EPS = 1e-8


def _flat(F):
    F = np.asarray(F, dtype=np.float64)
    return F.reshape(-1, F.shape[-1])


def _pixels(masks, n_pixels):
    out = []
    for m in masks:
        idx = np.flatnonzero(np.asarray(m).reshape(-1))
        if len(idx) == 0:
            raise EmptyMask("mask has no pixels")
        if idx[-1] >= n_pixels:
            raise ShapeMismatch("mask larger than feature map")
        out.append(idx)
    return out


def mask_means(F, masks):
    Ff = _flat(F)
    return np.stack([Ff[idx].mean(axis=0) for idx in _pixels(masks, len(Ff))])


def smoothing_loss(F, masks, grad=False):
    """Sum over masks of squared deviations from the mask mean."""
    Ff = _flat(F)
    pix = _pixels(masks, len(Ff))
    if not pix:
        raise EmptyMask("no masks")
    loss = 0.0
    g = np.zeros_like(Ff)
    for idx in pix:
        dev = Ff[idx] - Ff[idx].mean(axis=0)
        loss += float((dev**2).sum())
        # the mean's own dependence cancels because deviations sum to zero
        g[idx] += 2 * dev
    return (loss, g.reshape(np.shape(F))) if grad else loss


def contrastive_loss(F, masks, eps=EPS, grad=False):
    """Mean inverse squared distance between every ordered pair of mask means."""
    Ff = _flat(F)
    pix = _pixels(masks, len(Ff))
    K = len(pix)
    if K < 2:
        raise TooFewMasks(f"need at least 2 masks, got {K}")
    means = np.stack([Ff[idx].mean(axis=0) for idx in pix])
    diff = means[:, None, :] - means[None, :, :]
    den = (diff**2).sum(-1) + eps
    off = ~np.eye(K, dtype=bool)
    loss = float((1.0 / den[off]).sum() / (K * (K - 1)))
    if not grad:
        return loss
    # each unordered pair appears twice, hence the factor 4
    coef = np.where(off, -4.0 / den**2, 0.0) / (K * (K - 1))
    g_means = (coef[:, :, None] * diff).sum(axis=1)
    g = np.zeros_like(Ff)
    for k, idx in enumerate(pix):
        g[idx] += g_means[k] / len(idx)
    return loss, g.reshape(np.shape(F))


def feature_loss(F, masks, lambda_c=1.0, lambda_s=0.1, eps=EPS, grad=False):
    """Weighted lifting objective for one view; the contrastive term needs at least two masks."""
    ls, gs = smoothing_loss(F, masks, grad=True)
    loss, g = lambda_s * ls, lambda_s * gs
    if lambda_c > 0 and len(masks) >= 2:
        lc, gc = contrastive_loss(F, masks, eps, grad=True)
        loss, g = loss + lambda_c * lc, g + lambda_c * gc
    return (loss, g) if grad else loss


def quantization_loss(F, Fq, mask=None):
    """L1 distance between two feature maps, optionally restricted to ``mask``."""
    F = np.asarray(F, dtype=np.float64)
    Fq = np.asarray(Fq, dtype=np.float64)
    if F.shape != Fq.shape:
        raise ShapeMismatch(f"{F.shape} vs {Fq.shape}")
    d = np.abs(_flat(F) - _flat(Fq))
    if mask is not None:
        m = np.asarray(mask, dtype=bool).reshape(-1)
        if len(m) != len(d):
            raise ShapeMismatch("mask does not match feature map")
        d = d[m]
    return float(d.sum())
