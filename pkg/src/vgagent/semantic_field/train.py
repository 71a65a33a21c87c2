"""Stage-1 feature lifting by gradient descent on frozen splat geometry."""

from __future__ import annotations

import math

import numpy as np

from ..errors import Diverged
from .losses import EPS, feature_loss
from .render import blend_weights


class Adam:
    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = self.v = None
        self.t = 0

    def step(self, x, g):
        if self.m is None:
            self.m, self.v = np.zeros_like(x), np.zeros_like(x)
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * g
        self.v = self.b2 * self.v + (1 - self.b2) * g * g
        mh = self.m / (1 - self.b1**self.t)
        vh = self.v / (1 - self.b2**self.t)
        return x - self.lr * mh / (np.sqrt(vh) + self.eps)


def view_weights(scene, views):
    return [blend_weights(scene, cam) for cam in views]


def lifting_objective(features, weights, masks, lambda_c=1.0, lambda_s=0.1, eps=EPS):
    """Objective summed over views and its exact gradient w.r.t. per-splat features.

    The render is linear in the features, so the gradient is the pullback ``W^T dL/dF``.
    """
    total = 0.0
    grad = np.zeros_like(features)
    for bw, m in zip(weights, masks):
        if not len(m):
            continue
        F = bw.W @ features
        loss, gF = feature_loss(F, m, lambda_c, lambda_s, eps, grad=True)
        total += loss
        grad += bw.W.T @ gF
    return total, grad


def train_features(scene, views, masks, iters=200, lr=0.05, lambda_c=1.0, lambda_s=0.1, eps=EPS,
                   weights=None, history=None, optimizer="adam"):
    """Optimize per-splat features so rendered maps agree with the per-view instance masks."""
    if lambda_c < 0 or lambda_s < 0:
        raise ValueError("loss weights must be non-negative")
    weights = view_weights(scene, views) if weights is None else weights
    f = scene.features.copy()
    opt = Adam(lr) if optimizer == "adam" else None
    for it in range(iters):
        loss, g = lifting_objective(f, weights, masks, lambda_c, lambda_s, eps)
        if not math.isfinite(loss) or not np.all(np.isfinite(g)):
            raise Diverged("lifting loss is not finite", it)
        if history is not None:
            history.append(loss)
        if lr == 0:
            break
        f = opt.step(f, g) if opt else f - lr * g
    return scene.with_features(f)
