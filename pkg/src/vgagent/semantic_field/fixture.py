"""Synthetic occluded multi-object splat scene with a ring of training views."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .render import Camera, SplatScene, look_at

FEATURE_DIM = 16

# (label, box min, box max, splat count, rgb)
OBJECTS = (
    ("wall", (-0.2, -1.6, 0.0), (0.2, 1.6, 2.0), 60, (0.6, 0.6, 0.6)),
    ("car", (0.7, -1.4, 0.0), (1.6, 0.4, 0.9), 44, (0.8, 0.1, 0.1)),
    ("hydrant", (0.5, 0.7, 0.0), (0.8, 1.0, 0.7), 24, (0.9, 0.8, 0.1)),
    ("trash can", (-0.9, 0.2, 0.0), (-0.5, 0.6, 0.9), 28, (0.1, 0.5, 0.2)),
    ("bench", (-1.6, -1.2, 0.0), (-0.8, 0.0, 0.5), 44, (0.4, 0.25, 0.1)),
)


@dataclass
class SplatFixture:
    scene: SplatScene
    views: list
    labels: tuple  # instance names by gt id


def _box_surface(rng, lo, hi, n):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    ext = hi - lo
    areas = np.array([ext[1] * ext[2], ext[1] * ext[2], ext[0] * ext[2], ext[0] * ext[2], ext[0] * ext[1]])
    face = rng.choice(5, size=n, p=areas / areas.sum())  # no bottom face
    u = rng.uniform(size=(n, 3))
    pts = lo + u * ext
    axis = np.array([0, 0, 1, 1, 2])[face]
    side = np.array([0, 1, 0, 1, 1])[face]
    pts[np.arange(n), axis] = np.where(side == 1, hi[axis], lo[axis])
    return pts


def ring_views(n=20, radius=5.0, target=(0.0, 0.0, 0.6), width=64, height=48, fx=56.0, seed=0) -> list[Camera]:
    rng = np.random.default_rng(seed)
    out = []
    for k in range(n):
        a = 2 * np.pi * k / n + rng.uniform(-0.05, 0.05)
        h = 1.0 + 1.2 * (k % 3) / 2
        out.append(look_at((radius * np.cos(a), radius * np.sin(a), h), target, width, height, fx))
    return out


def make_fixture(seed=0, n_views=20, dim=FEATURE_DIM, radius=0.16, objects=OBJECTS) -> SplatFixture:
    """Five objects (about 200 splats) packed so that they hide each other from most viewpoints."""
    rng = np.random.default_rng(seed)
    centers, gt, colors = [], [], []
    for k, (_, lo, hi, n, rgb) in enumerate(objects):
        centers.append(_box_surface(rng, lo, hi, n))
        gt.append(np.full(n, k))
        colors.append(np.clip(np.asarray(rgb) + rng.normal(0, 0.03, (n, 3)), 0, 1))
    centers = np.vstack(centers)
    n = len(centers)
    scene = SplatScene(
        centers,
        np.full(n, radius),
        rng.uniform(0.75, 0.95, n),
        np.vstack(colors),
        rng.normal(0, 0.1, (n, dim)),
        np.concatenate(gt),
    )
    return SplatFixture(scene, ring_views(n_views, seed=seed), tuple(o[0] for o in objects))
