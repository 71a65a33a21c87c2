"""Isotropic splats with frozen geometry and dense alpha-blending weights."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ALPHA_CAP = 0.99  # keep transmittance strictly positive
NEAR = 0.05


@dataclass
class Splat:
    center: np.ndarray
    radius: float
    opacity: float
    color: np.ndarray
    feature: np.ndarray
    gt_instance: int = -1


@dataclass
class SplatScene:
    """Structure-of-arrays splat collection. Geometry never changes after construction."""

    centers: np.ndarray  # (N, 3)
    radii: np.ndarray  # (N,)
    opacity: np.ndarray  # (N,)
    colors: np.ndarray  # (N, 3) in [0, 1]
    features: np.ndarray  # (N, C)
    gt: np.ndarray = None  # (N,) int

    def __post_init__(self):
        self.centers = np.asarray(self.centers, dtype=np.float64).reshape(-1, 3)
        n = len(self.centers)
        self.radii = np.asarray(self.radii, dtype=np.float64).reshape(n)
        self.opacity = np.asarray(self.opacity, dtype=np.float64).reshape(n)
        self.colors = np.asarray(self.colors, dtype=np.float64).reshape(n, 3)
        f = np.asarray(self.features, dtype=np.float64)
        self.features = f.reshape(n, -1) if n else f.reshape(0, f.shape[-1] if f.ndim == 2 else 0)
        self.gt = np.full(n, -1) if self.gt is None else np.asarray(self.gt, dtype=np.int64).reshape(n)
        if np.any(self.radii <= 0):
            raise ValueError("splat radius must be positive")
        if np.any((self.opacity <= 0) | (self.opacity >= 1)):
            raise ValueError("opacity must lie in (0, 1)")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features must be finite")

    def __len__(self):
        return len(self.centers)

    @property
    def dim(self):
        return self.features.shape[1]

    def with_features(self, features):
        return SplatScene(self.centers, self.radii, self.opacity, self.colors, features, self.gt)

    def subset(self, idx):
        idx = np.asarray(idx)
        return SplatScene(self.centers[idx], self.radii[idx], self.opacity[idx], self.colors[idx],
                          self.features[idx], self.gt[idx])

    @classmethod
    def from_splats(cls, splats):
        splats = list(splats)
        return cls([s.center for s in splats], [s.radius for s in splats], [s.opacity for s in splats],
                   [s.color for s in splats], [s.feature for s in splats], [s.gt_instance for s in splats])

    def to_json(self):
        return [
            {"center": c.tolist(), "radius": float(r), "opacity": float(o), "color": col.tolist(),
             "feature": f.tolist(), "gt_instance": int(g)}
            for c, r, o, col, f, g in zip(self.centers, self.radii, self.opacity, self.colors, self.features, self.gt)
        ]

    @classmethod
    def from_json(cls, items, dim=16):
        splats = [Splat(np.array(d["center"]), d["radius"], d["opacity"], np.array(d["color"]),
                        np.array(d.get("feature", np.zeros(dim))), d.get("gt_instance", -1)) for d in items]
        return cls.from_splats(splats)

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


@dataclass(frozen=True)
class Camera:
    pose: np.ndarray  # 4x4 world -> camera; camera looks down +z, x right, y down
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "pose", np.asarray(self.pose, dtype=np.float64).reshape(4, 4))
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside the image")

    @property
    def n_pixels(self):
        return self.width * self.height

    def to_json(self):
        return {"pose": self.pose.reshape(-1).tolist(), "fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy,
                "width": self.width, "height": self.height}

    @classmethod
    def from_json(cls, d):
        return cls(np.array(d["pose"]).reshape(4, 4), d["fx"], d["fy"], d["cx"], d["cy"], d["width"], d["height"])


def look_at(eye, target, width=64, height=48, fx=56.0, fy=None, up=(0.0, 0.0, 1.0)) -> Camera:
    eye = np.asarray(eye, dtype=np.float64)
    z = np.asarray(target, dtype=np.float64) - eye
    z /= np.linalg.norm(z)
    x = np.cross(z, up)
    x /= np.linalg.norm(x)
    y = np.cross(z, x)
    R = np.stack([x, y, z])
    pose = np.eye(4)
    pose[:3, :3] = R
    pose[:3, 3] = -R @ eye
    return Camera(pose, fx, fx if fy is None else fy, (width - 1) / 2, (height - 1) / 2, width, height)


@dataclass
class BlendWeights:
    """Per-pixel blending weights ``W[p, i] = T_i(p) alpha_i(p)`` for one camera."""

    W: np.ndarray  # (P, N)
    depth: np.ndarray  # (N,) camera depth of each splat
    shape: tuple = field(default=(0, 0))

    @property
    def alpha(self):
        return self.W.sum(axis=1)

    def blend(self, values):
        return self.W @ values

    def expected_depth(self):
        a = self.alpha
        d = self.W @ self.depth
        out = np.full(len(a), np.inf)
        np.divide(d, a, out=out, where=a > 0)
        return out


def blend_weights(scene: SplatScene, cam: Camera, idx=None) -> BlendWeights:
    """Front-to-back blending weights of ``scene`` (or of the subset ``idx``) seen from ``cam``."""
    if idx is None:
        centers, radii, opac = scene.centers, scene.radii, scene.opacity
    else:
        idx = np.asarray(idx)
        centers, radii, opac = scene.centers[idx], scene.radii[idx], scene.opacity[idx]
    n = len(centers)
    P = cam.n_pixels
    cc = centers @ cam.pose[:3, :3].T + cam.pose[:3, 3]
    z = cc[:, 2]
    W = np.zeros((P, n))
    front = z > NEAR
    if not front.any():
        return BlendWeights(W, z, (cam.height, cam.width))
    zf = np.where(front, z, 1.0)
    mu = np.column_stack([cam.fx * cc[:, 0] / zf + cam.cx, cam.fy * cc[:, 1] / zf + cam.cy])
    sig = cam.fx * radii / zf
    vv, uu = np.mgrid[0 : cam.height, 0 : cam.width]
    px = np.column_stack([uu.ravel(), vv.ravel()]).astype(np.float64)
    d2 = ((px[:, None, :] - mu[None, :, :]) ** 2).sum(-1)
    a = np.minimum(opac[None, :] * np.exp(-d2 / (2 * sig[None, :] ** 2)), ALPHA_CAP)
    a[:, ~front] = 0.0
    order = np.argsort(z, kind="stable")
    a_sorted = a[:, order]
    log_t = np.cumsum(np.log1p(-a_sorted), axis=1)
    T = np.exp(np.concatenate([np.zeros((P, 1)), log_t[:, :-1]], axis=1))
    W[:, order] = T * a_sorted
    return BlendWeights(W, z, (cam.height, cam.width))


@dataclass
class FeatureMap:
    features: np.ndarray  # (H, W, C)
    depth: np.ndarray  # (H, W), expected depth, inf where alpha is 0
    alpha: np.ndarray  # (H, W)


def render_feature_map(scene: SplatScene, cam: Camera, features=None) -> FeatureMap:
    f = scene.features if features is None else np.asarray(features, dtype=np.float64)
    H, Wd = cam.height, cam.width
    if len(scene) == 0:
        return FeatureMap(np.zeros((H, Wd, f.shape[1] if f.ndim == 2 else 0)), np.full((H, Wd), np.inf), np.zeros((H, Wd)))
    bw = blend_weights(scene, cam)
    return FeatureMap(bw.blend(f).reshape(H, Wd, -1), bw.expected_depth().reshape(H, Wd), bw.alpha.reshape(H, Wd))


def render_colors(scene: SplatScene, cam: Camera, background=(0.0, 0.0, 0.0)) -> np.ndarray:
    bw = blend_weights(scene, cam)
    img = bw.blend(scene.colors) + (1 - bw.alpha)[:, None] * np.asarray(background)
    return img.reshape(cam.height, cam.width, 3)
