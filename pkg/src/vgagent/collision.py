"""Human-scene and human-human collision checks backed by a KD-tree."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyMesh
from .world import TriMesh

CAPSULE_RADIUS = 0.3
CAPSULE_HEIGHT = 1.7
BODY_POINTS = 64
SCENE_TAU = 0.05
SCENE_FRACTION = 0.10
HUMAN_MIN_DIST = 0.5
SAMPLE_DENSITY = 100.0  # points / m^2


def sample_triangle(a, b, c, density):
    """Deterministic lattice over a triangle with spacing <= 1/sqrt(density) along two edges,
    plus points along all three edges."""
    step = 1.0 / math.sqrt(density)
    m1 = max(1, math.ceil(np.linalg.norm(b - a) / step))
    m2 = max(1, math.ceil(np.linalg.norm(c - a) / step))
    i, j = np.meshgrid(np.arange(m1 + 1) / m1, np.arange(m2 + 1) / m2, indexing="ij")
    keep = i + j <= 1.0 + 1e-12
    u, v = i[keep], j[keep]
    pts = [a + np.outer(u, b - a) + np.outer(v, c - a)]
    m3 = max(1, math.ceil(np.linalg.norm(c - b) / step))
    t = np.arange(m3 + 1) / m3
    pts.append(b + np.outer(t, c - b))
    return np.concatenate(pts)


def sample_surface(mesh: TriMesh, density=SAMPLE_DENSITY) -> np.ndarray:
    if len(mesh.faces) == 0:
        raise EmptyMesh("cannot sample an empty mesh")
    if density <= 0:
        raise ValueError("density must be positive")
    chunks = [sample_triangle(*tri, density) for tri in mesh.triangles]
    return np.unique(np.round(np.concatenate(chunks), 9), axis=0)


class ProximityIndex:
    """Nearest-sample distance queries over one or more point sets."""

    def __init__(self, points_list):
        self.points = [np.asarray(p, dtype=np.float64).reshape(-1, 3) for p in points_list if len(p)]
        if not self.points:
            raise EmptyMesh("index has no points")
        self.trees = [cKDTree(p) for p in self.points]

    def query(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        best = np.full(len(pts), np.inf)
        for tree in self.trees:
            d, _ = tree.query(pts)
            best = np.minimum(best, d)
        return best

    def merged(self, other: "ProximityIndex") -> "ProximityIndex":
        idx = ProximityIndex.__new__(ProximityIndex)
        idx.points = self.points + other.points
        idx.trees = self.trees + other.trees
        return idx

    @property
    def size(self) -> int:
        return sum(len(p) for p in self.points)


def build_index(mesh: TriMesh, sample_density=SAMPLE_DENSITY) -> ProximityIndex:
    return ProximityIndex([sample_surface(mesh, sample_density)])


def _capsule_unit_samples(n, radius, height):
    """Area-proportional deterministic points on a z-aligned capsule with its base at z=0."""
    cyl_len = max(height - 2 * radius, 0.0)
    area_cyl = 2 * math.pi * radius * cyl_len
    area_caps = 4 * math.pi * radius**2
    n_cyl = int(round(n * area_cyl / (area_cyl + area_caps)))
    n_caps = n - n_cyl
    pts = []
    # golden-angle spiral on the caps (split as a sphere)
    golden = math.pi * (3 - math.sqrt(5))
    for k in range(n_caps):
        z = 1 - 2 * (k + 0.5) / n_caps
        r = math.sqrt(max(0.0, 1 - z * z))
        th = golden * k
        p = np.array([r * math.cos(th), r * math.sin(th), z]) * radius
        p[2] += radius if z < 0 else radius + cyl_len
        pts.append(p)
    for k in range(n_cyl):
        th = golden * k
        z = radius + cyl_len * (k + 0.5) / n_cyl
        pts.append(np.array([radius * math.cos(th), radius * math.sin(th), z]))
    return np.array(pts)


@dataclass(frozen=True)
class AgentBody:
    root: np.ndarray
    heading: float
    radius: float = CAPSULE_RADIUS
    height: float = CAPSULE_HEIGHT
    n_points: int = BODY_POINTS

    def __post_init__(self):
        if self.n_points < 20:
            raise ValueError("a body needs at least 20 sample points")
        root = np.zeros(3)
        r = np.asarray(self.root, dtype=np.float64)
        root[: len(r)] = r
        object.__setattr__(self, "root", root)

    @property
    def points(self) -> np.ndarray:
        local = _capsule_unit_samples(self.n_points, self.radius, self.height)
        c, s = math.cos(self.heading), math.sin(self.heading)
        rot = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])
        return local @ rot.T + self.root


def check_scene_collision(body: AgentBody, idx: ProximityIndex, tau=SCENE_TAU, frac=SCENE_FRACTION, points=None):
    """Collision iff strictly more than ``frac`` of body points lie closer than ``tau``."""
    pts = body.points if points is None else points
    d = idx.query(pts)
    violating = int(np.count_nonzero(d < tau))
    return violating / len(pts) > frac, violating


def check_human_collision(root_a, root_b, d_min=HUMAN_MIN_DIST) -> bool:
    a = np.asarray(root_a, dtype=np.float64)
    b = np.asarray(root_b, dtype=np.float64)
    return bool(np.linalg.norm(a - b) < d_min)
