"""Geometry substrate: meshes, gravity alignment, BEV occupancy, landmarks, A*."""

from __future__ import annotations

import heapq
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePlane, EmptyMesh, OutOfBounds, Unreachable

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class TriMesh:
    vertices: np.ndarray  # (V, 3) float64, meters
    faces: np.ndarray  # (F, 3) int64

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh has non-finite coordinates")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face index out of range")
        if f.size and np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise ValueError("face with repeated vertices")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]

    def face_normals(self) -> np.ndarray:
        tri = self.triangles
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(n, axis=1, keepdims=True)
        return n / np.where(norm > 0, norm, 1.0)

    def face_areas(self) -> np.ndarray:
        tri = self.triangles
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def bounds(self):
        if len(self.vertices) == 0:
            raise EmptyMesh("mesh has no vertices")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def transformed(self, rotation, translation) -> "TriMesh":
        v = self.vertices @ np.asarray(rotation).T + np.asarray(translation)
        return TriMesh(v, self.faces)

    def subset(self, face_mask) -> "TriMesh":
        return TriMesh(self.vertices, self.faces[np.asarray(face_mask, dtype=bool)])

    @staticmethod
    def concatenate(meshes) -> "TriMesh":
        verts, faces, offset = [], [], 0
        for m in meshes:
            verts.append(m.vertices)
            faces.append(m.faces + offset)
            offset += len(m.vertices)
        if not verts:
            return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
        return TriMesh(np.concatenate(verts), np.concatenate(faces))


def box_mesh(lo, hi) -> TriMesh:
    """Closed axis-aligned box with outward-facing triangles."""
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    v = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ], dtype=np.float64)
    f = np.array([
        [0, 2, 1], [0, 3, 2],  # bottom
        [4, 5, 6], [4, 6, 7],  # top
        [0, 1, 5], [0, 5, 4],  # -y
        [1, 2, 6], [1, 6, 5],  # +x
        [2, 3, 7], [2, 7, 6],  # +y
        [3, 0, 4], [3, 4, 7],  # -x
    ])
    return TriMesh(v, f)


def cylinder_mesh(center_xy, radius, height, segments=12, z0=0.0) -> TriMesh:
    cx, cy = center_xy
    ang = np.arange(segments) * (2 * np.pi / segments)
    ring = np.stack([cx + radius * np.cos(ang), cy + radius * np.sin(ang)], axis=1)
    bottom = np.column_stack([ring, np.full(segments, z0)])
    top = np.column_stack([ring, np.full(segments, z0 + height)])
    v = np.vstack([bottom, top, [[cx, cy, z0], [cx, cy, z0 + height]]])
    cb, ct = 2 * segments, 2 * segments + 1
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [[i, j, segments + j], [i, segments + j, segments + i]]
        faces += [[cb, j, i], [ct, segments + i, segments + j]]
    return TriMesh(v, np.array(faces))


def quad_mesh(lo_xy, hi_xy, z=0.0) -> TriMesh:
    (x0, y0), (x1, y1) = lo_xy, hi_xy
    v = np.array([[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]], dtype=np.float64)
    return TriMesh(v, np.array([[0, 1, 2], [0, 2, 3]]))


# --------------------------------------------------------------------------- io


def load_obj(path) -> TriMesh:
    verts, faces = [], []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            try:
                if parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    idx = [int(p.split("/")[0]) for p in parts[1:]]
                    idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                    for k in range(1, len(idx) - 1):
                        faces.append([idx[0], idx[k], idx[k + 1]])
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: bad record {line.strip()!r}") from exc
    return TriMesh(np.array(verts, dtype=np.float64).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3))


def save_obj(mesh: TriMesh, path) -> None:
    with open(path, "w") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.6f} {y:.6f} {z:.6f}\n")
        for a, b, c in mesh.faces:
            fh.write(f"f {a + 1} {b + 1} {c + 1}\n")


# ------------------------------------------------------------------ alignment


@dataclass(frozen=True)
class GroundFrame:
    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        if np.linalg.norm(r.T @ r - np.eye(3)) >= 1e-9:
            raise ValueError("rotation is not orthonormal")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))

    @classmethod
    def identity(cls):
        return cls(np.eye(3), np.zeros(3))

    def apply(self, points):
        return np.asarray(points) @ self.rotation.T + self.translation

    def apply_mesh(self, mesh: TriMesh) -> TriMesh:
        return mesh.transformed(self.rotation, self.translation)


def rotation_between(a, b) -> np.ndarray:
    """Minimal rotation taking unit vector ``a`` onto unit vector ``b``."""
    a = np.asarray(a, dtype=np.float64) / np.linalg.norm(a)
    b = np.asarray(b, dtype=np.float64) / np.linalg.norm(b)
    v = np.cross(a, b)
    c = float(np.dot(a, b))
    s = np.linalg.norm(v)
    if s < 1e-15:
        if c > 0:
            return np.eye(3)
        # antiparallel: rotate pi about any axis orthogonal to a
        axis = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(axis) < 1e-6:
            axis = np.cross(a, [0.0, 1.0, 0.0])
        axis /= np.linalg.norm(axis)
        return 2.0 * np.outer(axis, axis) - np.eye(3)
    k = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    r = np.eye(3) + k + k @ k * ((1 - c) / s**2)
    # re-orthonormalize to keep the 1e-9 frame invariant
    u, _, vt = np.linalg.svd(r)
    return u @ vt


def _fit_plane(points):
    centroid = points.mean(axis=0)
    _, _, vt = np.linalg.svd(points - centroid)
    normal = vt[-1]
    if normal[2] < 0:
        normal = -normal
    return normal, centroid


def align_to_gravity(mesh: TriMesh, inlier_tol=0.05, low_fraction=0.25, iterations=256, seed=0, y_up=False):
    """RANSAC-fit the ground plane among low vertices and rotate it onto z=0 / +Z.

    Returns ``(GroundFrame, aligned_mesh)``.
    """
    if len(mesh.vertices) == 0:
        raise DegeneratePlane("mesh has no vertices")
    if not 0 < low_fraction <= 1:
        raise ValueError("low_fraction must be in (0, 1]")
    flip = np.eye(3)
    if y_up:
        flip = np.array([[1.0, 0, 0], [0, 0, -1.0], [0, 1.0, 0]])
    verts = mesh.vertices @ flip.T
    pts = np.unique(verts, axis=0)
    n_low = max(3, int(math.ceil(low_fraction * len(pts))))
    cand = pts[np.argsort(pts[:, 2], kind="stable")[:n_low]]
    if len(cand) < 3 or np.linalg.matrix_rank(cand - cand.mean(axis=0), tol=1e-9) < 2:
        raise DegeneratePlane("fewer than 3 non-collinear candidate vertices")

    rng = np.random.default_rng(seed)
    best_count, best_mask = -1, None
    for _ in range(iterations):
        i, j, k = rng.choice(len(cand), size=3, replace=False)
        n = np.cross(cand[j] - cand[i], cand[k] - cand[i])
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            continue
        n /= norm
        mask = np.abs((cand - cand[i]) @ n) <= inlier_tol
        count = int(mask.sum())
        if count > best_count:
            best_count, best_mask = count, mask
    if best_mask is None or best_count < 3:
        raise DegeneratePlane("RANSAC found no plane")
    normal, centroid = _fit_plane(cand[best_mask])
    level = rotation_between(normal, [0.0, 0.0, 1.0])
    height = float((level @ centroid)[2])
    frame = GroundFrame(level @ flip, np.array([0.0, 0.0, -height]))
    return frame, frame.apply_mesh(mesh)


# ------------------------------------------------------------------ occupancy


@dataclass(frozen=True)
class OccupancyGrid:
    origin: np.ndarray  # (2,) meters, lower-left corner of cell (0, 0)
    resolution: float
    cells: np.ndarray  # (nx, ny) bool, True = blocked

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=np.float64).reshape(2))
        object.__setattr__(self, "cells", np.asarray(self.cells, dtype=bool))

    @property
    def shape(self):
        return self.cells.shape

    def in_bounds(self, cell) -> bool:
        return 0 <= cell[0] < self.cells.shape[0] and 0 <= cell[1] < self.cells.shape[1]

    def cell_of(self, point):
        p = (np.asarray(point, dtype=np.float64)[:2] - self.origin) / self.resolution
        return int(math.floor(p[0])), int(math.floor(p[1]))

    def cell_center(self, ix, iy) -> np.ndarray:
        return self.origin + (np.array([ix, iy], dtype=np.float64) + 0.5) * self.resolution

    def is_free(self, cell) -> bool:
        return self.in_bounds(cell) and not self.cells[cell]

    def with_cells(self, cells) -> "OccupancyGrid":
        return OccupancyGrid(self.origin, self.resolution, cells)


def _clip_polygon_z(poly, zmin, zmax):
    """Sutherland-Hodgman clip of a 3D polygon against the slab zmin <= z <= zmax."""

    def clip(points, keep, isect):
        out = []
        n = len(points)
        for i in range(n):
            cur, nxt = points[i], points[(i + 1) % n]
            kc, kn = keep(cur), keep(nxt)
            if kc:
                out.append(cur)
            if kc != kn:
                out.append(isect(cur, nxt))
        return out

    def at_z(z):
        def f(a, b):
            t = (z - a[2]) / (b[2] - a[2])
            return a + t * (b - a)
        return f

    pts = list(poly)
    pts = clip(pts, lambda p: p[2] >= zmin, at_z(zmin))
    if not pts:
        return pts
    return clip(pts, lambda p: p[2] <= zmax, at_z(zmax))


def _polygon_overlaps_cells(poly2d, x0, y0, x1, y1, eps=1e-9):
    """Vectorized SAT test: convex polygon (k, 2) vs axis-aligned boxes (arrays)."""
    overlap = (poly2d[:, 0].max() > x0 + eps) & (poly2d[:, 0].min() < x1 - eps)
    overlap &= (poly2d[:, 1].max() > y0 + eps) & (poly2d[:, 1].min() < y1 - eps)
    k = len(poly2d)
    for i in range(k):
        e = poly2d[(i + 1) % k] - poly2d[i]
        n = np.array([-e[1], e[0]])
        norm = np.linalg.norm(n)
        if norm < 1e-12:
            continue
        n /= norm
        proj = poly2d @ n
        pmin, pmax = proj.min(), proj.max()
        corners = [x0 * n[0] + y0 * n[1], x1 * n[0] + y0 * n[1], x0 * n[0] + y1 * n[1], x1 * n[0] + y1 * n[1]]
        bmin = np.minimum.reduce(corners)
        bmax = np.maximum.reduce(corners)
        overlap &= (pmax > bmin + eps) & (pmin < bmax - eps)
    return overlap


def build_occupancy_grid(mesh: TriMesh, resolution=0.5, min_h=0.1, max_h=2.0, bounds=None) -> OccupancyGrid:
    """BEV grid; a cell is blocked iff a triangle enters its prism within [min_h, max_h]."""
    if len(mesh.faces) == 0:
        raise EmptyMesh("mesh has no faces")
    if not min_h < max_h:
        raise ValueError("min_h must be below max_h")
    if bounds is None:
        lo, hi = mesh.bounds()
        lo, hi = lo[:2], hi[:2]
    else:
        lo, hi = np.asarray(bounds[0], float), np.asarray(bounds[1], float)
    n = np.maximum(1, np.ceil((hi - lo) / resolution - 1e-9).astype(int))
    cells = np.zeros((int(n[0]), int(n[1])), dtype=bool)
    for tri in mesh.triangles:
        if tri[:, 2].max() < min_h or tri[:, 2].min() > max_h:
            continue
        poly = _clip_polygon_z(tri, min_h, max_h)
        if len(poly) == 0:
            continue
        p2 = np.array(poly)[:, :2]
        i0 = max(0, int(math.floor((p2[:, 0].min() - lo[0]) / resolution)))
        i1 = min(cells.shape[0] - 1, int(math.floor((p2[:, 0].max() - lo[0]) / resolution)))
        j0 = max(0, int(math.floor((p2[:, 1].min() - lo[1]) / resolution)))
        j1 = min(cells.shape[1] - 1, int(math.floor((p2[:, 1].max() - lo[1]) / resolution)))
        if i1 < i0 or j1 < j0:
            continue
        ii, jj = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
        x0 = lo[0] + ii * resolution
        y0 = lo[1] + jj * resolution
        hit = _polygon_overlaps_cells(p2, x0, y0, x0 + resolution, y0 + resolution)
        cells[ii[hit], jj[hit]] = True
    return OccupancyGrid(lo, float(resolution), cells)


# ------------------------------------------------------------------ landmarks


@dataclass(frozen=True)
class Landmark:
    id: str
    label: str
    description: str
    aabb_min: tuple
    aabb_max: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in self.aabb_min)
        hi = tuple(float(x) for x in self.aabb_max)
        if len(lo) != 3 or len(hi) != 3 or any(a > b for a, b in zip(lo, hi)):
            raise ValueError(f"landmark {self.id}: bad aabb")
        if not self.label:
            raise ValueError(f"landmark {self.id}: empty label")
        object.__setattr__(self, "aabb_min", lo)
        object.__setattr__(self, "aabb_max", hi)

    @property
    def centroid(self) -> np.ndarray:
        return 0.5 * (np.array(self.aabb_min) + np.array(self.aabb_max))

    def to_json(self):
        return {
            "id": self.id,
            "label": self.label,
            "description": self.description,
            "aabb": {"min": list(self.aabb_min), "max": list(self.aabb_max)},
        }

    @classmethod
    def from_json(cls, d):
        return cls(d["id"], d["label"], d.get("description", ""), d["aabb"]["min"], d["aabb"]["max"])


def load_landmarks(path):
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ValueError(f"{path}: expected a JSON array of landmarks")
    lms = [Landmark.from_json(d) for d in data]
    ids = [lm.id for lm in lms]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate landmark ids")
    return lms


def save_landmarks(landmarks, path):
    with open(path, "w") as fh:
        json.dump([lm.to_json() for lm in landmarks], fh, indent=1)
        fh.write("\n")


def nearest_bbox_distance(pos, lm: Landmark) -> float:
    p = np.asarray(pos, dtype=np.float64)
    lo, hi = np.array(lm.aabb_min), np.array(lm.aabb_max)
    return float(np.linalg.norm(p - np.clip(p, lo, hi)))


# ------------------------------------------------------------------------ A*

_MOVES = [(1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
          (1, 1, SQRT2), (1, -1, SQRT2), (-1, 1, SQRT2), (-1, -1, SQRT2)]


def _neighbors(cells, c):
    nx, ny = cells.shape
    x, y = c
    for dx, dy, w in _MOVES:
        u, v = x + dx, y + dy
        if not (0 <= u < nx and 0 <= v < ny) or cells[u, v]:
            continue
        # no corner cutting: both orthogonal neighbours must be free
        if dx and dy and (cells[x + dx, y] or cells[x, y + dy]):
            continue
        yield (u, v), w


def _octile(a, b):
    dx, dy = abs(a[0] - b[0]), abs(a[1] - b[1])
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def path_cost_cells(path) -> float:
    """Canonical cost of a cell path: n_straight + n_diagonal * sqrt(2)."""
    diag = sum(1 for a, b in zip(path, path[1:]) if a[0] != b[0] and a[1] != b[1])
    return (len(path) - 1 - diag) + diag * SQRT2


def astar_cells(grid: OccupancyGrid, start, goals):
    """A* over cells from ``start`` to the nearest of ``goals``; returns (path, cost in cells)."""
    cells = grid.cells
    goals = {tuple(g) for g in goals}
    start = tuple(start)
    if not grid.in_bounds(start) or any(not grid.in_bounds(g) for g in goals):
        raise OutOfBounds("cell outside grid")
    if cells[start]:
        raise Unreachable(f"start cell {start} is blocked")
    goals = {g for g in goals if not cells[g]}
    if not goals:
        raise Unreachable("all goal cells are blocked")
    goal_list = sorted(goals)

    def h(c):
        return min(_octile(c, g) for g in goal_list)

    g_cost = {start: 0.0}
    parent = {start: None}
    tie = 0
    heap = [(h(start), tie, start)]
    closed = set()
    while heap:
        _, _, cur = heapq.heappop(heap)
        if cur in closed:
            continue
        if cur in goals:
            path = [cur]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            path.reverse()
            return path, path_cost_cells(path)
        closed.add(cur)
        for nb, w in _neighbors(cells, cur):
            ng = g_cost[cur] + w
            if ng < g_cost.get(nb, math.inf) - 1e-12:
                g_cost[nb] = ng
                parent[nb] = cur
                tie += 1
                heapq.heappush(heap, (ng + h(nb), tie, nb))
    raise Unreachable(f"no path from {start} to goal")


def astar_shortest_path(grid: OccupancyGrid, start, goal):
    """8-connected A* between two world points; returns (cell path, length in meters)."""
    s, g = grid.cell_of(start), grid.cell_of(goal)
    if not grid.in_bounds(s) or not grid.in_bounds(g):
        raise OutOfBounds("start or goal outside the grid")
    path, cost = astar_cells(grid, s, [g])
    return path, cost * grid.resolution


def cost_to_go(grid: OccupancyGrid, goal_cells) -> np.ndarray:
    """Dijkstra distance field (meters) from every cell to the nearest goal cell."""
    cells = grid.cells
    dist = np.full(cells.shape, np.inf)
    heap = []
    for g in sorted({tuple(g) for g in goal_cells}):
        if grid.in_bounds(g) and not cells[g]:
            dist[g] = 0.0
            heapq.heappush(heap, (0.0, g))
    while heap:
        d, cur = heapq.heappop(heap)
        if d > dist[cur]:
            continue
        # moves are symmetric, so forward expansion gives the reverse field
        for nb, w in _neighbors(cells, cur):
            nd = d + w
            if nd < dist[nb]:
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return dist * grid.resolution


def goal_region_cells(grid: OccupancyGrid, lm: Landmark, radius: float):
    """Free cells whose centers lie within ``radius`` of the landmark box."""
    lo = np.array(lm.aabb_min[:2]) - radius
    hi = np.array(lm.aabb_max[:2]) + radius
    i0, j0 = grid.cell_of(lo)
    i1, j1 = grid.cell_of(hi)
    out = []
    for i in range(max(0, i0), min(grid.shape[0], i1 + 1)):
        for j in range(max(0, j0), min(grid.shape[1], j1 + 1)):
            if grid.cells[i, j]:
                continue
            c = grid.cell_center(i, j)
            if nearest_bbox_distance([c[0], c[1], lm.aabb_min[2]], lm) <= radius:
                out.append((i, j))
    return out


def inflate(cells: np.ndarray, radius_cells: int) -> np.ndarray:
    out = cells.copy()
    for _ in range(radius_cells):
        grown = out.copy()
        grown[1:, :] |= out[:-1, :]
        grown[:-1, :] |= out[1:, :]
        grown[:, 1:] |= out[:, :-1]
        grown[:, :-1] |= out[:, 1:]
        grown[1:, 1:] |= out[:-1, :-1]
        grown[:-1, :-1] |= out[1:, 1:]
        grown[1:, :-1] |= out[:-1, 1:]
        grown[:-1, 1:] |= out[1:, :-1]
        out = grown
    return out


# --------------------------------------------------------------------- world


def ground_face_mask(mesh: TriMesh, tol=0.02, max_tilt_deg=15.0) -> np.ndarray:
    """Faces lying on the z=0 support plane (excluded from collision geometry)."""
    if len(mesh.faces) == 0:
        return np.zeros(0, dtype=bool)
    tri = mesh.triangles
    flat = np.all(np.abs(tri[:, :, 2]) <= tol, axis=1)
    up = np.abs(mesh.face_normals()[:, 2]) >= math.cos(math.radians(max_tilt_deg))
    return flat & up


@dataclass(frozen=True)
class WorldModel:
    mesh: TriMesh
    grid: OccupancyGrid
    landmarks: tuple
    frame: GroundFrame = field(default_factory=GroundFrame.identity)
    ground_mask: np.ndarray = None

    def __post_init__(self):
        object.__setattr__(self, "landmarks", tuple(self.landmarks))
        if self.ground_mask is None:
            object.__setattr__(self, "ground_mask", ground_face_mask(self.mesh))

    def landmark(self, lm_id) -> Landmark:
        for lm in self.landmarks:
            if lm.id == lm_id:
                return lm
        raise KeyError(lm_id)

    @property
    def obstacle_mesh(self) -> TriMesh:
        return self.mesh.subset(~self.ground_mask)

    def with_obstacles(self, meshes, min_h=0.1, max_h=2.0) -> "WorldModel":
        """Merge extra static meshes; occupancy is re-derived on the same grid extent."""
        meshes = list(meshes)
        if not meshes:
            return self
        merged = TriMesh.concatenate([self.mesh] + meshes)
        extra = TriMesh.concatenate(meshes)
        hi = self.grid.origin + np.array(self.grid.shape) * self.grid.resolution
        add = build_occupancy_grid(extra, self.grid.resolution, min_h, max_h, bounds=(self.grid.origin, hi))
        grid = self.grid.with_cells(self.grid.cells | add.cells)
        gm = np.concatenate([self.ground_mask, ground_face_mask(extra)])
        return WorldModel(merged, grid, self.landmarks, self.frame, gm)

    @classmethod
    def from_mesh(cls, mesh, landmarks, resolution=0.5, min_h=0.1, max_h=2.0, align=True, seed=0):
        frame = GroundFrame.identity()
        if align:
            frame, mesh = align_to_gravity(mesh, seed=seed)
        grid = build_occupancy_grid(mesh, resolution, min_h, max_h)
        return cls(mesh, grid, landmarks, frame)


def save_bundle(world: WorldModel, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    save_obj(world.mesh, os.path.join(directory, "mesh.obj"))
    save_landmarks(world.landmarks, os.path.join(directory, "landmarks.json"))
    np.save(os.path.join(directory, "grid.npy"), world.grid.cells)
    meta = {
        "frame": {"rotation": world.frame.rotation.round(12).tolist(), "translation": world.frame.translation.round(12).tolist()},
        "grid": {"origin": world.grid.origin.tolist(), "resolution": world.grid.resolution, "shape": list(world.grid.shape)},
    }
    with open(os.path.join(directory, "world.json"), "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_bundle(directory) -> WorldModel:
    mesh = load_obj(os.path.join(directory, "mesh.obj"))
    landmarks = load_landmarks(os.path.join(directory, "landmarks.json"))
    with open(os.path.join(directory, "world.json")) as fh:
        meta = json.load(fh)
    cells = np.load(os.path.join(directory, "grid.npy"))
    grid = OccupancyGrid(meta["grid"]["origin"], meta["grid"]["resolution"], cells)
    frame = GroundFrame(meta["frame"]["rotation"], meta["frame"]["translation"])
    return WorldModel(mesh, grid, landmarks, frame)
