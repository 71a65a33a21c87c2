"""Procedural desk-scale city block: streets, a plaza and street furniture as landmarks."""

from __future__ import annotations

import numpy as np

from ..world import Landmark, TriMesh, WorldModel, box_mesh, cylinder_mesh, quad_mesh

SIZE = (64.0, 48.0)
# facades sit a quarter cell inside the 0.5 m grid lines so they rasterize unambiguously
BUILDINGS = (
    ((4.25, 4.25), (17.75, 13.75)),
    ((26.25, 4.25), (37.75, 13.75)),
    ((46.25, 4.25), (59.75, 13.75)),
    ((4.25, 34.25), (17.75, 43.75)),
    ((26.25, 36.25), (37.75, 43.75)),
    ((46.25, 34.25), (59.75, 43.75)),
)
BUILDING_HEIGHT = 8.0

# label, shape, footprint (x, y) or radius, height
FURNITURE = (
    ("kiosk", "box", (1.2, 1.2), 2.2),
    ("bench", "box", (1.6, 0.6), 0.5),
    ("trash can", "cyl", 0.35, 1.0),
    ("mailbox", "box", (0.5, 0.5), 1.2),
    ("statue", "box", (0.9, 0.9), 2.6),
    ("planter", "box", (1.4, 1.4), 0.6),
    ("vending machine", "box", (1.0, 0.8), 1.9),
    ("bicycle rack", "box", (1.8, 0.5), 0.9),
    ("hydrant", "cyl", 0.22, 0.7),
    ("lamp post", "cyl", 0.15, 3.5),
    ("phone booth", "box", (1.0, 1.0), 2.3),
    ("newsstand", "box", (1.4, 0.9), 1.8),
)
COLORS = ("red", "blue", "green", "yellow", "white", "black", "orange", "grey")


def _area(x, y):
    if 14 < y < 34:
        return "in the central plaza" if 20 < x < 44 else "along the main avenue"
    ns = "south" if y < 24 else "north"
    if 18 <= x <= 26 or 38 <= x <= 46:
        return f"in the {ns} cross street"
    return f"near the {ns} edge of the district"


def _furniture(kind, center):
    label, shape, dims, h = kind
    x, y = center
    if shape == "box":
        lo = (x - dims[0] / 2, y - dims[1] / 2, 0.0)
        hi = (x + dims[0] / 2, y + dims[1] / 2, h)
        return box_mesh(lo, hi), lo, hi
    r = dims
    return cylinder_mesh((x, y), r, h), (x - r, y - r, 0.0), (x + r, y + r, h)


def _free_spot(x, y, margin):
    if not (margin <= x <= SIZE[0] - margin and margin <= y <= SIZE[1] - margin):
        return False
    for (x0, y0), (x1, y1) in BUILDINGS:
        if x0 - margin <= x <= x1 + margin and y0 - margin <= y <= y1 + margin:
            return False
    return True


def landmark_sites(spacing=5.0, margin=2.5):
    """Lattice of landmark sites in open space, offset so they sit between walking lanes."""
    xs = np.arange(3.0, SIZE[0], spacing)
    ys = np.arange(3.0, SIZE[1], spacing)
    out = []
    for j, y in enumerate(ys):
        for x in xs + (spacing / 2 if j % 2 else 0.0):
            if _free_spot(x, y, margin) and abs(x - 32) + abs(y - 24) > 3.0:
                out.append((float(x), float(y)))
    return out


def build_demo_world(seed=0, resolution=0.5) -> WorldModel:
    rng = np.random.default_rng(seed)
    meshes = [quad_mesh((0.0, 0.0), SIZE)]
    for lo, hi in BUILDINGS:
        meshes.append(box_mesh((*lo, 0.0), (*hi, BUILDING_HEIGHT)))
    landmarks = []
    # plaza fountain
    meshes.append(cylinder_mesh((32.0, 24.0), 1.2, 0.8, segments=16))
    landmarks.append(Landmark("lm00", "fountain", "the round stone fountain in the middle of the plaza",
                              (30.8, 22.8, 0.0), (33.2, 25.2, 0.8)))
    for k, site in enumerate(landmark_sites()):
        kind = FURNITURE[int(rng.integers(len(FURNITURE)))]
        color = COLORS[int(rng.integers(len(COLORS)))]
        jitter = rng.uniform(-0.5, 0.5, 2)
        center = (site[0] + jitter[0], site[1] + jitter[1])
        mesh, lo, hi = _furniture(kind, center)
        meshes.append(mesh)
        desc = f"the {color} {kind[0]} {_area(*center)}"
        landmarks.append(Landmark(f"lm{k + 1:02d}", kind[0], desc, lo, hi))
    mesh = TriMesh.concatenate(meshes)
    return WorldModel.from_mesh(mesh, landmarks, resolution=resolution, align=False)
