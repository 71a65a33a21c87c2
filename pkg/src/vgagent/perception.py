"""Egocentric RGB-D sensing by ray casting, goal/human boxes and prompt images."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import InvalidDepth
from .world import Landmark, WorldModel

NEAR = 1e-3
MAX_STEP = 0.2  # m
MT_EPS = 1e-12


@dataclass(frozen=True)
class CameraSpec:
    width: int = 320
    height: int = 240
    fx: float = 160.0
    fy: float = 160.0
    cx: float = 160.0
    cy: float = 120.0
    eye_height: float = 1.6

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0 or self.width <= 0 or self.height <= 0:
            raise ValueError("invalid camera intrinsics")

    @property
    def hfov(self) -> float:
        return 2 * math.atan(max(self.cx, self.width - self.cx) / self.fx)


@dataclass(frozen=True)
class Pose:
    position: np.ndarray  # ground point (m); z is the foot height
    yaw: float

    def __post_init__(self):
        p = np.zeros(3)
        q = np.asarray(self.position, dtype=np.float64).reshape(-1)
        p[: len(q)] = q
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "yaw", float(self.yaw))


def camera_axes(pose: Pose):
    c, s = math.cos(pose.yaw), math.sin(pose.yaw)
    fwd = np.array([c, s, 0.0])
    right = np.array([s, -c, 0.0])
    down = np.array([0.0, 0.0, -1.0])
    return fwd, right, down


def camera_center(pose: Pose, cam: CameraSpec) -> np.ndarray:
    return pose.position + np.array([0.0, 0.0, cam.eye_height])


def pixel_rays(u, v, cam: CameraSpec, pose: Pose) -> np.ndarray:
    """Unit world-space ray directions for (possibly fractional) pixel coordinates."""
    fwd, right, down = camera_axes(pose)
    a = (np.asarray(u, dtype=np.float64) - cam.cx) / cam.fx
    b = (np.asarray(v, dtype=np.float64) - cam.cy) / cam.fy
    d = fwd + a[..., None] * right + b[..., None] * down
    return d / np.linalg.norm(d, axis=-1, keepdims=True)


def to_camera(points, cam: CameraSpec, pose: Pose) -> np.ndarray:
    """World points -> camera coordinates (x right, y down, z forward)."""
    fwd, right, down = camera_axes(pose)
    rel = np.asarray(points, dtype=np.float64) - camera_center(pose, cam)
    return np.stack([rel @ right, rel @ down, rel @ fwd], axis=-1)


def project(points, cam: CameraSpec, pose: Pose):
    """Returns (uv, z_cam); uv is undefined where z_cam <= 0."""
    pc = to_camera(points, cam, pose)
    z = pc[..., 2]
    safe = np.where(np.abs(z) > 1e-12, z, 1e-12)
    uv = np.stack([cam.cx + cam.fx * pc[..., 0] / safe, cam.cy + cam.fy * pc[..., 1] / safe], axis=-1)
    return uv, z


def backproject(pixel, depth, cam: CameraSpec, pose: Pose) -> np.ndarray:
    """Pixel plus range along its ray -> world point."""
    depth = np.asarray(depth, dtype=np.float64)
    if not np.all(np.isfinite(depth)) or np.any(depth <= 0):
        raise InvalidDepth("depth must be finite and positive")
    px = np.asarray(pixel, dtype=np.float64)
    d = pixel_rays(px[..., 0], px[..., 1], cam, pose)
    return camera_center(pose, cam) + depth[..., None] * d


# --------------------------------------------------------------------- scene


def _face_colors(normals, tri):
    """Flat color per face from orientation and height (deterministic)."""
    up = np.abs(normals[:, 2])
    zc = tri[:, :, 2].mean(axis=1)
    base = np.where(up[:, None] > 0.9, [150, 150, 140], [190, 160, 120]).astype(np.float64)
    shade = 0.6 + 0.4 * np.abs(normals @ np.array([0.3, 0.5, 0.81]))
    tint = np.clip(zc / 6.0, 0, 1)[:, None] * np.array([-40.0, -10.0, 30.0])
    return np.clip(base * shade[:, None] + tint, 0, 255).astype(np.uint8)


@dataclass(frozen=True)
class Capsule:
    root: np.ndarray
    radius: float = 0.3
    height: float = 1.7
    agent_id: str = ""


@dataclass
class RayScene:
    v0: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normals: np.ndarray
    colors: np.ndarray
    capsules: list = field(default_factory=list)

    @classmethod
    def from_world(cls, world: WorldModel, agents=()):
        tri = world.mesh.triangles
        normals = world.mesh.face_normals()
        keep = world.mesh.face_areas() > 0
        tri, normals = tri[keep], normals[keep]
        caps = [a if isinstance(a, Capsule) else Capsule(np.asarray(a[0], float), agent_id=str(a[1]) if len(a) > 1 else "")
                for a in agents]
        return cls(tri[:, 0], tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0], normals, _face_colors(normals, tri), caps)

    def with_agents(self, agents) -> "RayScene":
        caps = [a if isinstance(a, Capsule) else Capsule(np.asarray(a[0], float), agent_id=str(a[1])) for a in agents]
        return RayScene(self.v0, self.e1, self.e2, self.normals, self.colors, caps)


def _mt(o, d, v0, e1, e2):
    """Moller-Trumbore ray/triangle distance; +inf where there is no hit.

    All arguments broadcast against each other with a trailing axis of 3.
    """
    px = d[..., 1] * e2[..., 2] - d[..., 2] * e2[..., 1]
    py = d[..., 2] * e2[..., 0] - d[..., 0] * e2[..., 2]
    pz = d[..., 0] * e2[..., 1] - d[..., 1] * e2[..., 0]
    det = e1[..., 0] * px + e1[..., 1] * py + e1[..., 2] * pz
    ok = np.abs(det) > MT_EPS
    inv = 1.0 / np.where(ok, det, 1.0)
    sx, sy, sz = o[..., 0] - v0[..., 0], o[..., 1] - v0[..., 1], o[..., 2] - v0[..., 2]
    u = (sx * px + sy * py + sz * pz) * inv
    qx = sy * e1[..., 2] - sz * e1[..., 1]
    qy = sz * e1[..., 0] - sx * e1[..., 2]
    qz = sx * e1[..., 1] - sy * e1[..., 0]
    v = (d[..., 0] * qx + d[..., 1] * qy + d[..., 2] * qz) * inv
    t = (e2[..., 0] * qx + e2[..., 1] * qy + e2[..., 2] * qz) * inv
    hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (t > NEAR)
    return np.where(hit, t, np.inf)


def _capsule_hits(o, d, cap: Capsule):
    """Ray vs vertical capsule (base at root). Returns (t, normal)."""
    r = cap.radius
    a0 = cap.root + np.array([0.0, 0.0, r])
    seg = max(cap.height - 2 * r, 0.0)
    n = len(d)
    best = np.full(n, np.inf)
    # cylinder part
    ox, oy = o[0] - a0[0], o[1] - a0[1]
    A = d[:, 0] ** 2 + d[:, 1] ** 2
    B = 2 * (ox * d[:, 0] + oy * d[:, 1])
    C = ox * ox + oy * oy - r * r
    disc = B * B - 4 * A * C
    ok = (A > 1e-15) & (disc >= 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    for sgn in (-1.0, 1.0):
        t = np.where(ok, (-B + sgn * sq) / np.where(ok, 2 * A, 1.0), np.inf)
        z = o[2] + np.where(np.isfinite(t), t, 0.0) * d[:, 2] - a0[2]
        valid = ok & (t > NEAR) & (z >= 0) & (z <= seg)
        best = np.where(valid & (t < best), t, best)
    # end spheres
    for c in (a0, a0 + np.array([0.0, 0.0, seg])):
        oc = o - c
        b = d @ oc
        cc = oc @ oc - r * r
        disc = b * b - cc
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        for sgn in (-1.0, 1.0):
            t = np.where(ok, -b + sgn * sq, np.inf)
            valid = ok & (t > NEAR)
            best = np.where(valid & (t < best), t, best)
    p = o + np.where(np.isfinite(best), best, 0.0)[:, None] * d
    axis_z = np.clip(p[:, 2], a0[2], a0[2] + seg)
    nrm = p - np.column_stack([np.full(n, a0[0]), np.full(n, a0[1]), axis_z])
    nn = np.linalg.norm(nrm, axis=1, keepdims=True)
    nrm = nrm / np.where(nn > 0, nn, 1.0)
    return best, nrm


def _triangle_pixel_boxes(scene: RayScene, cam: CameraSpec, pose: Pose):
    """Conservative pixel bbox per triangle after near-plane clipping; None when culled."""
    verts = np.stack([scene.v0, scene.v0 + scene.e1, scene.v0 + scene.e2], axis=1)
    pc = to_camera(verts, cam, pose)  # (T, 3, 3)
    x, y, z = pc[..., 0], pc[..., 1], pc[..., 2]
    fx, fy = cam.fx, cam.fy
    # planes of the image frustum in camera space: u in [0, W-1], v in [0, H-1]
    l_lim, r_lim = (0 - 1 - cam.cx) / fx, (cam.width - cam.cx) / fx
    t_lim, b_lim = (0 - 1 - cam.cy) / fy, (cam.height - cam.cy) / fy
    culled = (z <= NEAR).all(1) | (x < l_lim * z).all(1) | (x > r_lim * z).all(1)
    culled |= (y < t_lim * z).all(1) | (y > b_lim * z).all(1)
    boxes = np.full((len(verts), 4), np.nan)
    front = (z > NEAR).all(1) & ~culled
    u = cam.cx + fx * x / np.where(z > NEAR, z, 1.0)
    v = cam.cy + fy * y / np.where(z > NEAR, z, 1.0)
    boxes[front] = np.column_stack([u[front].min(1), u[front].max(1), v[front].min(1), v[front].max(1)])
    for i in np.nonzero(~front & ~culled)[0]:
        pts = _clip_near(pc[i])
        if len(pts) == 0:
            continue
        pts = np.array(pts)
        uu = cam.cx + fx * pts[:, 0] / pts[:, 2]
        vv = cam.cy + fy * pts[:, 1] / pts[:, 2]
        boxes[i] = [uu.min(), uu.max(), vv.min(), vv.max()]
    boxes[:, [0, 2]] = np.floor(boxes[:, [0, 2]]) - 1
    boxes[:, [1, 3]] = np.ceil(boxes[:, [1, 3]]) + 1
    return boxes


def _clip_near(poly, near=NEAR * 2):
    out = []
    n = len(poly)
    for i in range(n):
        a, b = poly[i], poly[(i + 1) % n]
        ia, ib = a[2] >= near, b[2] >= near
        if ia:
            out.append(a)
        if ia != ib:
            t = (near - a[2]) / (b[2] - a[2])
            out.append(a + t * (b - a))
    return out


def cast_pixels(scene: RayScene, cam: CameraSpec, pose: Pose, u, v, boxes=None):
    """First hit for an arbitrary set of pixel coordinates.

    Returns (range, normal, color, hit_id) where hit_id is the triangle index,
    ``-(k + 2)`` for capsule k, and -1 for no hit.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    o = camera_center(pose, cam)
    d = pixel_rays(u, v, cam, pose)
    n = len(u)
    best = np.full(n, np.inf)
    hit = np.full(n, -1, dtype=np.int64)
    if boxes is None:
        boxes = _triangle_pixel_boxes(scene, cam, pose)
    live = np.nonzero(~np.isnan(boxes[:, 0]))[0]
    chunk = max(1, 2_000_000 // max(n, 1))
    for s in range(0, len(live), chunk):
        idx = live[s : s + chunk]
        b = boxes[idx]
        inside = (u[:, None] >= b[:, 0]) & (u[:, None] <= b[:, 1]) & (v[:, None] >= b[:, 2]) & (v[:, None] <= b[:, 3])
        ri, tj = np.nonzero(inside)
        if len(ri) == 0:
            continue
        tri = idx[tj]
        t = _mt(o, d[ri], scene.v0[tri], scene.e1[tri], scene.e2[tri])
        # lowest t wins; ties go to the lowest triangle index
        order = np.lexsort((tri, t))
        ri, tri, t = ri[order], tri[order], t[order]
        first = np.unique(ri, return_index=True)[1]
        ri, tri, t = ri[first], tri[first], t[first]
        better = (t < best[ri]) | ((t == best[ri]) & (tri < hit[ri]) & np.isfinite(t))
        best[ri[better]] = t[better]
        hit[ri[better]] = tri[better]
    normals = np.zeros((n, 3))
    m = hit >= 0
    normals[m] = scene.normals[hit[m]]
    colors = np.zeros((n, 3), dtype=np.uint8)
    colors[m] = scene.colors[hit[m]]
    for k, cap in enumerate(scene.capsules):
        t, nrm = _capsule_hits(o, d, cap)
        closer = t < best
        best[closer] = t[closer]
        hit[closer] = -(k + 2)
        normals[closer] = nrm[closer]
        colors[closer] = (200, 40, 40)
    # normals face the viewer
    flip = (normals * d).sum(1) > 0
    normals[flip] *= -1
    return best, normals, colors, hit


@dataclass
class EgoObservation:
    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) range in meters, inf for sky
    normal: np.ndarray  # (H, W, 3)
    traversable: np.ndarray  # (H, W) bool
    rendered: np.ndarray  # (H, W) bool, which pixels were ray cast
    height: np.ndarray = None  # (H, W) hit height above the agent's feet, nan for sky
    pose: Pose = None
    cam: CameraSpec = None
    scene: RayScene = None
    goal_box: tuple = None
    goal_visible: bool = False
    human_boxes: list = field(default_factory=list)


def _traversable(depth, normal, theta_max, height=None, max_step=None):
    cos_t = math.cos(math.radians(theta_max))
    ok = np.isfinite(depth) & (normal[..., 2] > cos_t)
    if max_step is not None and height is not None:
        with np.errstate(invalid="ignore"):
            ok &= np.abs(height) <= max_step
    return ok


def traversable_mask(obs: EgoObservation, theta_max=15.0, max_step=None) -> np.ndarray:
    """Pixels whose surface normal is within ``theta_max`` degrees of +Z (and, optionally, at foot level)."""
    return _traversable(obs.depth, obs.normal, theta_max, obs.height, max_step)


def render_ego(world, agents, pose: Pose, cam: CameraSpec = CameraSpec(), pixel_mask=None, theta_max=15.0, scene=None,
               max_step=MAX_STEP):
    """Ray cast the world (and other agents as capsules) from an eye-height level camera.

    ``pixel_mask`` restricts casting to a subset of pixels; the rest stay as sky. Flat tops
    higher than ``max_step`` above the feet (bench seats, planters) are not walkable ground.
    """
    if scene is None:
        scene = RayScene.from_world(world, agents)
    elif agents:
        scene = scene.with_agents(agents)
    H, W = cam.height, cam.width
    if pixel_mask is None:
        pixel_mask = np.ones((H, W), dtype=bool)
    vv, uu = np.nonzero(pixel_mask)
    depth = np.full((H, W), np.inf)
    normal = np.zeros((H, W, 3))
    color = np.zeros((H, W, 3), dtype=np.uint8)
    color[:] = (135, 185, 235)  # sky
    if len(uu):
        boxes = _triangle_pixel_boxes(scene, cam, pose)
        # cast in row bands to bound memory
        band = 4096
        for s in range(0, len(uu), band):
            r, n, c, h = cast_pixels(scene, cam, pose, uu[s : s + band], vv[s : s + band], boxes)
            depth[vv[s : s + band], uu[s : s + band]] = r
            hit = np.isfinite(r)
            normal[vv[s : s + band][hit], uu[s : s + band][hit]] = n[hit]
            color[vv[s : s + band][hit], uu[s : s + band][hit]] = c[hit]
    height = np.full((H, W), np.nan)
    hv, hu = np.nonzero(np.isfinite(depth))
    if len(hv):
        height[hv, hu] = backproject(np.column_stack([hu, hv]), depth[hv, hu], cam, pose)[:, 2] - pose.position[2]
    trav = _traversable(depth, normal, theta_max, height, max_step)
    return EgoObservation(color, depth, normal, trav, pixel_mask.copy(), height, pose, cam, scene)


# ----------------------------------------------------------------- detection


def _box_corners(lo, hi):
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    return np.array([[x, y, z] for x in (lo[0], hi[0]) for y in (lo[1], hi[1]) for z in (lo[2], hi[2])])


_BOX_EDGES = [(0, 1), (2, 3), (4, 5), (6, 7), (0, 2), (1, 3), (4, 6), (5, 7), (0, 4), (1, 5), (2, 6), (3, 7)]


def project_box(lo, hi, cam: CameraSpec, pose: Pose):
    """Image bbox (u0, v0, u1, v1) of an AABB, near-clipped and clipped to the frame; None if not in view."""
    corners = _box_corners(lo, hi)
    pc = to_camera(corners, cam, pose)
    near = 0.05
    pts = [p for p in pc if p[2] >= near]
    for a, b in _BOX_EDGES:
        za, zb = pc[a][2], pc[b][2]
        if (za - near) * (zb - near) < 0:
            t = (near - za) / (zb - za)
            pts.append(pc[a] + t * (pc[b] - pc[a]))
    if not pts:
        return None
    pts = np.array(pts)
    u = cam.cx + cam.fx * pts[:, 0] / pts[:, 2]
    v = cam.cy + cam.fy * pts[:, 1] / pts[:, 2]
    u0, u1 = max(u.min(), 0.0), min(u.max(), cam.width - 1.0)
    v0, v1 = max(v.min(), 0.0), min(v.max(), cam.height - 1.0)
    if u0 > u1 or v0 > v1:
        return None
    return (float(u0), float(v0), float(u1), float(v1))


def box_surface_samples(lo, hi, eye, per_side=5):
    """Grid samples on the AABB faces that face the eye point."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    s = (np.arange(per_side) + 0.5) / per_side
    out = []
    for axis in range(3):
        for side, val in ((-1, lo[axis]), (1, hi[axis])):
            if (eye[axis] - val) * side <= 0:
                continue
            a, b = [k for k in range(3) if k != axis]
            ga, gb = np.meshgrid(lo[a] + s * (hi[a] - lo[a]), lo[b] + s * (hi[b] - lo[b]), indexing="ij")
            p = np.zeros((ga.size, 3))
            p[:, axis] = val
            p[:, a], p[:, b] = ga.ravel(), gb.ravel()
            out.append(p)
    return np.concatenate(out) if out else np.zeros((0, 3))


def visibility_ratio(scene: RayScene, lo, hi, cam: CameraSpec, pose: Pose, tol=0.05, per_side=5) -> float:
    """Fraction of camera-facing box samples in frame and not occluded (exact rays to each sample)."""
    eye = camera_center(pose, cam)
    pts = box_surface_samples(lo, hi, eye, per_side)
    if len(pts) == 0:
        return 0.0
    uv, z = project(pts, cam, pose)
    inside = (z > NEAR) & (uv[:, 0] >= -0.5) & (uv[:, 0] <= cam.width - 0.5) & (uv[:, 1] >= -0.5) & (uv[:, 1] <= cam.height - 0.5)
    if not inside.any():
        return 0.0
    rng = np.linalg.norm(pts[inside] - eye, axis=1)
    t, _, _, _ = cast_pixels(scene, cam, pose, uv[inside, 0], uv[inside, 1])
    ok = t >= rng - tol * np.maximum(1.0, rng)
    return float(ok.sum()) / len(pts)


def detect_goal(obs: EgoObservation, lm: Landmark, pose: Pose = None, cam: CameraSpec = None, min_vis=0.2,
                fail_rate=0.0, rng=None):
    """Geometric goal detector; returns (box or None, visibility ratio)."""
    pose = pose or obs.pose
    cam = cam or obs.cam
    if fail_rate > 0 and rng is not None and rng.random() < fail_rate:
        return None, 0.0
    box = project_box(lm.aabb_min, lm.aabb_max, cam, pose)
    if box is None:
        return None, 0.0
    ratio = visibility_ratio(obs.scene, lm.aabb_min, lm.aabb_max, cam, pose)
    if ratio < min_vis:
        return None, ratio
    return box, ratio


def detect_humans(obs: EgoObservation, pose: Pose = None, cam: CameraSpec = None, min_vis=0.2):
    """Boxes for capsule agents whose body samples are visible."""
    pose = pose or obs.pose
    cam = cam or obs.cam
    out = []
    for cap in obs.scene.capsules:
        lo = cap.root + np.array([-cap.radius, -cap.radius, 0.0])
        hi = cap.root + np.array([cap.radius, cap.radius, cap.height])
        box = project_box(lo, hi, cam, pose)
        if box is None:
            continue
        eye = camera_center(pose, cam)
        pts = cap.root + np.array([[0, 0, z] for z in np.linspace(0.2, cap.height - 0.2, 7)])
        uv, z = project(pts, cam, pose)
        inside = (z > NEAR) & (uv[:, 0] >= 0) & (uv[:, 0] <= cam.width - 1) & (uv[:, 1] >= 0) & (uv[:, 1] <= cam.height - 1)
        if not inside.any():
            continue
        t, _, _, hit = cast_pixels(obs.scene, cam, pose, uv[inside, 0], uv[inside, 1])
        own = -(obs.scene.capsules.index(cap) + 2)
        seen = (hit == own) | (t >= np.linalg.norm(pts[inside] - eye, axis=1) - cap.radius - 0.05)
        if seen.sum() / len(pts) >= min_vis:
            out.append((cap.agent_id, box))
    return out


# -------------------------------------------------------------------- images


def _font(size=12):
    try:
        return ImageFont.load_default(size=size)
    except TypeError:  # older Pillow
        return ImageFont.load_default()


def _arrow(draw, start, end, color, width=2):
    draw.line([start, end], fill=color, width=width)
    ang = math.atan2(end[1] - start[1], end[0] - start[0])
    head = 8
    left = (end[0] - head * math.cos(ang - 0.45), end[1] - head * math.sin(ang - 0.45))
    right = (end[0] - head * math.cos(ang + 0.45), end[1] - head * math.sin(ang + 0.45))
    draw.polygon([end, left, right], fill=color)


def arrow_anchor(cam: CameraSpec):
    return (cam.cx, cam.height - 4.0)


def arrow_endpoints(cam: CameraSpec, proposals):
    ax, ay = arrow_anchor(cam)
    return [(ax + float(p.direction_px[0]), ay + float(p.direction_px[1])) for p in proposals]


def compose_prompt_image(obs: EgoObservation, proposals, goal_box=None, human_boxes=()) -> Image.Image:
    """Numbered arrows from the bottom-center anchor, a green GOAL box and red HUMAN boxes."""
    img = Image.fromarray(obs.color.copy(), "RGB")
    draw = ImageDraw.Draw(img)
    font = _font()
    cam = obs.cam
    anchor = arrow_anchor(cam)
    for p, end in zip(proposals, arrow_endpoints(cam, proposals)):
        _arrow(draw, anchor, end, (255, 255, 0))
        label = str(p.index)
        x, y = end[0] - 5, end[1] - 16
        draw.rectangle([x - 1, y - 1, x + 10, y + 13], fill=(0, 0, 0))
        draw.text((x + 1, y), label, fill=(255, 255, 0), font=font)
    if goal_box is not None:
        u0, v0, u1, v1 = goal_box
        draw.rectangle([u0, v0, u1, v1], outline=(0, 220, 0), width=2)
        draw.text((u0 + 2, max(v0 - 14, 0)), "GOAL", fill=(0, 220, 0), font=font)
    for _, (u0, v0, u1, v1) in human_boxes:
        draw.rectangle([u0, v0, u1, v1], outline=(230, 0, 0), width=2)
        draw.text((u0 + 2, max(v0 - 14, 0)), "HUMAN", fill=(230, 0, 0), font=font)
    return img


def png_bytes(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG", optimize=False, compress_level=6)
    return buf.getvalue()


def save_observation(obs: EgoObservation, prefix):
    """Binary arrays plus a JSON sidecar describing them."""
    np.save(f"{prefix}_depth.npy", obs.depth)
    np.save(f"{prefix}_normal.npy", obs.normal)
    np.save(f"{prefix}_color.npy", obs.color)
    meta = {
        "shape": [obs.cam.height, obs.cam.width],
        "dtype": {"depth": "float64", "normal": "float64", "color": "uint8"},
        "camera": {k: getattr(obs.cam, k) for k in ("width", "height", "fx", "fy", "cx", "cy", "eye_height")},
        "pose": {"position": obs.pose.position.tolist(), "yaw": obs.pose.yaw},
    }
    with open(f"{prefix}.json", "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
