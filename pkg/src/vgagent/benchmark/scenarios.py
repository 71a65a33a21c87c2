"""Navigation scenarios: SimNav starts, ObstNav obstacles, SocialNav pedestrians, multi-goal chains."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InsufficientFreeSpace, NoDetour, Unreachable
from ..world import (
    Landmark, WorldModel, astar_cells, box_mesh, cost_to_go, cylinder_mesh, goal_region_cells, inflate,
    nearest_bbox_distance,
)

log = logging.getLogger(__name__)

LEVELS = ("simnav", "obstnav", "socialnav", "multigoal")
D_MIN, D_MAX = 6.0, 15.0
YAW_JITTER = math.radians(30.0)
SUCCESS_D = 1.0
START_CLEARANCE = 2  # cells of inflation a start cell must clear
OBSTACLE_GAP = 2.0
PED_MIN_START = 0.5


@dataclass(frozen=True)
class Obstacle:
    kind: str
    shape: str  # "box" or "cyl"
    center: tuple
    size: tuple  # (dx, dy) for boxes, (r,) for cylinders
    height: float

    def mesh(self):
        x, y = self.center
        if self.shape == "cyl":
            return cylinder_mesh((x, y), self.size[0], self.height)
        dx, dy = self.size
        return box_mesh((x - dx / 2, y - dy / 2, 0.0), (x + dx / 2, y + dy / 2, self.height))

    def to_json(self):
        return {"kind": self.kind, "shape": self.shape, "center": list(self.center), "size": list(self.size),
                "height": self.height}

    @classmethod
    def from_json(cls, d):
        return cls(d["kind"], d["shape"], tuple(d["center"]), tuple(d["size"]), float(d["height"]))


# barrier and crate footprints are given along / across the path direction
OBSTACLE_CATALOG = (
    ("barrier", "box", (0.4, 1.5), 1.0),
    ("traffic cone", "cyl", (0.3,), 0.75),
    ("crate", "box", (1.0, 1.0), 1.0),
)


@dataclass(frozen=True)
class Pedestrian:
    id: str
    waypoints: tuple  # ((x, y), ...)
    speed: float
    t0: float  # departure time in seconds; stands at the first waypoint before that

    def position(self, t) -> np.ndarray:
        w = np.asarray(self.waypoints, dtype=np.float64)
        seg = np.linalg.norm(np.diff(w, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        s = min(max(t - self.t0, 0.0) * self.speed, cum[-1])
        x = np.interp(s, cum, w[:, 0])
        y = np.interp(s, cum, w[:, 1])
        return np.array([x, y, 0.0])

    def to_json(self):
        return {"id": self.id, "waypoints": [list(p) for p in self.waypoints], "speed": self.speed, "t0": self.t0}

    @classmethod
    def from_json(cls, d):
        return cls(d["id"], tuple(tuple(p) for p in d["waypoints"]), float(d["speed"]), float(d["t0"]))


@dataclass(frozen=True)
class Scenario:
    id: str
    level: str
    goals: tuple
    start: tuple  # (x, y, yaw)
    seed: int
    optimal: tuple  # optimal length per leg, meters
    obstacles: tuple = field(default_factory=tuple)
    pedestrians: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.level not in LEVELS:
            raise ValueError(f"unknown level {self.level!r}")
        if not 1 <= len(self.goals) <= 5 or len(self.optimal) != len(self.goals):
            raise ValueError("need 1-5 goals with one optimal length each")

    @property
    def optimal_length(self) -> float:
        return float(sum(self.optimal))

    def to_json(self):
        return {
            "id": self.id,
            "level": self.level,
            "goals": list(self.goals),
            "start": [float(v) for v in self.start],
            "seed": int(self.seed),
            "optimal": [float(v) for v in self.optimal],
            "obstacles": [o.to_json() for o in self.obstacles],
            "pedestrians": [p.to_json() for p in self.pedestrians],
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            d["id"], d["level"], tuple(d["goals"]), tuple(d["start"]), int(d["seed"]), tuple(d["optimal"]),
            tuple(Obstacle.from_json(o) for o in d.get("obstacles", [])),
            tuple(Pedestrian.from_json(p) for p in d.get("pedestrians", [])),
        )


def save_scenarios(scenarios, path):
    with open(path, "w") as fh:
        json.dump([s.to_json() for s in scenarios], fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_scenarios(path):
    with open(path) as fh:
        return [Scenario.from_json(d) for d in json.load(fh)]


def scenario_world(world: WorldModel, sc: Scenario) -> WorldModel:
    return world.with_obstacles([o.mesh() for o in sc.obstacles])


# ------------------------------------------------------------------ helpers


def _sub_seed(seed, *keys) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _region(world, lm, success_d=SUCCESS_D):
    region = goal_region_cells(world.grid, lm, success_d)
    if not region:
        raise Unreachable(f"no free cell within {success_d} m of {lm.id}")
    return region


def _optimal_leg(world, start_cell, lm, success_d=SUCCESS_D):
    """A* from a cell to the goal region; returns (cell path, meters)."""
    path, cost = astar_cells(world.grid, start_cell, _region(world, lm, success_d))
    return path, cost * world.grid.resolution


def chain_optimal(world, start_xy, goals, success_d=SUCCESS_D):
    """Per-leg optimal lengths; each leg starts where the previous shortest path entered its goal region."""
    cell = world.grid.cell_of(start_xy)
    legs, paths = [], []
    for lm in goals:
        path, length = _optimal_leg(world, cell, lm, success_d)
        legs.append(length)
        paths.append(path)
        cell = path[-1]
    return tuple(legs), paths


def start_candidates(world, lm: Landmark, d_min=D_MIN, d_max=D_MAX, success_d=SUCCESS_D):
    """Free, reachable, non-inflated cells whose centers lie d_min..d_max (2D) from the goal centroid."""
    grid = world.grid
    field = cost_to_go(grid, _region(world, lm, success_d))
    safe = ~inflate(grid.cells, START_CLEARANCE)
    ii, jj = np.nonzero(safe & np.isfinite(field))
    xy = grid.origin + (np.column_stack([ii, jj]) + 0.5) * grid.resolution
    d = np.linalg.norm(xy - lm.centroid[:2], axis=1)
    keep = (d >= d_min) & (d <= d_max)
    return [(int(i), int(j)) for i, j in zip(ii[keep], jj[keep])], field


def _pick_landmarks(world, n, rng):
    lms = sorted(world.landmarks, key=lambda l: l.id)
    if len(lms) < n:
        raise InsufficientFreeSpace(f"world has {len(lms)} landmarks, {n} requested")
    idx = np.sort(rng.choice(len(lms), size=n, replace=False))
    return [lms[i] for i in idx]


def _start_pose(grid, cell, lm, rng, yaw_jitter):
    x, y = grid.cell_center(*cell)
    c = lm.centroid
    yaw = math.atan2(c[1] - y, c[0] - x) + rng.uniform(-yaw_jitter, yaw_jitter)
    return (float(x), float(y), float((yaw + math.pi) % (2 * math.pi) - math.pi))


# --------------------------------------------------------------- generation


def generate_scenarios(world: WorldModel, level="simnav", n_landmarks=40, per_landmark=5, d_min=D_MIN, d_max=D_MAX,
                       yaw_jitter=YAW_JITTER, seed=0, n_goals=(2, 5)):
    """n_landmarks x per_landmark scenarios; landmarks without enough start cells are skipped with a warning."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    rng = np.random.default_rng(seed)
    out, skipped = [], 0
    for lm in _pick_landmarks(world, n_landmarks, rng):
        cands, field = start_candidates(world, lm, d_min, d_max)
        if len(cands) < per_landmark:
            log.warning("landmark %s: only %d start cells in range, skipped", lm.id, len(cands))
            skipped += 1
            continue
        picks = rng.choice(len(cands), size=per_landmark, replace=False)
        for k, p in enumerate(picks):
            cell = cands[int(p)]
            start = _start_pose(world.grid, cell, lm, rng, yaw_jitter)
            sid = f"{level}-{lm.id}-{k}"
            sc = Scenario(sid, "simnav", (lm.id,), start, _sub_seed(seed, len(out)), (float(field[cell]),))
            if level == "obstnav":
                try:
                    sc = augment_obstnav(sc, world, seed=sc.seed)
                except NoDetour as exc:
                    log.warning("%s skipped: %s", sid, exc)
                    continue
            elif level == "socialnav":
                sc = augment_socialnav(sc, world, seed=sc.seed)
            elif level == "multigoal":
                sc = extend_multigoal(sc, world, int(rng.integers(n_goals[0], n_goals[1] + 1)), seed=sc.seed)
            out.append(replace(sc, id=sid))
    if skipped:
        log.warning("%d landmark(s) skipped for lack of free space", skipped)
    return out


def validate_scenario(world: WorldModel, sc: Scenario, d_min=D_MIN, d_max=D_MAX) -> list:
    """Post-hoc checks; returns a list of problems (empty when valid)."""
    problems = []
    w = scenario_world(world, sc)
    cell = w.grid.cell_of(sc.start[:2])
    if not w.grid.in_bounds(cell) or w.grid.cells[cell]:
        problems.append("start cell not free")
    lm = world.landmark(sc.goals[0])
    d = float(np.linalg.norm(np.asarray(sc.start[:2]) - lm.centroid[:2]))
    if not d_min <= d <= d_max:
        problems.append(f"start distance {d:.2f} outside [{d_min}, {d_max}]")
    if any(l <= 0 for l in sc.optimal):
        problems.append("non-positive optimal length")
    for p in sc.pedestrians:
        if np.linalg.norm(p.position(0.0)[:2] - np.asarray(sc.start[:2])) < PED_MIN_START:
            problems.append(f"pedestrian {p.id} starts too close")
    return problems


def extend_multigoal(sc: Scenario, world: WorldModel, n_goals, seed=0, d_min=4.0, d_max=D_MAX):
    """Append landmarks reachable in sequence, each d_min..d_max from the previous one."""
    rng = np.random.default_rng(seed)
    goals = [world.landmark(sc.goals[0])]
    for _ in range(n_goals - 1):
        prev = goals[-1]
        pool = [l for l in sorted(world.landmarks, key=lambda l: l.id)
                if l.id not in {g.id for g in goals}
                and d_min <= np.linalg.norm(l.centroid[:2] - prev.centroid[:2]) <= d_max]
        if not pool:
            break
        goals.append(pool[int(rng.integers(len(pool)))])
    legs, _ = chain_optimal(world, sc.start[:2], goals)
    return replace(sc, level="multigoal", goals=tuple(g.id for g in goals), optimal=legs)


def augment_obstnav(sc: Scenario, world: WorldModel, catalog=OBSTACLE_CATALOG, seed=0, max_tries=20,
                    min_gap=OBSTACLE_GAP):
    """Place one static obstacle on an interior cell of the optimal path; a detour must remain."""
    rng = np.random.default_rng(seed)
    grid = world.grid
    lm = world.landmark(sc.goals[0])
    start = np.asarray(sc.start[:2], dtype=np.float64)
    path, _ = _optimal_leg(world, grid.cell_of(start), lm)
    interior = []
    for k in range(1, len(path) - 1):
        c = grid.cell_center(*path[k])
        if np.linalg.norm(c - start) >= min_gap and nearest_bbox_distance([c[0], c[1], lm.aabb_min[2]], lm) >= min_gap:
            interior.append(k)
    if not interior:
        raise NoDetour(f"{sc.id}: optimal path has no cell {min_gap} m from both ends")
    for _ in range(max_tries):
        k = interior[int(rng.integers(len(interior)))]
        kind, shape, size, h = catalog[int(rng.integers(len(catalog)))]
        a, b = path[max(k - 1, 0)], path[min(k + 1, len(path) - 1)]
        along_x = abs(b[0] - a[0]) >= abs(b[1] - a[1])
        if shape == "box" and not along_x:
            size = (size[1], size[0])
        cx, cy = grid.cell_center(*path[k])
        ob = Obstacle(kind, shape, (float(cx), float(cy)), tuple(float(s) for s in size), float(h))
        w = world.with_obstacles([ob.mesh()])
        scell = w.grid.cell_of(start)
        if w.grid.cells[scell] or inflate(w.grid.cells, 1)[scell]:
            continue
        try:
            _, length = _optimal_leg(w, scell, lm)
        except Unreachable:
            continue
        return replace(sc, level="obstnav", obstacles=(ob,), optimal=(length,))
    raise NoDetour(f"{sc.id}: no obstacle placement left a detour after {max_tries} tries")


def _segment_free(grid, a, b, step=0.25):
    n = max(2, int(math.ceil(np.linalg.norm(b - a) / step)) + 1)
    for t in np.linspace(0.0, 1.0, n):
        c = grid.cell_of(a + t * (b - a))
        if not grid.in_bounds(c) or grid.cells[c]:
            return False
    return True


def augment_socialnav(sc: Scenario, world: WorldModel, count=None, seed=0, speed=1.0, agent_speed=1.2,
                      half_span=(3.0, 2.0, 1.5)):
    """Pedestrians crossing the optimal path perpendicular to it, timed to meet the agent at staggered points."""
    rng = np.random.default_rng(seed)
    if count is None:
        count = int(rng.integers(1, 4))
    if not 1 <= count <= 3:
        raise ValueError("count must be 1-3")
    grid = world.grid
    lm = world.landmark(sc.goals[0])
    start = np.asarray(sc.start[:2], dtype=np.float64)
    path, _ = _optimal_leg(world, grid.cell_of(start), lm)
    pts = np.array([grid.cell_center(*c) for c in path])
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(pts, axis=0), axis=1))])
    peds = []
    # crossing points spread over the middle of the path
    fracs = (np.arange(count) + 1) / (count + 1)
    for f in fracs:
        k = int(np.clip(np.searchsorted(arc, f * arc[-1]), 1, len(pts) - 2))
        tangent = pts[min(k + 1, len(pts) - 1)] - pts[k - 1]
        tangent /= np.linalg.norm(tangent)
        perp = np.array([-tangent[1], tangent[0]]) * (1 if rng.random() < 0.5 else -1)
        cross = pts[k]
        for h in half_span:
            a, b = cross - h * perp, cross + h * perp
            if not (_segment_free(grid, a, cross) and _segment_free(grid, cross, b)):
                continue
            t_meet = arc[k] / agent_speed + rng.uniform(0.0, 1.0)
            t0 = max(0.0, t_meet - h / speed)
            ped = Pedestrian(f"ped{len(peds)}", (tuple(map(float, a)), tuple(map(float, b))), float(speed), float(round(t0, 6)))
            if np.linalg.norm(ped.position(0.0)[:2] - start) < PED_MIN_START:
                continue
            peds.append(ped)
            break
    if len(peds) < count:
        log.info("%s: %d of %d pedestrians placed", sc.id, len(peds), count)
    return replace(sc, level="socialnav", pedestrians=tuple(peds))
