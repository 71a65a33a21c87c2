"""Action primitives from the egocentric view, status machine, memory and planners."""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidAction, Unreachable
from .perception import CameraSpec, EgoObservation, Pose, backproject
from .world import Landmark, WorldModel, cost_to_go, goal_region_cells, inflate, nearest_bbox_distance

RECOVERY = ("turn_left_30", "turn_right_30", "turn_left_90", "turn_right_90", "turn_around")
RECOVERY_ANGLES = {  # counter-clockwise positive, degrees
    "turn_left_30": 30.0,
    "turn_right_30": -30.0,
    "turn_left_90": 90.0,
    "turn_right_90": -90.0,
    "turn_around": 180.0,
}
STOP = "stop_and_wait"
DEFAULT_J = 9
SAFETY = 1.5
MAX_RANGE = 8.0
HISTORY = 5


class AgentStatus(str, enum.Enum):
    NORMAL = "NORMAL"
    GOAL_LOST = "GOAL_LOST"
    STUCK = "STUCK"


@dataclass(frozen=True)
class ActionPrimitive:
    index: int
    motion_type: str
    direction_px: tuple  # image-plane vector from the arrow anchor
    target_3d: np.ndarray
    path_clearance: float
    angle: float  # heading offset from the camera axis, rad, left positive
    column: int


@dataclass(frozen=True)
class ActionSpace:
    primitives: tuple = ()
    recovery: tuple = ()
    stop_and_wait: bool = False

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "recovery", tuple(self.recovery))
        if [p.index for p in self.primitives] != list(range(1, len(self.primitives) + 1)):
            raise ValueError("primitive indices must run 1..J")
        if not self.primitives and not self.recovery:
            raise ValueError("an empty primitive set needs recovery actions")

    def tokens(self) -> list:
        """The action_space list shown to the planner."""
        out = [p.index for p in self.primitives] + list(self.recovery)
        if self.stop_and_wait:
            out.append(STOP)
        return out

    def primitive(self, index) -> ActionPrimitive:
        return self.primitives[index - 1]


@dataclass(frozen=True)
class Decision:
    observation: str
    goal_analysis: str
    plan: tuple
    thought: str
    action: object  # int index or recovery token
    fallback: bool = False

    def __post_init__(self):
        object.__setattr__(self, "plan", tuple(self.plan))

    def to_json(self):
        return {
            "observation": self.observation,
            "goal_analysis": self.goal_analysis,
            "plan": list(self.plan),
            "thought": self.thought,
            "action": self.action,
        }


@dataclass(frozen=True)
class Memory:
    previous_plan: tuple = ()
    recent_history: tuple = ()
    cap: int = HISTORY

    def to_json(self):
        return {"previous_plan": list(self.previous_plan), "recent_history": list(self.recent_history)}

    @property
    def empty(self) -> bool:
        return not self.previous_plan and not self.recent_history


def validate_action(action, space: ActionSpace):
    """Return the action if it is an exact member of the action space."""
    if isinstance(action, bool):
        raise InvalidAction(action)
    for tok in space.tokens():
        if type(tok) is type(action) and tok == action:
            return action
    raise InvalidAction(action)


def update_memory(mem: Memory, dec: Decision, H=None) -> Memory:
    cap = mem.cap if H is None else H
    hist = deque(mem.recent_history, maxlen=cap)
    hist.append(f"thought: {dec.thought} | action: {dec.action}")
    return Memory(tuple(dec.plan), tuple(hist), cap)


# ---------------------------------------------------------------- proposals


def candidate_angles(cam: CameraSpec, J: int):
    """J headings spaced uniformly over the horizontal FoV, left to right, edges excluded."""
    half = math.atan(cam.cx / cam.fx)
    return np.linspace(half, -half, J + 2)[1:-1]


def candidate_columns(cam: CameraSpec, J: int):
    return [int(round(cam.cx - cam.fx * math.tan(a))) for a in candidate_angles(cam, J)]


def sensing_mask(cam: CameraSpec, J: int) -> np.ndarray:
    """Pixels needed by propose_actions (the candidate columns below the horizon)."""
    m = np.zeros((cam.height, cam.width), dtype=bool)
    first = int(math.floor(cam.cy)) + 1
    for c in candidate_columns(cam, J):
        m[first:, c] = True
    return m


def propose_actions(obs: EgoObservation, J=DEFAULT_J, safety=SAFETY, cam: CameraSpec = None, pose: Pose = None,
                    max_range=MAX_RANGE, motion_type="walk", social=False) -> ActionSpace:
    if J < 1:
        raise ValueError("J must be at least 1")
    cam = cam or obs.cam
    pose = pose or obs.pose
    first = int(math.floor(cam.cy)) + 1
    kept = []
    for angle, col in zip(candidate_angles(cam, J), candidate_columns(cam, J)):
        rows = np.arange(cam.height - 1, first - 1, -1)
        ok = obs.traversable[rows, col].copy()
        pts = np.full((len(rows), 3), np.nan)
        pts[ok] = backproject(np.column_stack([np.full(ok.sum(), col), rows[ok]]), obs.depth[rows[ok], col], cam, pose)
        with np.errstate(invalid="ignore"):
            ok &= np.linalg.norm(pts[:, :2] - pose.position[:2], axis=1) <= max_range
        # farthest pixel of the contiguous run starting at the bottom row
        run = len(ok) if ok.all() else int(np.argmin(ok))
        if run == 0:
            continue
        best_row, best_pt = int(rows[run - 1]), pts[run - 1]
        clearance = float(np.linalg.norm(best_pt[:2] - pose.position[:2]))
        if clearance < safety:
            continue
        dpx = (float(col - cam.cx), float(best_row - (cam.height - 4.0)))
        kept.append((float(angle), col, dpx, best_pt, clearance))
    prims = [
        ActionPrimitive(i + 1, motion_type, dpx, pt, cl, ang, col)
        for i, (ang, col, dpx, pt, cl) in enumerate(kept)
    ]
    recovery = () if prims else RECOVERY
    return ActionSpace(prims, recovery, social)


def determine_status(space: ActionSpace, goal_box) -> AgentStatus:
    if not space.primitives:
        return AgentStatus.STUCK
    if goal_box is None:
        return AgentStatus.GOAL_LOST
    return AgentStatus.NORMAL


# ----------------------------------------------------------------- planners


def _center_rank(index, n):
    return abs(index - (n + 1) / 2.0)


def _bearing_words(rel_deg):
    if abs(rel_deg) < 10:
        return "straight ahead"
    side = "left" if rel_deg > 0 else "right"
    return f"{abs(rel_deg):.0f} degrees to the {side}"


def _relative_bearing(pose: Pose, point) -> float:
    d = np.asarray(point, float)[:2] - pose.position[:2]
    ang = math.atan2(d[1], d[0]) - pose.yaw
    return math.degrees((ang + math.pi) % (2 * math.pi) - math.pi)


def _recovery_towards(rel_deg, options):
    best = None
    for tok in options:
        diff = abs((rel_deg - RECOVERY_ANGLES[tok] + 180) % 360 - 180)
        if best is None or diff < best[0] - 1e-9:
            best = (diff, tok)
    return best[1]


def _mechanical_decision(pose, goal: Landmark, action, chosen=None, note=""):
    rel = _relative_bearing(pose, goal.centroid)
    dist = nearest_bbox_distance(np.append(pose.position[:2], goal.aabb_min[2]), goal)
    analysis = f"The {goal.label} is {_bearing_words(rel)}, about {dist:.1f} m away."
    if isinstance(action, int):
        step = f"Move along arrow {action} ({_bearing_words(math.degrees(chosen.angle))}) toward the {goal.label}."
        thought = f"Arrow {action} has the lowest estimated remaining cost{note}."
    else:
        step = f"Reorient with {action} to find a clear path toward the {goal.label}."
        thought = f"No usable arrows; {action} points closest to the route{note}."
    return Decision(
        observation=f"Agent at ({pose.position[0]:.1f}, {pose.position[1]:.1f}).",
        goal_analysis=analysis,
        plan=(step, f"Approach the {goal.label} directly."),
        thought=thought,
        action=action,
    )


@dataclass
class OraclePlanner:
    """Upper-bound planner scoring primitives with a shortest-path cost field."""

    world: WorldModel
    inflate_cells: int = 1
    success_d: float = 1.0
    sample_step: float = 0.25
    graze_penalty: float = 10.0
    horizon: float = 1.5  # m walked before the next decision, with margin
    _cache: dict = field(default_factory=dict, repr=False)

    name = "oracle"

    def fields(self, goal: Landmark):
        if goal.id not in self._cache:
            grid = self.world.grid
            region = goal_region_cells(grid, goal, self.success_d)
            if not region:
                raise Unreachable(f"no free cell within {self.success_d} m of {goal.id}")
            cells = inflate(grid.cells, self.inflate_cells)
            for c in region:
                cells[c] = False
            soft = cost_to_go(grid.with_cells(cells), region)
            hard = cost_to_go(grid, region)
            self._cache[goal.id] = (soft, hard)
        return self._cache[goal.id]

    def cost_at(self, goal, point) -> float:
        soft, hard = self.fields(goal)
        grid = self.world.grid
        c = grid.cell_of(point)
        if not grid.in_bounds(c):
            return math.inf
        if nearest_bbox_distance(np.append(np.asarray(point, float)[:2], goal.aabb_min[2]), goal) <= self.success_d:
            return 0.0
        if math.isfinite(soft[c]):
            return float(soft[c])
        if grid.cells[c]:
            # standing in a blocked cell: continue from the best free neighbour
            nb = [hard[c[0] + dx, c[1] + dy] + math.hypot(dx, dy) * grid.resolution
                  for dx in (-1, 0, 1) for dy in (-1, 0, 1) if grid.in_bounds((c[0] + dx, c[1] + dy))]
            return float(min(nb)) + 2.0
        return float(hard[c]) + 2.0  # penalty for hugging obstacles

    def clear(self, goal, point) -> bool:
        """Outside the inflated obstacle band (or already inside the goal region)."""
        soft, _ = self.fields(goal)
        c = self.world.grid.cell_of(point)
        return self.world.grid.in_bounds(c) and (math.isfinite(soft[c]) or self.cost_at(goal, point) == 0.0)

    def score(self, pose: Pose, goal: Landmark, prim: ActionPrimitive) -> float:
        """Min over points along the clear prefix of the primitive of (distance walked + cost-to-go from there)."""
        start = pose.position[:2]
        seg = np.asarray(prim.target_3d, float)[:2] - start
        length = float(np.linalg.norm(seg))
        n = max(1, int(math.ceil(length / self.sample_step)))
        grid = self.world.grid
        best, safe = math.inf, 0.0
        leaving = not self.clear(goal, start)
        for k in range(1, n + 1):
            s = length * k / n
            p = start + seg * (k / n)
            c = grid.cell_of(p)
            if not grid.in_bounds(c) or grid.cells[c]:
                break
            if not self.clear(goal, p):
                # the obstacle band may only be crossed on the way out of it
                if leaving:
                    safe = s
                    continue
                break
            leaving = False
            safe = s
            best = min(best, s + self.cost_at(goal, p))
        if not math.isfinite(best):
            # first sample already grazes an obstacle
            return length / n + self.cost_at(goal, start + seg / n) + self.graze_penalty
        if safe < min(length, self.horizon) - 1e-9:
            best += self.graze_penalty  # the part walked before the next decision grazes something
        return best

    def decide(self, pose: Pose, goal: Landmark, space: ActionSpace, **_) -> Decision:
        here = self.cost_at(goal, pose.position)
        if not math.isfinite(here):
            raise Unreachable(f"goal {goal.id} unreachable from {pose.position[:2]}")
        if not space.primitives:
            tok = _recovery_towards(self.route_bearing(pose, goal), space.recovery)
            return _mechanical_decision(pose, goal, tok)
        n = len(space.primitives)
        scored = [(self.score(pose, goal, p), _center_rank(p.index, n), p.index) for p in space.primitives]
        best = min(scored)
        chosen = space.primitive(best[2])
        return _mechanical_decision(pose, goal, chosen.index, chosen, f" ({best[0]:.2f} m)")

    def route_bearing(self, pose: Pose, goal: Landmark, steps=4) -> float:
        """Relative bearing (deg) to the point a few cells down the cost field from here."""
        grid = self.world.grid
        cur = grid.cell_of(pose.position)
        cur_v = self.cost_at(goal, pose.position)
        for _ in range(steps):
            best = None
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    c = (cur[0] + dx, cur[1] + dy)
                    if (dx == dy == 0) or not grid.in_bounds(c):
                        continue
                    v = self.cost_at(goal, grid.cell_center(*c))
                    if best is None or v < best[0]:
                        best = (v, c)
            if best is None or not best[0] < cur_v:
                break
            cur_v, cur = best
        if cur == grid.cell_of(pose.position):
            return _relative_bearing(pose, goal.centroid)
        return _relative_bearing(pose, grid.cell_center(*cur))


@dataclass
class GreedyPlanner:
    """Myopic baseline: the primitive whose target lands closest to the goal centroid."""

    name = "greedy"

    def decide(self, pose: Pose, goal: Landmark, space: ActionSpace, **_) -> Decision:
        if not space.primitives:
            tok = _recovery_towards(_relative_bearing(pose, goal.centroid), space.recovery)
            return _mechanical_decision(pose, goal, tok)
        n = len(space.primitives)
        c = goal.centroid[:2]
        scored = [(float(np.linalg.norm(np.asarray(p.target_3d)[:2] - c)), _center_rank(p.index, n), p.index)
                  for p in space.primitives]
        chosen = space.primitive(min(scored)[2])
        return _mechanical_decision(pose, goal, chosen.index, chosen)


@dataclass
class ScriptedPlanner:
    """Replays fixed actions (first valid of each entry); used for deterministic fixtures."""

    actions: list
    name = "scripted"
    _i: int = 0

    def decide(self, pose: Pose, goal: Landmark, space: ActionSpace, **_) -> Decision:
        want = self.actions[min(self._i, len(self.actions) - 1)]
        self._i += 1
        tokens = space.tokens()
        action = want if want in tokens else (RECOVERY[0] if RECOVERY[0] in tokens else tokens[0])
        return Decision("scripted", "scripted", ("scripted",), "scripted", action)
