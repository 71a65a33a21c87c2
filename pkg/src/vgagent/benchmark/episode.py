"""Closed-loop episode: render, propose, decide, guide a root clip, execute and check collisions."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from ..collision import AgentBody, ProximityIndex, build_index, check_human_collision, check_scene_collision
from ..motion import SIM_HZ, AgentState, GuidanceConfig, execute_step, plan_clip
from ..perception import CameraSpec, Pose, compose_prompt_image, detect_goal, detect_humans, render_ego, RayScene
from ..planning import (
    RECOVERY_ANGLES, STOP, Memory, determine_status, propose_actions, sensing_mask, update_memory, validate_action,
)
from ..world import TriMesh, WorldModel, ground_face_mask, nearest_bbox_distance
from .scenarios import Scenario, scenario_world

MAX_DECISIONS = 60


@dataclass(frozen=True)
class EpisodeConfig:
    decide_every: int = 20
    sim_hz: int = SIM_HZ
    success_d: float = 1.0
    max_decisions: int = MAX_DECISIONS
    J: int = 9
    safety: float = 1.5
    style: str = "walk"
    detect_fail_rate: float = 0.0
    full_render: bool = None  # None: only when the planner looks at the image
    guidance: GuidanceConfig = field(default_factory=GuidanceConfig)
    transcript_dir: str = None

    def __post_init__(self):
        if self.decide_every < 1 or self.sim_hz < 1 or self.max_decisions < 0:
            raise ValueError("invalid episode timing")


@dataclass
class EpisodeResult:
    scenario_id: str
    level: str
    planner: str
    run: int
    success: bool
    path_length: float
    optimal_legs: tuple
    progress: tuple  # per-goal reached flags, prefix-monotone
    collisions: int
    first_collision_step: int = None
    scene_collisions: int = 0
    human_collisions: int = 0
    decisions: int = 0
    steps: int = 0
    error: str = None
    trace: list = field(default_factory=list)

    @property
    def optimal_length(self) -> float:
        return float(sum(self.optimal_legs))

    @property
    def goals_reached(self) -> int:
        return int(sum(self.progress))

    @property
    def progress_ratio(self) -> float:
        return self.goals_reached / len(self.progress)

    @property
    def reached_optimal(self) -> float:
        return float(sum(self.optimal_legs[: self.goals_reached]))

    def to_json(self):
        r = lambda v: round(float(v), 6)  # noqa: E731
        return {
            "scenario_id": self.scenario_id,
            "level": self.level,
            "planner": self.planner,
            "run": self.run,
            "success": self.success,
            "path_length": r(self.path_length),
            "optimal_legs": [r(v) for v in self.optimal_legs],
            "progress": list(self.progress),
            "collisions": self.collisions,
            "first_collision_step": self.first_collision_step,
            "scene_collisions": self.scene_collisions,
            "human_collisions": self.human_collisions,
            "decisions": self.decisions,
            "steps": self.steps,
            "error": self.error,
            "trace": self.trace,
        }

    @classmethod
    def from_json(cls, d):
        d = dict(d)
        d["optimal_legs"] = tuple(d["optimal_legs"])
        d["progress"] = tuple(d["progress"])
        return cls(**d)


@dataclass
class EpisodeContext:
    """Per-scenario world, ray scene and collision index, shareable between runs."""

    world: WorldModel
    scene: RayScene
    index: ProximityIndex

    @classmethod
    def build(cls, world: WorldModel, sc: Scenario, base_index: ProximityIndex = None):
        w = scenario_world(world, sc)
        if base_index is None:
            idx = build_index(w.obstacle_mesh)
        elif sc.obstacles:
            extra = TriMesh.concatenate([o.mesh() for o in sc.obstacles])
            idx = base_index.merged(build_index(extra.subset(~ground_face_mask(extra))))
        else:
            idx = base_index
        return cls(w, RayScene.from_world(w), idx)


def _rotation_steps(heading, angle_deg, n):
    a = math.radians(angle_deg)
    return [heading + a * (k + 1) / n for k in range(n)]


def _human_records(obs, pose, peds):
    out = []
    pos = {pid: p for p, pid in peds}
    for pid, box in detect_humans(obs):
        d = np.asarray(pos[pid])[:2] - pose.position[:2]
        bearing = math.degrees((math.atan2(d[1], d[0]) - pose.yaw + math.pi) % (2 * math.pi) - math.pi)
        out.append({"id": pid, "box_px": [round(v, 1) for v in box], "distance_m": float(np.linalg.norm(d)),
                    "bearing_deg": bearing})
    return out


def run_episode(world: WorldModel, sc: Scenario, planner, cfg: EpisodeConfig = EpisodeConfig(), run=0, rng=None,
                context: EpisodeContext = None, cam: CameraSpec = CameraSpec()) -> EpisodeResult:
    """Planner errors end the episode as a failure; they are recorded, never raised."""
    ctx = context or EpisodeContext.build(world, sc)
    rng = rng if rng is not None else np.random.default_rng(sc.seed)
    goals = [ctx.world.landmark(g) for g in sc.goals]
    full = cfg.full_render if cfg.full_render is not None else bool(getattr(planner, "needs_image", False))
    mask = None if full else sensing_mask(cam, cfg.J)
    social = bool(sc.pedestrians)
    dt = 1.0 / cfg.sim_hz

    state = AgentState((sc.start[0], sc.start[1], 0.0), float(sc.start[2]))
    reached = [False] * len(goals)
    gi = 0
    memory = Memory()
    res = EpisodeResult(sc.id, sc.level, getattr(planner, "name", type(planner).__name__), run, False, 0.0,
                        tuple(sc.optimal), tuple(reached), 0)
    in_scene, in_human = False, set()

    def arrived(pos):
        g = goals[gi]
        return nearest_bbox_distance([pos[0], pos[1], g.aabb_min[2]], g) <= cfg.success_d

    budget = cfg.max_decisions * len(goals)  # per-goal allowance
    while res.decisions < budget and gi < len(goals):
        goal = goals[gi]
        t = res.steps * dt
        peds = [(tuple(p.position(t)), p.id) for p in sc.pedestrians]
        pose = Pose(state.position, state.heading)
        obs = render_ego(ctx.world, peds, pose, cam, pixel_mask=mask, scene=ctx.scene)
        space = propose_actions(obs, cfg.J, cfg.safety, cam, pose, motion_type=cfg.style, social=social)
        box, _ = detect_goal(obs, goal, pose, cam, fail_rate=cfg.detect_fail_rate, rng=rng)
        status = determine_status(space, box)
        humans = _human_records(obs, pose, peds) if (full and peds) else []
        tag = f"{sc.id}/r{run}/d{res.decisions:03d}"
        try:
            dec = planner.decide(pose, goal, space, obs=obs, status=status, memory=memory, step=res.decisions,
                                 goal_box=box, humans=humans, social=social, tag=tag)
            validate_action(dec.action, space)
        except Exception as exc:  # a broken planner fails the episode, not the batch
            res.error = f"{type(exc).__name__}: {exc}"
            break
        memory = update_memory(memory, dec)
        res.decisions += 1
        res.trace.append({
            "decision": res.decisions - 1,
            "step": res.steps,
            "x": round(float(state.position[0]), 4),
            "y": round(float(state.position[1]), 4),
            "yaw": round(float(state.heading), 4),
            "status": status.value,
            "goal": goal.id,
            "n_actions": len(space.primitives),
            "action": dec.action,
            "fallback": dec.fallback,
        })
        if cfg.transcript_dir and full:
            os.makedirs(cfg.transcript_dir, exist_ok=True)
            compose_prompt_image(obs, space.primitives, box, [(h["id"], h["box_px"]) for h in humans]).save(
                os.path.join(cfg.transcript_dir, tag.replace("/", "_") + ".png"))

        if isinstance(dec.action, int):
            target = space.primitive(dec.action).target_3d
            traj = plan_clip(state.position, state.heading, target, cfg.guidance)
            state = AgentState(state.position, state.heading, 0.0)
            moves = None
        elif dec.action == STOP:
            moves = [state.heading] * cfg.decide_every
        else:
            moves = _rotation_steps(state.heading, RECOVERY_ANGLES[dec.action], cfg.decide_every)

        for k in range(cfg.decide_every):
            prev = state.position.copy()
            if moves is None:
                state = execute_step(state, traj, cfg.style, dt)
            else:
                state = AgentState(prev, moves[k], 0.0)
            res.path_length += float(np.linalg.norm(state.position[:2] - prev[:2]))
            res.steps += 1
            t = res.steps * dt

            hit, _ = check_scene_collision(AgentBody(state.position, state.heading), ctx.index)
            if hit and not in_scene:
                res.scene_collisions += 1
                res.first_collision_step = res.first_collision_step if res.first_collision_step is not None else res.steps
            in_scene = hit
            for p in sc.pedestrians:
                close = check_human_collision(state.position[:2], p.position(t)[:2])
                if close and p.id not in in_human:
                    res.human_collisions += 1
                    if res.first_collision_step is None:
                        res.first_collision_step = res.steps
                (in_human.add if close else in_human.discard)(p.id)

            if arrived(state.position):
                reached[gi] = True
                gi += 1
                break

    res.collisions = res.scene_collisions + res.human_collisions
    res.progress = tuple(reached)
    res.success = all(reached) and res.error is None
    return res
