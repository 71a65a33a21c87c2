"""Kinematic root-trajectory controller driven by waypoint guidance losses."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSegment, Diverged

T_CLIP = 40
SIM_HZ = 20
SPEEDS = {"walk": 1.2, "run": 2.5, "slow_walk": 0.6, "stop_and_wait": 0.0}


@dataclass(frozen=True)
class GuidanceConfig:
    alpha: float = 0.1  # metric step size; latent-space default would be 1.0
    n_iter: int = 20
    keyframe_stride: int = 5
    lambda_orient: float = 1.0
    lambda_init: float = 2.0

    def __post_init__(self):
        if self.alpha < 0 or self.n_iter < 0 or self.keyframe_stride < 1:
            raise ValueError("invalid guidance config")
        if self.lambda_orient < 0 or self.lambda_init < 0:
            raise ValueError("loss weights must be non-negative")


@dataclass(frozen=True)
class Trajectory:
    translation: np.ndarray  # (T, 3)
    heading: np.ndarray  # (T,)

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=np.float64).reshape(-1, 3)
        h = np.asarray(self.heading, dtype=np.float64).reshape(-1)
        if len(t) != len(h) or len(t) == 0:
            raise ValueError("translation and heading lengths differ")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(h))):
            raise ValueError("trajectory is not finite")
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "heading", h)

    def __len__(self):
        return len(self.heading)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frame", "x", "y", "z", "phi"])
            for i, ((x, y, z), phi) in enumerate(zip(self.translation, self.heading)):
                w.writerow([i, f"{x:.6f}", f"{y:.6f}", f"{z:.6f}", f"{phi:.6f}"])


def make_waypoints(current, target, n=T_CLIP) -> np.ndarray:
    if n < 2:
        raise ValueError("need at least 2 waypoints")
    a = np.asarray(current, dtype=np.float64)[:2]
    b = np.asarray(target, dtype=np.float64)[:2]
    s = np.arange(n, dtype=np.float64) / (n - 1)
    w = a + s[:, None] * (b - a)
    w[0], w[-1] = a, b
    return w


def reference_headings(w, current_heading=None) -> np.ndarray:
    """Forward-difference heading per waypoint, last value held, unwrapped."""
    w = np.asarray(w, dtype=np.float64)
    if len(w) < 2:
        raise ValueError("need at least 2 waypoints")
    d = np.diff(w, axis=0)
    moving = np.linalg.norm(d, axis=1) > 1e-12
    if not moving.any():
        if current_heading is None:
            raise DegenerateSegment("all waypoints coincide")
        return np.full(len(w), float(current_heading))
    ang = np.arctan2(d[:, 1], d[:, 0])
    # zero-length segments inherit the previous direction (or the first valid one)
    first = ang[np.argmax(moving)]
    for i in range(len(ang)):
        if not moving[i]:
            ang[i] = ang[i - 1] if i else first
    ang = np.append(ang, ang[-1])
    return np.unwrap(ang)


def keyframes(n_frames, stride) -> np.ndarray:
    k = list(range(0, n_frames, stride))
    if k[-1] != n_frames - 1:
        k.append(n_frames - 1)
    return np.array(k)


def _safe_unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return np.where(n > 0, v / np.where(n > 0, n, 1.0), 0.0), n[..., 0]


def guidance_loss(traj: Trajectory, w, phi_ref, prev_position, cfg: GuidanceConfig):
    """Composite waypoint/heading/continuity loss and its (sub)gradient.

    Returns ``(loss, grad_translation (T,3), grad_heading (T,))``.
    """
    w = np.asarray(w, dtype=np.float64)
    phi_ref = np.asarray(phi_ref, dtype=np.float64)
    if len(w) != len(traj) or len(phi_ref) != len(traj):
        raise ValueError("waypoints, headings and trajectory must share a frame count")
    k = keyframes(len(traj), cfg.keyframe_stride)
    g_t = np.zeros_like(traj.translation)
    g_h = np.zeros_like(traj.heading)

    u, dist = _safe_unit(traj.translation[k, :2] - w[k])
    g_t[k, :2] += u
    loss = dist.sum()

    dphi = traj.heading[k] - phi_ref[k]
    loss += cfg.lambda_orient * np.abs(dphi).sum()
    g_h[k] += cfg.lambda_orient * np.sign(dphi)

    if prev_position is not None and cfg.lambda_init > 0:
        u0, d0 = _safe_unit(traj.translation[0, :2] - np.asarray(prev_position, dtype=np.float64)[:2])
        loss += cfg.lambda_init * d0
        g_t[0, :2] += cfg.lambda_init * u0
    return float(loss), g_t, g_h


def optimize_trajectory(init: Trajectory, w, phi_ref, prev_position, cfg: GuidanceConfig, history=None):
    """Fixed-step gradient descent; a step that raises the loss is rejected and the step halved."""
    traj = init
    loss, g_t, g_h = guidance_loss(traj, w, phi_ref, prev_position, cfg)
    if not math.isfinite(loss):
        raise Diverged("initial loss is not finite", 0)
    alpha = cfg.alpha
    halved_for_nan = False
    if history is not None:
        history.append(loss)
    for it in range(1, cfg.n_iter + 1):
        if alpha == 0:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            t_new = traj.translation - alpha * g_t
            h_new = traj.heading - alpha * g_h
        if not (np.all(np.isfinite(t_new)) and np.all(np.isfinite(h_new))):
            new_loss = math.nan
        else:
            cand = Trajectory(t_new, h_new)
            new_loss, ng_t, ng_h = guidance_loss(cand, w, phi_ref, prev_position, cfg)
        if not math.isfinite(new_loss):
            if halved_for_nan:
                raise Diverged("loss became non-finite", it)
            halved_for_nan = True
            alpha *= 0.5
            continue
        if new_loss > loss:
            alpha *= 0.5
            continue
        traj, loss, g_t, g_h = cand, new_loss, ng_t, ng_h
        if history is not None:
            history.append(loss)
    return traj


def interpolate_keyframes(traj: Trajectory, stride) -> Trajectory:
    """Re-derive non-keyframe frames by linear interpolation between keyframes."""
    k = keyframes(len(traj), stride)
    f = np.arange(len(traj))
    t = np.column_stack([np.interp(f, k, traj.translation[k, d]) for d in range(3)])
    h = np.interp(f, k, traj.heading[k])
    return Trajectory(t, h)


def initial_trajectory(w, heading, z=0.0) -> Trajectory:
    w = np.asarray(w, dtype=np.float64)
    t = np.column_stack([w, np.full(len(w), z)])
    return Trajectory(t, np.full(len(w), float(heading)))


def plan_clip(position, heading, target, cfg: GuidanceConfig = GuidanceConfig(), prev_position=None, n_frames=T_CLIP):
    """Waypoints from ``position`` to ``target``, then guided optimization of a root clip."""
    w = make_waypoints(position, target, n_frames)
    phi = reference_headings(w, heading)
    # keep the reference continuous with the current heading
    phi = phi + 2 * math.pi * np.round((heading - phi[0]) / (2 * math.pi))
    init = initial_trajectory(w, heading, float(np.asarray(position)[2]) if len(position) > 2 else 0.0)
    prev = position if prev_position is None else prev_position
    traj = optimize_trajectory(init, w, phi, prev, cfg)
    return interpolate_keyframes(traj, cfg.keyframe_stride)


@dataclass(frozen=True)
class AgentState:
    position: np.ndarray  # (3,)
    heading: float
    arc: float = 0.0  # arc length consumed along the current clip

    def __post_init__(self):
        p = np.zeros(3)
        q = np.asarray(self.position, dtype=np.float64).reshape(-1)
        p[: len(q)] = q
        object.__setattr__(self, "position", p)


def _arc_lengths(traj: Trajectory):
    seg = np.linalg.norm(np.diff(traj.translation[:, :2], axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def execute_step(state: AgentState, traj: Trajectory, style="walk", dt=1.0 / SIM_HZ) -> AgentState:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if style not in SPEEDS:
        raise ValueError(f"unknown locomotion style {style!r}")
    speed = SPEEDS[style]
    if speed == 0:
        return state
    cum = _arc_lengths(traj)
    s = min(state.arc + speed * dt, cum[-1])
    if cum[-1] == 0:
        return replace(state, position=traj.translation[-1].copy(), arc=0.0)
    i = int(np.searchsorted(cum, s, side="right") - 1)
    i = min(i, len(cum) - 2)
    seg = cum[i + 1] - cum[i]
    f = 0.0 if seg == 0 else (s - cum[i]) / seg
    pos = traj.translation[i] + f * (traj.translation[i + 1] - traj.translation[i])
    head = traj.heading[i] + f * (traj.heading[i + 1] - traj.heading[i])
    if s >= cum[-1]:
        pos, head = traj.translation[-1].copy(), traj.heading[-1]
    return AgentState(pos, float(head), s)
