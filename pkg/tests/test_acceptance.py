"""Acceptance criteria 1-9. Each test prints exactly one PASS/FAIL line with its pinned tolerances."""

import json
import math
import os
import time
from collections import deque
from dataclasses import replace

import numpy as np
import pytest

from vgagent import cli
from vgagent.benchmark import (
    BatchConfig, EpisodeResult, build_demo_world, compute_metrics, generate_scenarios, run_batch,
)
from vgagent.collision import AgentBody, ProximityIndex, build_index, check_human_collision, check_scene_collision
from vgagent.errors import InvalidAction, Unreachable
from vgagent.motion import (
    GuidanceConfig, Trajectory, guidance_loss, initial_trajectory, keyframes, make_waypoints, optimize_trajectory,
    reference_headings,
)
from vgagent.planning import RECOVERY, ActionPrimitive, ActionSpace, AgentStatus, Memory
from vgagent.semantic_field import (
    FieldConfig, SplatScene, contrastive_loss, look_at, make_fixture, render_feature_map, run_pipeline,
    smoothing_loss, train_features, view_weights,
)
from vgagent.semantic_field.pipeline import gt_masks
from vgagent.vlm_client import GUIDANCE, EndpointConfig, MockVLMServer, PromptContext, VLMClient, build_request
from vgagent.vlm_client import parse_response
from vgagent.world import OccupancyGrid, TriMesh, astar_shortest_path, box_mesh

DATA = os.path.join(os.path.dirname(__file__), "data")
SQRT2 = math.sqrt(2.0)


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n} {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


@pytest.fixture(scope="module")
def demo():
    return build_demo_world()


# ------------------------------------------------------------------ 1. metrics


def _result(rng, run):
    legs = tuple(rng.uniform(1, 20, rng.integers(1, 6)))
    reached = int(rng.integers(0, len(legs) + 1))
    progress = tuple([True] * reached + [False] * (len(legs) - reached))
    p = float(rng.uniform(0, 3) * sum(legs))
    return EpisodeResult("s", "simnav", "t", run, reached == len(legs), p, legs, progress, int(rng.integers(0, 2)))


def test_criterion_1_metrics(verdict):
    t0 = time.perf_counter()
    hand = [
        compute_metrics([EpisodeResult("a", "simnav", "t", 0, True, 20.0, (10.0,), (True,), 0)]).SPL - 0.5,
        compute_metrics([EpisodeResult("a", "simnav", "t", 0, True, 10.0, (10.0,), (True,), 0)]).SPL - 1.0,
        compute_metrics([EpisodeResult("a", "multigoal", "t", 0, False, 9.0, (3.0,) * 5,
                                       (True,) * 3 + (False,) * 2, 0)]).PR - 0.6,
        # 3 of 5 goals over 9 m walked where the reached prefix is 9 m optimal
        compute_metrics([EpisodeResult("a", "multigoal", "t", 0, False, 18.0, (3.0,) * 5,
                                       (True,) * 3 + (False,) * 2, 0)]).PPL - 0.6 * 0.5,
    ]
    hand_err = max(abs(e) for e in hand)
    rng = np.random.default_rng(0)
    bad = 0
    for _ in range(1000):
        runs = int(rng.integers(1, 4))
        rep = compute_metrics([_result(rng, r) for r in range(runs) for _ in range(int(rng.integers(1, 5)))])
        vals = [rep.SR, rep.SPL, rep.CR, rep.PR, rep.PPL]
        if not (rep.SPL <= rep.SR + 1e-12 and rep.PPL <= rep.PR + 1e-12 and all(0 <= v <= 1 for v in vals)):
            bad += 1
    dt = time.perf_counter() - t0
    ok = hand_err <= 1e-9 and bad == 0 and dt < 1.0
    verdict(1, ok, f"hand-value max err {hand_err:.1e} (tol 1e-9); invariant violations {bad}/1000 "
                   f"(SPL<=SR, PPL<=PR, all in [0,1]); {dt:.2f} s (limit 1 s)")


# ------------------------------------------------------------------ 2. A* vs Dijkstra


def _less(a, b):
    """Exact comparison of costs stored as (straight, diagonal) counts: a0 + a1*sqrt2 < b0 + b1*sqrt2."""
    x, y = a[0] - b[0], b[1] - a[1]  # need x < y*sqrt2
    if y >= 0:
        return x < 0 or x * x < 2 * y * y
    return x < 0 and x * x > 2 * y * y


def dijkstra_exact(cells, s, t):
    """Label-correcting search with exact integer cost comparison; no shared code with the planner."""
    nx, ny = cells.shape
    best = {s: (0, 0)}
    queue = deque([s])
    while queue:
        c = queue.popleft()
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == dy == 0:
                    continue
                u, v = c[0] + dx, c[1] + dy
                if not (0 <= u < nx and 0 <= v < ny) or cells[u, v]:
                    continue
                if dx and dy and (cells[c[0] + dx, c[1]] or cells[c[0], c[1] + dy]):
                    continue
                cand = (best[c][0] + (0 if dx and dy else 1), best[c][1] + (1 if dx and dy else 0))
                if (u, v) not in best or _less(cand, best[(u, v)]):
                    best[(u, v)] = cand
                    queue.append((u, v))
    if t not in best:
        return math.inf
    a, d = best[t]
    return a + d * SQRT2


def test_criterion_2_astar_equals_dijkstra(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    mismatches = unreachable = 0
    for _ in range(200):
        nx, ny = (int(v) for v in rng.integers(2, 21, size=2))
        cells = rng.random((nx, ny)) < rng.uniform(0.0, 0.4)
        free = np.argwhere(~cells)
        if len(free) < 2:
            cells[:] = False
            free = np.argwhere(~cells)
        s, t = (tuple(int(v) for v in free[i]) for i in rng.choice(len(free), 2, replace=False))
        grid = OccupancyGrid((0.0, 0.0), 1.0, cells)
        expected = dijkstra_exact(cells, s, t)
        try:
            _, got = astar_shortest_path(grid, grid.cell_center(*s), grid.cell_center(*t))
        except Unreachable:
            got = math.inf
            unreachable += 1
        mismatches += got != expected
    dt = time.perf_counter() - t0
    verdict(2, mismatches == 0 and dt < 10, f"{mismatches}/200 path costs differ from Dijkstra (exact float "
                                            f"equality; {unreachable} unreachable pairs agreed); {dt:.1f} s (limit 10 s)")


# ------------------------------------------------------------------ 3. collision


def test_criterion_3_collision(verdict):
    t0 = time.perf_counter()
    mesh = TriMesh.concatenate([box_mesh((0, 0, 0), (1, 2, 1.5)), box_mesh((3, 0, 0), (3.2, 4, 2))])
    idx = build_index(mesh)
    q = np.random.default_rng(3).uniform([-1, -1, -0.5], [5, 5, 3], size=(1000, 3))
    samples = idx.points[0]
    brute = np.array([np.sqrt(((samples - p) ** 2).sum(axis=1)).min() for p in q])
    exact = bool(np.array_equal(idx.query(q), brute))

    body = AgentBody(np.zeros(3), 0.0, n_points=20)
    pts = body.points
    # the fraction test is strict: 2 of 20 points is exactly 10% and must not count
    at_10 = check_scene_collision(body, ProximityIndex([pts[:2]]))[0]
    above_10 = check_scene_collision(body, ProximityIndex([pts[:3]]))[0]
    # distance threshold is strict too: a point at exactly tau is not violating
    off = ProximityIndex([pts[:3] + np.array([0.0, 0.0, 0.25])])
    d = off.query(pts[:3]).min()
    n_at = check_scene_collision(body, off, tau=d)[1]
    n_above = check_scene_collision(body, off, tau=np.nextafter(d, np.inf))[1]
    # root separation must be strictly under 0.5 m
    h_in = check_human_collision([0, 0, 0], [np.nextafter(0.5, 0), 0, 0])
    h_at = check_human_collision([0, 0, 0], [0.5, 0, 0])
    boundaries = (not at_10) and above_10 and n_at == 0 and n_above >= 1 and h_in and not h_at
    dt = time.perf_counter() - t0
    verdict(3, exact and boundaries and dt < 10,
            f"index == brute force on 1000 queries: {exact}; fraction 2/20 -> {at_10}, 3/20 -> {above_10}; "
            f"point at tau counted {n_at}; human 0.5 m -> {h_at}, just under -> {h_in}; {dt:.1f} s (limit 10 s)")


# ------------------------------------------------------------------ 4. guidance


def _problem(rng, n=40):
    w = make_waypoints(rng.uniform(-5, 5, 2), rng.uniform(-5, 5, 2), n)
    phi = reference_headings(w)
    t = np.column_stack([w + rng.normal(0, 0.5, (n, 2)), rng.normal(0, 0.1, n)])
    return Trajectory(t, phi + rng.normal(0, 0.5, n)), w, phi, w[0] + rng.normal(0, 0.3, 2)


def _fd(traj, w, phi, prev, cfg, eps=1e-6):
    n = len(traj)
    x = np.concatenate([traj.translation.ravel(), traj.heading])

    def f(v):
        return guidance_loss(Trajectory(v[: 3 * n].reshape(n, 3), v[3 * n:]), w, phi, prev, cfg)[0]

    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def test_criterion_4_guidance(verdict):
    t0 = time.perf_counter()
    cfg = GuidanceConfig()
    rng = np.random.default_rng(4)
    worst_rel, non_monotone = 0.0, 0
    for _ in range(100):
        traj, w, phi, prev = _problem(rng)
        _, gt, gh = guidance_loss(traj, w, phi, prev, cfg)
        g = np.concatenate([gt.ravel(), gh])
        fd = _fd(traj, w, phi, prev, cfg)
        worst_rel = max(worst_rel, np.linalg.norm(g - fd) / np.linalg.norm(fd))
        hist = []
        optimize_trajectory(traj, w, phi, prev, cfg, history=hist)
        non_monotone += any(b > a + 1e-12 for a, b in zip(hist, hist[1:]))
    w = make_waypoints((0, 0.5), (6, 0.5), 40)
    out = optimize_trajectory(initial_trajectory(make_waypoints((0, 0), (6, 0), 40), 0.0), w,
                              reference_headings(w), w[0], cfg)
    k = keyframes(40, cfg.keyframe_stride)
    key_err = float(np.linalg.norm(out.translation[k, :2] - w[k], axis=1).max())
    dt = time.perf_counter() - t0
    ok = worst_rel < 1e-5 and non_monotone == 0 and key_err <= 1e-3 and cfg.n_iter == 20 and dt < 30
    verdict(4, ok, f"worst gradient rel err {worst_rel:.1e} over 100 trajectories (tol 1e-5); "
                   f"{non_monotone}/100 non-monotone loss histories; keyframe err {key_err:.1e} m with "
                   f"N_g={cfg.n_iter} (tol 1e-3); {dt:.1f} s (limit 30 s)")


# ------------------------------------------------------------------ 5. semantic field


def test_criterion_5_semantic_field(verdict):
    t0 = time.perf_counter()
    rows = []
    for seed in range(3):
        fx = make_fixture(seed)
        cfg = FieldConfig(seed=seed)
        w = view_weights(fx.scene, fx.views)
        masks = [list(m.values()) for m in gt_masks(fx.scene, fx.views, w, cfg.min_mask_pixels)]
        lifted = train_features(fx.scene, fx.views, masks, cfg.lift_iters, cfg.lift_lr, cfg.lambda_c, cfg.lambda_s,
                                weights=w)
        arms = []
        for occ, sel in ((False, False), (True, False), (True, True)):
            r = run_pipeline(fx.scene, fx.views, replace(cfg, use_occlusion=occ, use_view_selection=sel),
                             weights=w, lifted=lifted)
            arms.append((r.miou, r.macc))
        rows.append(arms)
    full_ok = all(m >= 0.9 and a >= 0.9 for arms in rows for m, a in [arms[2]])
    order_ok = all(arms[0][0] < arms[1][0] < arms[2][0] for arms in rows)
    dt = time.perf_counter() - t0
    detail = "; ".join(f"seed {s}: Base {a[0][0]:.3f} < +Occ {a[1][0]:.3f} < +ViewSel {a[2][0]:.3f} "
                       f"(mAcc {a[2][1]:.3f})" for s, a in enumerate(rows))
    verdict(5, full_ok and order_ok and dt < 300,
            f"{detail}; full mIoU/mAcc >= 0.9: {full_ok}; ordering: {order_ok}; {dt:.0f} s (limit 300 s)")


# ------------------------------------------------------------------ 6. loss identities


def test_criterion_6_loss_identities(verdict):
    rng = np.random.default_rng(6)
    masks = [np.arange(12) < 5, (np.arange(12) >= 5) & (np.arange(12) < 9), np.arange(12) >= 9]
    const = np.zeros((12, 4))
    for m in masks:
        const[m] = rng.normal(size=4)
    zero_if_const = smoothing_loss(const, masks) == 0.0
    perturbed = const.copy()
    perturbed[rng.integers(12), rng.integers(4)] += 1e-4
    pos_if_not = smoothing_loss(perturbed, masks) > 0
    two = [np.array([True, False]), np.array([False, True])]
    lc_err = abs(contrastive_loss(np.array([[0.0], [1.0]]), two, eps=0) - 1.0)
    cam = look_at((0.0, -5.0, 0.0), (0.0, 0.0, 0.0), width=32, height=24, fx=24.0)
    n = 30
    s = SplatScene(rng.uniform(-1, 1, (n, 3)), np.full(n, 0.3), np.full(n, 0.8), np.full((n, 3), 0.5),
                   rng.normal(size=(n, 5)))
    f, g = rng.normal(size=(2, n, 5))
    a, b = 1.7, -0.3
    lin = np.abs(render_feature_map(s, cam, a * f + b * g).features
                 - a * render_feature_map(s, cam, f).features - b * render_feature_map(s, cam, g).features).max()
    ok = zero_if_const and pos_if_not and lc_err <= 1e-9 and lin <= 1e-9
    verdict(6, ok, f"L_s zero on per-mask-constant features: {zero_if_const}, positive after 1e-4 nudge: "
                   f"{pos_if_not}; L_c(K=2, d=1) err {lc_err:.1e} (tol 1e-9); rendering linearity err {lin:.1e} "
                   f"(tol 1e-9)")


# ------------------------------------------------------------------ 7. end-to-end navigation


def test_criterion_7_oracle_navigation(verdict, demo):
    t0 = time.perf_counter()
    simnav = generate_scenarios(demo, "simnav", n_landmarks=10, per_landmark=5, seed=0)
    obstnav = generate_scenarios(demo, "obstnav", n_landmarks=10, per_landmark=5, seed=0)
    oracle = run_batch(demo, simnav, BatchConfig("oracle", seed=0))
    rep = compute_metrics(oracle)
    again = run_batch(demo, simnav, BatchConfig("oracle", seed=0))
    deterministic = [r.to_json() for r in oracle] == [r.to_json() for r in again]
    g_sim = compute_metrics(run_batch(demo, simnav, BatchConfig("greedy", seed=0)))
    g_obst = compute_metrics(run_batch(demo, obstnav, BatchConfig("greedy", seed=0)))
    dt = time.perf_counter() - t0
    ok = (len(simnav) >= 50 and rep.SR >= 0.95 and rep.SPL >= 0.85 and rep.CR <= 0.05 and g_obst.CR >= g_sim.CR
          and deterministic and dt < 300)
    verdict(7, ok, f"oracle SimNav over {len(simnav)} episodes: SR {rep.SR:.3f} (>= 0.95), SPL {rep.SPL:.3f} "
                   f"(>= 0.85), CR {rep.CR:.3f} (<= 0.05); greedy CR ObstNav {g_obst.CR:.3f} >= SimNav "
                   f"{g_sim.CR:.3f}: {g_obst.CR >= g_sim.CR}; repeat run identical: {deterministic}; "
                   f"{dt:.0f} s (limit 300 s)")


# ------------------------------------------------------------------ 8. protocol


GOLDEN_GUIDANCE = {
    AgentStatus.NORMAL: "The goal is marked with a green 'GOAL' box. Choose a numbered arrow that leads safely and "
                        "directly towards it.",
    AgentStatus.GOAL_LOST: "Your goal is NOT visible. Analyze your memory and the scene to deduce the best action "
                           "based on your last successful plan.",
    AgentStatus.STUCK: "No forward paths are available. Choose a recovery action to reorient.",
}


def _space():
    prims = [ActionPrimitive(i, "walk", (0.0, -50.0), np.array([i, 0.0, 0.0]), 5.0, 0.0, 160) for i in range(1, 6)]
    return ActionSpace(prims)


def _reply(action):
    return json.dumps({"observation": "o", "goal_analysis": "g", "plan": ["p"], "thought": "t", "action": action})


def test_criterion_8_protocol(verdict):
    t0 = time.perf_counter()
    space, stuck = _space(), ActionSpace([], RECOVERY)
    mem = Memory(("Walk to the red kiosk.", "Turn left at the fountain."), ("thought: start | action: 3",))
    golden_ok = True
    for status in AgentStatus:
        ctx = PromptContext(step=4, status=status, goal_description="the blue newsstand",
                            position=(1.234, -5.678, 0.0), yaw=0.5,
                            space=stuck if status is AgentStatus.STUCK else space, memory=mem)
        b = build_request(ctx)
        with open(os.path.join(DATA, f"user_prompt_{status.value.lower()}.txt")) as fh:
            golden_ok &= b.user_text == fh.read()
        golden_ok &= GUIDANCE[status] == GOLDEN_GUIDANCE[status] == b.payload["action_guidance"]
    rejects = 0
    for bad, sp in ((6, space), (0, space), ("turn_around", space), (3, stuck), ("stop_and_wait", space)):
        try:
            parse_response(_reply(bad), sp)
        except InvalidAction:
            rejects += 1
    accepts = parse_response(_reply(5), space).action == 5
    bundle = build_request(PromptContext(step=0, status=AgentStatus.NORMAL, goal_description="x",
                                         position=(0, 0, 0), yaw=0.0, space=space, memory=Memory()), image=b"png")
    with MockVLMServer(["garbage", "{still bad", _reply(2)]) as srv, \
            VLMClient(EndpointConfig(srv.url, max_retries=2)) as client:
        d1 = client.query(bundle, space)
    retry_ok = d1.action == 2 and not d1.fallback and len(srv.calls) == 3
    with MockVLMServer(["nope"] * 5) as srv, VLMClient(EndpointConfig(srv.url, max_retries=1)) as client:
        d2 = client.query(bundle, space)
    fallback_ok = d2.fallback and d2.action == "turn_left_30" and len(srv.calls) == 2
    dt = time.perf_counter() - t0
    ok = golden_ok and rejects == 5 and accepts and retry_ok and fallback_ok and dt < 5
    verdict(8, ok, f"golden prompts per status match: {golden_ok}; out-of-space actions rejected {rejects}/5; "
                   f"retry after 2 bad replies -> 3 calls: {retry_ok}; fallback after 1+1 bad -> 2 calls: "
                   f"{fallback_ok}; {dt:.1f} s (limit 5 s)")


# ------------------------------------------------------------------ 9. determinism


def test_criterion_9_bench_determinism(verdict, tmp_path, capsys):
    world = tmp_path / "world"
    assert cli.main(["prepare", "--demo", "--out", str(world), "--levels", "simnav,socialnav",
                     "--n-landmarks", "4", "--per-landmark", "2"]) == 0
    cfg = tmp_path / "run.toml"
    cfg.write_text(f'world = "{world}"\nlevels = ["simnav", "socialnav"]\nplanner = "greedy"\nruns = 2\n'
                   'seed = 11\njobs = 2\n')
    outs = []
    for name in ("a", "b"):
        assert cli.main(["bench", "--config", str(cfg), "--out", str(tmp_path / name)]) == 0
        (d,) = os.listdir(tmp_path / name)
        outs.append(open(tmp_path / name / d / "results.jsonl", "rb").read())
    capsys.readouterr()
    same = outs[0] == outs[1]
    n = outs[0].count(b"\n")
    verdict(9, same and n == 32, f"two cmd_bench invocations (seed 11, 2 runs, 2 jobs, {n} episodes) give "
                                 f"byte-identical results.jsonl: {same}")
