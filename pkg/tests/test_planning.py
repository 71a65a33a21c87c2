import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vgagent.errors import InvalidAction
from vgagent.perception import CameraSpec, Pose, render_ego
from vgagent.planning import (
    RECOVERY, ActionPrimitive, ActionSpace, AgentStatus, Decision, GreedyPlanner, Memory, OraclePlanner,
    candidate_angles, determine_status, propose_actions, update_memory, validate_action,
)
from vgagent.world import Landmark, TriMesh, WorldModel, box_mesh, quad_mesh

CAM = CameraSpec()


def make_world(*obstacles, landmarks=(), lo=(-20, -20), hi=(20, 20)):
    mesh = TriMesh.concatenate([quad_mesh(lo, hi)] + list(obstacles))
    return WorldModel.from_mesh(mesh, landmarks, align=False)


def space_at(world, pose, **kw):
    return propose_actions(render_ego(world, [], pose, CAM), cam=CAM, pose=pose, **kw)


def test_open_ground_nine_primitives():
    sp = space_at(make_world(), Pose((0, 0), 0.0))
    assert len(sp.primitives) == 9 and sp.recovery == ()
    for p in sp.primitives:
        assert p.path_clearance == pytest.approx(8.0, abs=0.35)
        assert abs(p.target_3d[2]) < 1e-3


def test_candidate_angles_uniform():
    a = candidate_angles(CAM, 9)
    assert np.allclose(np.diff(a), np.diff(a)[0])
    assert a[0] > 0 > a[-1] and abs(a[4]) < 1e-12


def test_wall_prunes_forward_candidates():
    world = make_world(box_mesh((0.8, -0.5, 0), (1.0, 0.5, 3)))
    sp = space_at(world, Pose((0, 0), 0.0), safety=1.5)
    # a column at angle t crosses the wall face x=0.8 at y=0.8 tan t
    expected = [a for a in candidate_angles(CAM, 9) if 0.8 * math.tan(abs(a)) > 0.5]
    assert [p.angle for p in sp.primitives] == pytest.approx(expected)
    assert len(expected) == 2


def canyon(open_back=False):
    walls = [box_mesh((1.0, -1.2, 0), (1.2, 1.2, 3)), box_mesh((-1.2, 1.0, 0), (1.2, 1.2, 3)),
             box_mesh((-1.2, -1.2, 0), (1.2, -1.0, 3))]
    if not open_back:
        walls.append(box_mesh((-1.2, -1.2, 0), (-1.0, 1.2, 3)))
    return walls


def test_box_canyon_is_stuck():
    sp = space_at(make_world(*canyon()), Pose((0, 0), 0.0))
    assert sp.primitives == () and sp.recovery == RECOVERY
    assert determine_status(sp, (0, 0, 1, 1)) is AgentStatus.STUCK


def prim(i, target, angle=0.0):
    return ActionPrimitive(i, "walk", (0.0, -50.0), np.array([*target, 0.0]), 5.0, angle, 160)


def test_status_trichotomy():
    sp = ActionSpace([prim(1, (3, 0))])
    assert determine_status(sp, (1, 2, 3, 4)) is AgentStatus.NORMAL
    assert determine_status(sp, None) is AgentStatus.GOAL_LOST
    assert determine_status(ActionSpace([], RECOVERY), None) is AgentStatus.STUCK


def test_action_space_invariants():
    with pytest.raises(ValueError):
        ActionSpace([prim(2, (1, 0))])
    with pytest.raises(ValueError):
        ActionSpace([], ())
    assert ActionSpace([prim(1, (1, 0))], (), True).tokens() == [1, "stop_and_wait"]


def enumerate_oracle(planner, pose, goal, space):
    scores = [planner.score(pose, goal, p) for p in space.primitives]
    return scores, int(np.argmin(scores)) + 1


def test_oracle_straight_corridor():
    goal = Landmark("g", "kiosk", "", (14, -0.5, 0), (15, 0.5, 1.5))
    walls = [box_mesh((-2, 3, 0), (20, 3.2, 3)), box_mesh((-2, -3.2, 0), (20, -3, 3)), box_mesh(goal.aabb_min, goal.aabb_max)]
    world = make_world(*walls, landmarks=[goal])
    pose = Pose((0, 0), 0.0)
    sp = space_at(world, pose)
    planner = OraclePlanner(world)
    dec = planner.decide(pose, goal, sp)
    scores, best = enumerate_oracle(planner, pose, goal, sp)
    assert dec.action == best
    assert abs(sp.primitive(dec.action).angle) < 1e-9


def test_oracle_takes_left_gap():
    goal = Landmark("g", "kiosk", "", (10, -0.5, 0), (11, 0.5, 1.5))
    # wall across the direct line with a gap on the left (+y) side
    wall = box_mesh((5, -8, 0), (5.3, 2.5, 3))
    world = make_world(wall, box_mesh(goal.aabb_min, goal.aabb_max), landmarks=[goal])
    pose = Pose((0, 0), 0.0)
    sp = space_at(world, pose)
    planner = OraclePlanner(world)
    dec = planner.decide(pose, goal, sp)
    scores, best = enumerate_oracle(planner, pose, goal, sp)
    assert dec.action == best
    assert sp.primitive(dec.action).angle > 0


def test_oracle_recovery_turns_toward_route():
    goal = Landmark("g", "kiosk", "", (-10, -0.5, 0), (-9, 0.5, 1.5))
    world = make_world(*canyon(open_back=True), box_mesh(goal.aabb_min, goal.aabb_max), landmarks=[goal])
    pose = Pose((0, 0), 0.0)
    sp = space_at(world, pose)
    assert not sp.primitives
    dec = OraclePlanner(world).decide(pose, goal, sp)
    assert dec.action == "turn_around"
    # goal to the left and route out to the left
    pose = Pose((0, 0), -math.pi / 2)
    dec = OraclePlanner(world).decide(pose, goal, space_at(world, pose))
    assert dec.action == "turn_right_90"


def test_greedy_choices():
    goal = Landmark("g", "kiosk", "", (20, 9.5, 0), (21, 10.5, 1.5))
    pose = Pose((0, 0), 0.0)
    world = make_world(lo=(-20, -20), hi=(40, 20))
    sp = space_at(world, pose)
    dec = GreedyPlanner().decide(pose, goal, sp)
    bearing = math.atan2(10, 20.5)
    assert dec.action == 1 + int(np.argmin([abs(p.angle - bearing) for p in sp.primitives]))


def test_greedy_obstacle_neighbor():
    goal = Landmark("g", "kiosk", "", (15, -0.5, 0), (16, 0.5, 1.5))
    pose = Pose((0, 0), 0.0)
    world = make_world(box_mesh((1.5, -0.15, 0), (1.7, 0.15, 2)), lo=(-20, -20), hi=(40, 20))
    sp = space_at(world, pose)
    assert all(abs(p.angle) > 1e-9 for p in sp.primitives)
    dec = GreedyPlanner().decide(pose, goal, sp)
    # nearest surviving neighbours of the pruned centre direction
    assert abs(sp.primitive(dec.action).angle) == pytest.approx(min(abs(p.angle) for p in sp.primitives))


def test_greedy_center_tiebreak():
    goal = Landmark("g", "kiosk", "", (-0.5, -0.5, 0), (0.5, 0.5, 1))
    # index 2 and 5 land at the same distance; index 2 is closer to the center (3)
    sp = ActionSpace([prim(1, (9, 9)), prim(2, (3, 0)), prim(3, (8, 8)), prim(4, (9, 7)), prim(5, (0, 3))])
    assert GreedyPlanner().decide(Pose((5, 5), 0.0), goal, sp).action == 2


def test_memory_updates():
    mem = Memory()
    dec = Decision("o", "g", ["a", "b"], "t", 1)
    mem = update_memory(mem, dec)
    assert len(mem.recent_history) == 1 and mem.previous_plan == ("a", "b")
    for k in range(6):
        mem = update_memory(mem, Decision("o", "g", [f"p{k}"], f"t{k}", k + 1), H=5)
    assert len(mem.recent_history) == 5
    assert mem.recent_history[0].startswith("thought: t1")
    assert mem.previous_plan == ("p5",)


SPACE = ActionSpace([prim(1, (1, 0)), prim(2, (2, 0)), prim(3, (3, 0))], (), True)


@given(st.one_of(st.integers(-5, 20), st.text(max_size=12), st.floats(allow_nan=False), st.booleans(), st.none()))
def test_validate_action_fuzz(a):
    members = SPACE.tokens()
    is_member = any(type(a) is type(m) and a == m for m in members)
    if is_member:
        assert validate_action(a, SPACE) == a
    else:
        with pytest.raises(InvalidAction):
            validate_action(a, SPACE)


@settings(max_examples=15, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6), st.floats(-math.pi, math.pi))
def test_primitive_invariants(x, y, yaw):
    world = _CLUTTER
    pose = Pose((x, y), yaw)
    if world.grid.cells[world.grid.cell_of(pose.position)]:
        return
    sp = space_at(world, pose)
    for p in sp.primitives:
        assert abs(p.target_3d[2]) < 1e-3
        assert p.path_clearance >= 1.5


_CLUTTER = make_world(box_mesh((2, 2, 0), (3, 4, 2)), box_mesh((-4, -1, 0), (-3, 1, 1)), box_mesh((1, -5, 0), (5, -4.5, 3)))
