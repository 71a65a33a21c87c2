import hashlib
import math
import os
from types import SimpleNamespace

import numpy as np
import pytest

from vgagent.errors import InvalidDepth
from vgagent.perception import (
    CameraSpec, Pose, arrow_endpoints, backproject, compose_prompt_image, detect_goal, detect_humans, png_bytes,
    project, render_ego, traversable_mask,
)
from vgagent.world import Landmark, TriMesh, WorldModel, box_mesh, quad_mesh

CAM = CameraSpec()
ORIGIN = Pose((0.0, 0.0, 0.0), 0.0)
GOLDEN = os.path.join(os.path.dirname(__file__), "data", "prompt_golden.sha256")


def world_of(*meshes, landmarks=()):
    return WorldModel.from_mesh(TriMesh.concatenate(list(meshes)), landmarks, align=False)


GROUND = quad_mesh((-20, -20), (40, 20))


def test_wall_depth_at_principal_point():
    w = world_of(GROUND, box_mesh((3, -5, 0), (3.2, 5, 3)))
    obs = render_ego(w, [], ORIGIN, CAM)
    assert obs.depth[120, 160] == pytest.approx(3.0, abs=1e-6)
    assert np.allclose(obs.normal[120, 160], [-1, 0, 0])


def test_sky_is_infinite_and_not_traversable():
    obs = render_ego(world_of(GROUND), [], ORIGIN, CAM)
    assert np.isinf(obs.depth[50, 160])
    assert not obs.traversable[50, 160]


def test_ground_depth_matches_ray_angle():
    obs = render_ego(world_of(GROUND), [], ORIGIN, CAM)
    for row in (130, 170, 239):
        theta = math.atan((row - CAM.cy) / CAM.fy)
        assert obs.depth[row, 160] == pytest.approx(CAM.eye_height / math.sin(theta), abs=1e-6)
    # all ground pixels traversable
    ground = np.isfinite(obs.depth)
    assert obs.traversable[ground].all()


def test_ground_backprojects_to_plane():
    obs = render_ego(world_of(GROUND), [], Pose((1.0, -2.0), 0.4), CAM)
    vv, uu = np.nonzero(np.isfinite(obs.depth))
    pts = backproject(np.column_stack([uu, vv]), obs.depth[vv, uu], CAM, obs.pose)
    assert np.abs(pts[:, 2]).max() < 1e-4


def ramp(deg):
    a = math.radians(deg)
    # plane through x=2 rising along +x
    v = np.array([[2, -3, 0], [6, -3, 4 * math.tan(a)], [6, 3, 4 * math.tan(a)], [2, 3, 0]], dtype=float)
    return TriMesh(v, np.array([[0, 1, 2], [0, 2, 3]]))


def test_ramp_traversability_threshold():
    obs = render_ego(world_of(quad_mesh((-5, -5), (2, 5)), ramp(20)), [], ORIGIN, CAM)
    ang = math.degrees(math.acos(obs.normal[150, 160, 2]))
    assert ang == pytest.approx(20.0, abs=1e-6)
    assert not traversable_mask(obs, 15.0)[150, 160]
    assert traversable_mask(obs, 25.0)[150, 160]


def test_vertical_wall_not_traversable():
    w = world_of(GROUND, box_mesh((3, -5, 0), (3.2, 5, 3)))
    obs = render_ego(w, [], ORIGIN, CAM)
    assert not obs.traversable[120, 160]


GOAL = Landmark("g", "kiosk", "a kiosk", (4.5, -0.5, 0.0), (5.5, 0.5, 1.5))


def test_goal_box_matches_projection():
    w = world_of(GROUND, box_mesh(GOAL.aabb_min, GOAL.aabb_max), landmarks=[GOAL])
    obs = render_ego(w, [], ORIGIN, CAM)
    box, ratio = detect_goal(obs, GOAL, ORIGIN, CAM)
    assert box is not None and ratio > 0.9
    u0, u1 = 160 - 160 * 0.5 / 4.5, 160 + 160 * 0.5 / 4.5
    v0, v1 = 120 + 160 * 0.1 / 5.5, 120 + 160 * 1.6 / 4.5
    cu, cv = (box[0] + box[2]) / 2, (box[1] + box[3]) / 2
    assert abs(cu - (u0 + u1) / 2) < 2 and abs(cv - (v0 + v1) / 2) < 2
    # box contains the centroid projection
    (c,), _ = project(GOAL.centroid[None], CAM, ORIGIN)
    assert box[0] <= c[0] <= box[2] and box[1] <= c[1] <= box[3]


def test_goal_behind_camera_absent():
    behind = Landmark("b", "kiosk", "", (-5.5, -0.5, 0), (-4.5, 0.5, 1.5))
    w = world_of(GROUND, box_mesh(behind.aabb_min, behind.aabb_max))
    obs = render_ego(w, [], ORIGIN, CAM)
    assert detect_goal(obs, behind)[0] is None


def test_goal_behind_wall_absent():
    w = world_of(GROUND, box_mesh((3, -5, 0), (3.2, 5, 3)), box_mesh(GOAL.aabb_min, GOAL.aabb_max))
    obs = render_ego(w, [], ORIGIN, CAM)
    box, ratio = detect_goal(obs, GOAL)
    assert box is None and ratio == 0.0


def test_backproject_round_trip():
    rng = np.random.default_rng(0)
    pose = Pose((2.0, 1.0, 0.0), 1.1)
    px = np.column_stack([rng.uniform(0, 319, 1000), rng.uniform(0, 239, 1000)])
    d = rng.uniform(0.5, 40, 1000)
    pts = backproject(px, d, CAM, pose)
    uv, z = project(pts, CAM, pose)
    assert (z > 0).all()
    assert np.abs(uv - px).max() < 1e-6
    assert np.allclose(backproject([[160, 120]], [3.0], CAM, pose), [[2 + 3 * math.cos(1.1), 1 + 3 * math.sin(1.1), 1.6]])
    with pytest.raises(InvalidDepth):
        backproject([[10, 10]], [0.0], CAM, pose)


def test_sparse_render_matches_full():
    w = world_of(GROUND, box_mesh((3, -1, 0), (4, 1, 2)), box_mesh((6, 2, 0), (7, 4, 3)))
    pose = Pose((0.2, 0.1), 0.3)
    full = render_ego(w, [((5.0, 0.0, 0.0), "p1")], pose, CAM)
    mask = np.zeros((240, 320), dtype=bool)
    mask[:, ::37] = True
    sparse = render_ego(w, [((5.0, 0.0, 0.0), "p1")], pose, CAM, pixel_mask=mask)
    assert np.array_equal(full.depth[mask], sparse.depth[mask])
    assert np.array_equal(full.normal[mask], sparse.normal[mask])
    again = render_ego(w, [((5.0, 0.0, 0.0), "p1")], pose, CAM)
    assert np.array_equal(full.depth, again.depth) and np.array_equal(full.color, again.color)


def test_capsule_agent_rendered_and_boxed():
    w = world_of(GROUND)
    obs = render_ego(w, [((4.0, 0.0, 0.0), "ped0")], ORIGIN, CAM)
    # eye height is above the cylinder, so the ray meets the top hemisphere
    assert obs.depth[120, 160] == pytest.approx(4.0 - math.sqrt(0.3**2 - 0.2**2), abs=1e-9)
    humans = detect_humans(obs)
    assert [h[0] for h in humans] == ["ped0"]


def fake_proposals(n):
    return [SimpleNamespace(index=i + 1, direction_px=(-140 + 280 * i / max(n - 1, 1), -80.0)) for i in range(n)]


def prompt_fixture():
    w = world_of(GROUND, box_mesh(GOAL.aabb_min, GOAL.aabb_max))
    obs = render_ego(w, [((3.0, 1.5, 0.0), "ped0")], ORIGIN, CAM)
    box, _ = detect_goal(obs, GOAL)
    return obs, box, detect_humans(obs)


def test_prompt_image_arrows_and_boxes():
    obs, box, humans = prompt_fixture()
    props = fake_proposals(9)
    img = np.asarray(compose_prompt_image(obs, props, box, humans))
    ends = arrow_endpoints(CAM, props)
    assert len(ends) == 9
    for u, v in ends:
        assert tuple(img[int(round(v)), int(round(u))]) == (255, 255, 0)
    assert tuple(img[int(box[1]) + 1, int(round((box[0] + box[2]) / 2))]) == (0, 220, 0)
    stuck = np.asarray(compose_prompt_image(obs, [], box, humans))
    assert not ((stuck == (255, 255, 0)).all(-1)).any()


def test_prompt_image_golden():
    obs, box, humans = prompt_fixture()
    data = png_bytes(compose_prompt_image(obs, fake_proposals(9), box, humans))
    assert data == png_bytes(compose_prompt_image(obs, fake_proposals(9), box, humans))
    digest = hashlib.sha256(data).hexdigest()
    if not os.path.exists(GOLDEN):  # first run freezes the golden digest
        os.makedirs(os.path.dirname(GOLDEN), exist_ok=True)
        with open(GOLDEN, "w") as fh:
            fh.write(digest + "\n")
    with open(GOLDEN) as fh:
        assert digest == fh.read().strip()
