import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from doorloop import common, perception, primitives
from doorloop.camera import pixel_ray
from doorloop.common import CCW_SIGN, HandleType, Swing, UnlockDirection
from doorloop.perception import (BehindCamera, CentroidBaseline, Degenerate, GeometricOracle, GraspPrediction,
                                 PlaneFit, TooFewPoints, grasp_pose_from_prediction, mask_skeleton,
                                 ransac_plane)
from doorloop.suite import make_crossbar, make_door, make_knob
from doorloop.world import World, region_distance_px

from conftest import lever_door


def _plane_cloud(rng, n_in=280, n_out=120, sigma=0.002, normal=(0, 0, 1), depth=1.0):
    normal = np.asarray(normal, float) / np.linalg.norm(normal)
    u = np.cross(normal, [1.0, 0, 0])
    if np.linalg.norm(u) < 1e-6:
        u = np.cross(normal, [0, 1.0, 0])
    u /= np.linalg.norm(u)
    v = np.cross(normal, u)
    a, b = rng.uniform(-0.5, 0.5, (2, n_in))
    pts = depth * normal + a[:, None] * u + b[:, None] * v + rng.normal(0, sigma, (n_in, 3))
    out = rng.uniform(-0.5, 0.5, (n_out, 3)) + [0, 0, depth]
    return np.vstack([pts, out]), pts


def _angle_deg(a, b):
    c = abs(float(a @ b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.degrees(math.acos(min(1.0, c)))


def test_noiseless_plane():
    rng = np.random.default_rng(0)
    xy = rng.uniform(-1, 1, (100, 2))
    cloud = np.column_stack([xy, np.ones(100)])
    fit = ransac_plane(cloud, 0.001, 50, 0)
    assert np.allclose(fit.normal, [0, 0, -1], atol=1e-9)
    assert fit.offset_m == pytest.approx(-1.0, abs=1e-9)
    assert fit.inlier_count == 100


def test_outliers_match_least_squares_on_true_inliers():
    rng = np.random.default_rng(7)
    cloud, inliers = _plane_cloud(rng)
    fit = ransac_plane(cloud, 0.006, 200, 1)
    # oracle: total least squares on the known inlier subset
    c = inliers.mean(axis=0)
    oracle = np.linalg.svd(inliers - c)[2][-1]
    assert _angle_deg(fit.normal, [0, 0, 1]) < 2.0
    assert _angle_deg(fit.normal, oracle) < 1.0


def test_three_points_give_their_plane():
    pts = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 2.0], [0.0, 1.0, 1.0]])
    fit = ransac_plane(pts, 1e-6, 5, 0)
    assert fit.inlier_count == 3
    assert np.allclose(fit.distance(pts), 0.0, atol=1e-12)
    assert fit.normal[2] < 0


def test_ransac_errors():
    with pytest.raises(TooFewPoints):
        ransac_plane(np.zeros((2, 3)), 0.01, 10, 0)
    line = np.column_stack([np.linspace(0, 1, 10), np.zeros(10), np.zeros(10)])
    with pytest.raises(Degenerate):
        ransac_plane(line, 0.01, 10, 0)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2 ** 31), tilt=st.floats(0.0, 0.6), spin=st.floats(0.0, 2 * math.pi))
def test_ransac_recovers_tilted_planes(seed, tilt, spin):
    rng = np.random.default_rng(seed)
    n = np.array([math.sin(tilt) * math.cos(spin), math.sin(tilt) * math.sin(spin), math.cos(tilt)])
    cloud, _ = _plane_cloud(rng, normal=n)
    fit = ransac_plane(cloud, 0.006, 200, rng)
    assert _angle_deg(fit.normal, n) < 2.0
    assert fit.normal[2] < 0


def _observation(door, cfg, seed=0):
    return World(door, cfg.world, seed).render_observation()


def test_lever_grasp_at_far_end(cfg):
    door = lever_door()
    obs = _observation(door, cfg)
    pred = GeometricOracle(UnlockDirection.CCW, 1.0).refine_grasp(obs, HandleType.LEVER)
    gu, gv = obs.centroid_px[0] + pred.dx_px, obs.centroid_px[1] + pred.dy_px
    # oracle: mask pixel farthest from the rotation axis
    d2 = ((obs.mask_px - obs.rotation_axis_px) ** 2).sum(axis=1)
    far = obs.mask_px[np.argmax(d2)]
    assert abs(gu - far[0]) <= 1.0
    assert abs(gv - door.handle.rotation_axis_px[1]) <= 0.5
    assert pred.dx_px > 0
    assert region_distance_px(door.handle, (gu, gv)) <= door.handle.capture_radius_px


def test_knob_grasp_is_centred(cfg):
    door = make_door("k", make_knob((400.0, 240.0), 0.03, UnlockDirection.CW), swing=Swing.PULL)
    obs = _observation(door, cfg)
    pred = GeometricOracle(UnlockDirection.CW, 1.0).refine_grasp(obs, HandleType.KNOB)
    assert (pred.dx_px, pred.dy_px) == (0.0, 0.0)
    assert pred.radius_m == pytest.approx(0.03, rel=0.05)
    assert pred.rotation_param_R < 0


def test_crossbar_centroid_misses_oracle_hits(cfg):
    door = make_door("cb", make_crossbar((250.0, 200.0), 140.0, 90.0), swing=Swing.PUSH)
    obs = _observation(door, cfg)
    cu, cv = obs.centroid_px
    base = CentroidBaseline().refine_grasp(obs, HandleType.CROSSBAR)
    assert region_distance_px(door.handle, (cu + base.dx_px, cv + base.dy_px)) > door.handle.capture_radius_px
    orc = GeometricOracle(UnlockDirection.NONE, 1.0).refine_grasp(obs, HandleType.CROSSBAR)
    assert region_distance_px(door.handle, (cu + orc.dx_px, cv + orc.dy_px)) <= door.handle.capture_radius_px


def test_direction_prior_flips_below_accuracy():
    assert GeometricOracle(UnlockDirection.CCW, 0.8, 0.5).direction_correct
    assert not GeometricOracle(UnlockDirection.CCW, 0.8, 0.9).direction_correct


def test_skeleton_of_horizontal_bar():
    mask = np.array([(u, v) for u in range(100, 160) for v in range(50, 60)])
    skel = mask_skeleton(mask)
    assert np.allclose(skel[:, 1], 54.5)


def test_center_pixel_on_fronto_parallel_plane(cfg):
    obs = _observation(lever_door(), cfg)
    plane = PlaneFit(np.array([0.0, 0.0, -1.0]), -1.0, 0, 0.006)
    cu, cv = obs.centroid_px
    pred = GraspPrediction(320.0 - cu, 240.0 - cv, 0.0)
    pose = grasp_pose_from_prediction(pred, plane, obs)
    assert np.allclose(pose.position_m, [0, 0, 1], atol=1e-12)


def test_horizontal_lever_closes_vertically(cfg):
    obs = _observation(lever_door(), cfg)
    plane = PlaneFit(np.array([0.0, 0.0, -1.0]), -1.0, 0, 0.006)
    pose = grasp_pose_from_prediction(GraspPrediction(0, 0, 0), plane, obs)
    # the rose disc at the axis tilts the principal axis a little
    assert _angle_deg(pose.closing_axis, np.array([0.0, 1.0, 0.0])) < 1.0
    assert abs(pose.closing_axis @ pose.approach_axis) < 1e-12


def test_tilted_plane_pose(cfg):
    obs = _observation(lever_door(), cfg)
    t = math.radians(30)
    normal = np.array([math.sin(t), 0.0, -math.cos(t)])
    plane = PlaneFit(normal, -1.2 * math.cos(t), 0, 0.006)
    pred = GraspPrediction(5.0, -3.0, 0.0)
    pose = grasp_pose_from_prediction(pred, plane, obs)
    assert np.allclose(pose.approach_axis, -normal, atol=1e-6)
    # oracle: direct ray/plane intersection
    ray = pixel_ray(obs.centroid_px[0] + 5.0, obs.centroid_px[1] - 3.0)
    expect = ray * plane.offset_m / (normal @ ray)
    assert np.allclose(pose.position_m, expect, atol=1e-12)


def test_plane_behind_camera(cfg):
    obs = _observation(lever_door(), cfg)
    plane = PlaneFit(np.array([0.0, 0.0, -1.0]), 1.0, 0, 0.006)
    with pytest.raises(BehindCamera):
        grasp_pose_from_prediction(GraspPrediction(0, 0, 0), plane, obs)


def test_sign_contract_is_shared():
    assert perception.sign_for_direction is common.sign_for_direction
    assert common.sign_for_direction(UnlockDirection.CCW) == CCW_SIGN
    assert common.sign_for_direction(UnlockDirection.CW) == -CCW_SIGN
    assert common.direction_for_sign(CCW_SIGN) is UnlockDirection.CCW


@pytest.mark.parametrize("direction", [UnlockDirection.CW, UnlockDirection.CCW])
def test_sign_contract_end_to_end(cfg, direction):
    """A correct prediction turns the world handle the unlocking way on the first try."""
    from conftest import grasped_context
    ctx = grasped_context(lever_door(direction=direction), cfg, draw=0.0, accuracy=1.0)
    out = primitives.unlock_lever(ctx)
    assert out.ok
    assert out.telemetry["reversals"] == 0
    assert ctx.world.door.unlocked
    assert math.copysign(1, ctx.world.door.handle_angle_rad) == common.sign_for_direction(direction)
