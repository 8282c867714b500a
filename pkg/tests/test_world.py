import math

import numpy as np
import pytest

from doorloop.common import HandleType, Resistance, Swing, UnlockDirection
from doorloop.suite import make_cabinet, make_crossbar, make_door, make_knob
from doorloop.world import (EndEffectorCommand, NotVisible, World, WorldFault, gripper_resistance,
                            handle_mask, render_observation, world_step)

from conftest import engage, lever_door

# closed-form elbow currents at the default config (gain 0.5 A/Nm, free elbow 0.5 A,
# handle stiffness 20 Nm/rad, door stiffness 150 N/m, lever arm 0.3 m)
OVERSHOOT_RAD = 0.2
LIMIT_CURRENT_A = 2.5          # 0.5 + 0.5 * 20 * 0.2
PUSH_PROBE_RISE_A = 1.125      # 0.5 * 150 * 0.05 * 0.3


def _lever_world(cfg, **kw):
    door = lever_door(**kw)
    w = World(door, cfg.world, 0)
    tip = door.handle.graspable_region[0][1]
    engage(w, tip)
    assert w.door.gripper_engaged
    return w


def test_rotation_within_limit_stays_at_free_current(quiet_cfg):
    w = _lever_world(quiet_cfg)
    s = w.step(EndEffectorCommand(rotate_rad=math.radians(10)))
    assert s.elbow_A == pytest.approx(quiet_cfg.world.free_current_A[4])
    assert s.elbow_A < quiet_cfg.world.current_threshold_A


def test_rotation_past_limit_matches_stiffness_model(quiet_cfg):
    w = _lever_world(quiet_cfg)
    reach = w.spec.handle.unlock_angle_rad
    s = w.step(EndEffectorCommand(rotate_rad=reach + OVERSHOOT_RAD))
    assert s.elbow_A == pytest.approx(LIMIT_CURRENT_A, abs=1e-12)
    assert s.elbow_A > quiet_cfg.world.current_threshold_A
    assert w.door.unlocked


def test_wrong_way_hits_slack_stop(quiet_cfg):
    w = _lever_world(quiet_cfg)
    s = w.step(EndEffectorCommand(rotate_rad=-0.5))
    slack = w.spec.handle.hard_stop_slack_rad
    assert w.door.handle_angle_rad == pytest.approx(-slack)
    assert s.elbow_A == pytest.approx(0.5 + 0.5 * 20 * (0.5 - slack))
    assert not w.door.unlocked


@pytest.mark.parametrize("swing", [Swing.PULL, Swing.PUSH])
def test_probe_pull_on_unlocked_door(quiet_cfg, swing):
    w = _lever_world(quiet_cfg, swing=swing)
    w.step(EndEffectorCommand(rotate_rad=0.75))
    w.step(EndEffectorCommand(relax=True))
    for _ in range(10):
        s = w.step(EndEffectorCommand(pull_m=0.005))
    if swing is Swing.PULL:
        assert w.door.door_angle_rad > 0
        assert s.elbow_A < quiet_cfg.world.current_threshold_A
    else:
        assert w.door.door_angle_rad == 0.0
        assert s.elbow_A - 0.5 == pytest.approx(PUSH_PROBE_RISE_A)


def test_locked_latch_holds_the_door(quiet_cfg):
    w = _lever_world(quiet_cfg, swing=Swing.PULL)
    w.step(EndEffectorCommand(pull_m=0.05))
    assert w.door.door_travel_m == 0.0


def test_world_step_is_functional(cfg):
    w = _lever_world(cfg)
    before = w.door.handle_angle_rad
    nxt, _ = world_step(w, EndEffectorCommand(rotate_rad=0.1))
    assert w.door.handle_angle_rad == before
    assert nxt.door.handle_angle_rad == pytest.approx(before + 0.1)


def test_same_seed_same_currents(cfg):
    a, b = _lever_world(cfg), _lever_world(cfg)
    for _ in range(5):
        sa, sb = a.step(), b.step()
        assert np.array_equal(sa.joint_currents_A, sb.joint_currents_A)


def _brute_mask(handle):
    (au, av), (w, h) = handle.anchor_px, handle.extent_px
    cu, cv = handle.rotation_axis_px
    out = []
    for v in range(480):
        for u in range(640):
            in_rect = au <= u < au + w and av <= v < av + h
            in_disc = (u - cu) ** 2 + (v - cv) ** 2 <= h * h
            if in_rect or in_disc:
                out.append((u, v))
    return np.array(out)


def test_lever_mask_is_rect_union_disc():
    from doorloop.world import HandleSpec
    handle = HandleSpec(HandleType.LEVER, (200.0, 143.0), (60.0, 14.0), (200.0, 150.0), UnlockDirection.CCW,
                        0.1, 0.7, 0.05, (((230.0, 149.5), (259.0, 149.5)),), 6.0)
    mask = handle_mask(handle)
    oracle = _brute_mask(handle)
    assert {tuple(p) for p in mask} == {tuple(p) for p in oracle}


def test_observation_centroid_is_integer_area_centroid(cfg):
    w = World(lever_door(), cfg.world, 0)
    obs = render_observation(w)
    su, sv = obs.mask_px.sum(axis=0)
    assert obs.mask_sum_px == (su, sv)
    assert obs.centroid_px == (su / obs.mask_area, sv / obs.mask_area)


def test_drawer_cloud_lies_on_front_plane(cfg):
    door = make_door("drawer", make_cabinet((320.0, 240.0), 80.0), swing=Swing.SLIDE, max_extension_m=0.35,
                     outlier_fraction=0.0, noise_sigma_m=0.0)
    obs = render_observation(World(door, cfg.world, 0))
    assert obs.handle_type is HandleType.CABINET
    assert np.allclose(obs.cloud_m[:, 2], cfg.world.view_distance_m)
    world_pts = np.array([obs.camera_to_world(p) for p in obs.cloud_m[:20]])
    n = np.asarray(door.plane_normal)
    assert np.allclose((world_pts - door.plane_origin_m) @ n, 0.0, atol=1e-12)


def test_outlier_fraction_is_honoured(cfg):
    door = lever_door(outlier_fraction=0.3)
    obs = render_observation(World(door, cfg.world, 3))
    dist = np.abs(obs.cloud_m[:, 2] - cfg.world.view_distance_m)
    far = (dist > 3 * door.point_cloud_noise_sigma_m).mean()
    assert far >= 0.3


def test_not_visible_from_behind(cfg):
    w = World(lever_door(), cfg.world, 0, base_pose=(5.0, 0.0, math.pi))
    with pytest.raises(NotVisible):
        w.render_observation()


def test_resistance_on_lever_midline(cfg):
    door = lever_door()
    w = World(door, cfg.world, 0)
    a, b = door.handle.graspable_region[0]
    engage(w, ((a[0] + b[0]) / 2, a[1]))
    assert gripper_resistance(w) is Resistance.HIGH


def test_resistance_at_crossbar_centroid_is_low(cfg):
    door = make_door("cb", make_crossbar((250.0, 200.0), 140.0, 90.0), swing=Swing.PUSH)
    w = World(door, cfg.world, 0)
    engage(w, w.render_observation().centroid_px)
    assert gripper_resistance(w) is Resistance.LOW


def test_resistance_just_outside_capture_radius(cfg):
    door = lever_door()
    w = World(door, cfg.world, 0)
    (_, _), (tu, tv) = door.handle.graspable_region[0]
    engage(w, (tu, tv + door.handle.capture_radius_px + 1))
    assert gripper_resistance(w) is Resistance.LOW


def test_contact_slip_fault_releases(cfg):
    w = _lever_world(cfg)
    w.arm_fault(WorldFault("contact_slip", at_step=w.steps))
    s = w.step()
    assert s.gripper_resistance is Resistance.LOW
    assert w.door.handle_angle_rad == 0.0


def test_knob_either_unlocks_both_ways(cfg):
    door = make_door("k", make_knob((460.0, 240.0), 0.03, UnlockDirection.EITHER), swing=Swing.PULL)
    for sign in (1, -1):
        w = World(door, cfg.world, 0)
        engage(w, door.handle.rotation_axis_px)
        w.step(EndEffectorCommand(rotate_rad=sign * 1.0))
        assert w.door.unlocked
