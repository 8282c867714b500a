from __future__ import annotations

import math

import numpy as np
import pytest

from doorloop.common import Swing, UnlockDirection
from doorloop.config import default_config
from doorloop.perception import GeometricOracle
from doorloop.primitives import EpisodeContext, approach, grasp
from doorloop.suite import load_suite, make_door, make_lever
from doorloop.world import EndEffectorCommand, World


@pytest.fixture(scope="session")
def cfg():
    return default_config()


@pytest.fixture(scope="session")
def quiet_cfg(cfg):
    """Defaults with the current noise switched off, for closed-form checks."""
    return cfg.replace(world={"current_noise_sigma_A": 0.0})


@pytest.fixture(scope="session")
def field20():
    return load_suite("suite_field20")


def lever_door(swing=Swing.PULL, direction=UnlockDirection.CCW, locked=False, **kw):
    handle = make_lever((460.0, 240.0), 60.0, direction if not locked else UnlockDirection.NONE)
    return make_door("test-lever", handle, swing=swing, locked=locked, **kw)


def engage(world: World, point_px) -> None:
    """Put the end effector on a handle pixel and close the gripper."""
    world.robot.ee_position_m = world.geometry.pixel_to_world(*point_px, world.door.door_travel_m)
    world.step(EndEffectorCommand(gripper="close"))


def grasped_context(door, cfg, seed=0, draw=0.0, accuracy=0.8, adaptive=True, base_pose=(0.0, 0.0, 0.0)):
    """Context after a real approach and grasp with the geometric oracle."""
    world = World(door, cfg.world, seed, base_pose=base_pose)
    model = GeometricOracle(door.handle.unlock_direction, accuracy, draw, cfg.perception.thin_fraction)
    ctx = EpisodeContext(world=world, cfg=cfg, model=model, adaptive=adaptive,
                         rng_perception=np.random.default_rng(seed + 100))
    approach(ctx)
    out = grasp(ctx)
    assert out.ok, out.telemetry
    return ctx


def deg(x: float) -> float:
    return math.degrees(x)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.VERDICTS):
        terminalreporter.write_line(mod.VERDICTS[n])
