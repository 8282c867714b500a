"""Quasi-static simulation of one door, drawer or cabinet and the robot at it.

Contact is modeled with two stiffnesses.  The arm runs in position
control: when a commanded handle rotation or door displacement goes past a
mechanical limit, the overshoot becomes a torque (stiffness x overshoot)
and shows up as extra elbow current.  Physical impossibility is expressed
only through that current, never through exceptions.

Frames
------
World: x, y on the floor, z up.  Base pose is (x, y, heading).
Base: x forward, y left, z up.
Door: ``plane_normal`` is horizontal and points toward the approach side.
The handle geometry is given in pixels of the door-anchored virtual camera
(see :mod:`doorloop.camera`); the camera moves with the door leaf, so the
handle keeps its pixel coordinates while the door swings.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import camera
from .common import (HandleType, HingeSide, Resistance, Swing, UnlockDirection,
                     ROTATING_HANDLES)
from .config import WorldConfig
from .haptics import HapticSample

CROSSBAR_BAR_PX = 12
OPEN_SUCCESS_ANGLE_RAD = math.pi / 4
MIN_HINGE_RADIUS_M = 0.2


class NotVisible(RuntimeError):
    """The door is outside the camera's viewing cone; approach must run first."""


@dataclass(frozen=True)
class HandleSpec:
    handle_type: HandleType
    anchor_px: tuple[float, float]
    extent_px: tuple[float, float]
    rotation_axis_px: tuple[float, float]
    unlock_direction: UnlockDirection
    rotation_radius_m: float
    unlock_angle_rad: float
    hard_stop_slack_rad: float
    graspable_region: tuple[tuple[tuple[float, float], tuple[float, float]], ...]
    capture_radius_px: float

    def validate(self) -> None:
        if self.unlock_direction is not UnlockDirection.NONE and not self.unlock_angle_rad > 0:
            raise ValueError("unlock_angle_rad must be positive when the handle unlocks")
        if not 0 <= self.hard_stop_slack_rad < self.unlock_angle_rad:
            raise ValueError("hard_stop_slack_rad must be in [0, unlock_angle_rad)")
        if not self.graspable_region:
            raise ValueError("graspable_region must be non-empty")
        if not self.capture_radius_px > 0:
            raise ValueError("capture_radius_px must be positive")
        if min(self.extent_px) <= 0:
            raise ValueError("extent_px must be positive")
        if self.rotation_radius_m < 0:
            raise ValueError("rotation_radius_m must be non-negative")


@dataclass(frozen=True)
class DoorSpec:
    id: str
    handle: HandleSpec
    swing: Swing
    hinge_side: HingeSide
    max_open_angle_rad: float
    locked: bool
    plane_origin_m: tuple[float, float, float]
    plane_normal: tuple[float, float, float]
    door_width_m: float
    door_height_m: float
    point_cloud_noise_sigma_m: float
    outlier_fraction: float
    max_extension_m: float = 0.0

    def validate(self) -> None:
        self.handle.validate()
        n = np.asarray(self.plane_normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("plane_normal must have unit norm")
        if abs(n[2]) > 1e-9:
            raise ValueError("plane_normal must be horizontal (doors are vertical)")
        if self.swing is Swing.SLIDE:
            if not self.max_extension_m > 0:
                raise ValueError("drawers need a positive max_extension_m")
        elif self.max_open_angle_rad < math.pi / 2:
            raise ValueError("max_open_angle_rad must be at least pi/2 for doors")
        if not 0 <= self.outlier_fraction < 0.5:
            raise ValueError("outlier_fraction must be in [0, 0.5)")
        if self.point_cloud_noise_sigma_m < 0 or self.door_width_m <= 0 or self.door_height_m <= 0:
            raise ValueError("door dimensions and noise must be positive")
        if (self.handle.handle_type in ROTATING_HANDLES and not self.locked
                and self.handle.unlock_direction is UnlockDirection.NONE):
            raise ValueError("an unlocked lever/knob door needs an unlock direction")

    @property
    def solvable(self) -> bool:
        return not self.locked


@dataclass
class DoorState:
    handle_angle_rad: float = 0.0
    handle_command_rad: float = 0.0
    unlocked: bool = False
    door_travel_m: float = 0.0
    door_command_m: float = 0.0
    door_angle_rad: float = 0.0
    extension_m: float = 0.0
    gripper_engaged: bool = False
    gripper_closed: bool = False
    gripper_point_px: tuple[float, float] | None = None
    grasp_handle_angle_rad: float = 0.0
    grasp_radius_m: float = 0.0

    @property
    def rotation_overshoot_rad(self) -> float:
        return self.handle_command_rad - self.handle_angle_rad

    @property
    def door_strain_m(self) -> float:
        return self.door_command_m - self.door_travel_m


@dataclass
class RobotState:
    base_pose: np.ndarray
    ee_position_m: np.ndarray
    ee_orientation: np.ndarray
    gripper_opening_m: float
    joint_currents_A: np.ndarray


@dataclass(frozen=True, slots=True)
class EndEffectorCommand:
    """One control tick.  Unset fields mean "hold"."""

    base_delta: tuple[float, float, float] | None = None
    ee_target_m: tuple[float, float, float] | None = None
    rotate_rad: float = 0.0
    arc_radius_m: float | None = None
    pull_m: float = 0.0
    gripper: str | None = None
    relax: bool = False


HOLD = EndEffectorCommand()


@dataclass
class WorldFault:
    """A one-shot physical disturbance armed by fault injection.

    kinds: ``contact_slip`` (gripper loses the handle), ``obstruction``
    (external torque on the arm), ``base_slip`` (base pushed backward),
    ``grasp_short`` (the next gripper close lands in front of the handle).
    """

    kind: str
    at_step: int = 0
    min_travel_m: float | None = None
    fired: bool = False


@dataclass(frozen=True)
class Observation:
    handle_type: HandleType
    mask_px: np.ndarray
    mask_sum_px: tuple[int, int]
    mask_area: int
    centroid_px: tuple[float, float]
    rotation_axis_px: tuple[float, float]
    cloud_m: np.ndarray
    camera_rotation: np.ndarray
    camera_origin_m: np.ndarray

    def camera_to_world(self, p_cam: np.ndarray) -> np.ndarray:
        return self.camera_origin_m + self.camera_rotation @ np.asarray(p_cam, dtype=float)

    def direction_to_world(self, d_cam: np.ndarray) -> np.ndarray:
        return self.camera_rotation @ np.asarray(d_cam, dtype=float)


# --------------------------------------------------------------------------
# handle pixel geometry


def _disc(cu: float, cv: float, r: float) -> set[tuple[int, int]]:
    pts = set()
    for v in range(math.floor(cv - r), math.ceil(cv + r) + 1):
        for u in range(math.floor(cu - r), math.ceil(cu + r) + 1):
            if (u - cu) ** 2 + (v - cv) ** 2 <= r * r:
                pts.add((u, v))
    return pts


def _rect(u0: float, v0: float, w: float, h: float) -> set[tuple[int, int]]:
    us = range(math.ceil(u0), math.ceil(u0 + w))
    vs = range(math.ceil(v0), math.ceil(v0 + h))
    return {(u, v) for u in us for v in vs}


@lru_cache(maxsize=512)
def handle_mask(handle: HandleSpec) -> np.ndarray:
    """Mask pixels (N, 2) as integer (u, v), sorted, clipped to the image.

    lever: bar rectangle plus a rose disc of radius = bar thickness at the axis;
    knob: disc of diameter ``extent_px[0]`` at the axis;
    crossbar: C-shaped bar (top bar and two legs, 12 px thick) in the extent box;
    cabinet: bar rectangle.
    """
    (au, av), (w, h) = handle.anchor_px, handle.extent_px
    kind = handle.handle_type
    if kind is HandleType.LEVER:
        pts = _rect(au, av, w, h) | _disc(*handle.rotation_axis_px, h)
    elif kind is HandleType.KNOB:
        pts = _disc(*handle.rotation_axis_px, w / 2.0)
    elif kind is HandleType.CROSSBAR:
        t = CROSSBAR_BAR_PX
        pts = _rect(au, av, w, t) | _rect(au, av, t, h) | _rect(au + w - t, av, t, h)
    else:
        pts = _rect(au, av, w, h)
    arr = np.array(sorted((u, v) for u, v in pts
                          if 0 <= u < camera.IMAGE_WIDTH and 0 <= v < camera.IMAGE_HEIGHT),
                   dtype=np.int64).reshape(-1, 2)
    arr.flags.writeable = False
    return arr


def point_segment_distance(p, a, b) -> float:
    px, py = p
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / L2))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def region_distance_px(handle: HandleSpec, point_px) -> float:
    return min(point_segment_distance(point_px, a, b) for a, b in handle.graspable_region)


# --------------------------------------------------------------------------
# door geometry


class DoorGeometry:
    """Closed-form leaf kinematics and pixel <-> world mapping for one door."""

    def __init__(self, spec: DoorSpec, cfg: WorldConfig):
        self.origin = np.asarray(spec.plane_origin_m, dtype=float)
        self.normal = np.asarray(spec.plane_normal, dtype=float)
        self.up = np.array([0.0, 0.0, 1.0])
        self.right = np.cross(self.up, self.normal)
        self.view_distance = cfg.view_distance_m
        self.pitch = camera.pixel_pitch(cfg.view_distance_m)
        hinge_sign = -1.0 if spec.hinge_side is HingeSide.LEFT else 1.0
        self.hinge = self.origin + hinge_sign * 0.5 * spec.door_width_m * self.right
        self.slide = spec.swing is Swing.SLIDE
        # opening direction of the free edge, in the closed frame
        opening = -self.normal if spec.swing is Swing.PUSH else self.normal
        free_edge = -hinge_sign * self.right
        self.sigma = 1.0 if np.dot(np.cross(self.up, free_edge), opening) > 0 else -1.0
        axis_u = spec.handle.rotation_axis_px[0]
        lateral = (axis_u - camera.CX) * self.pitch
        self.hinge_radius = max(MIN_HINGE_RADIUS_M, abs(lateral - hinge_sign * 0.5 * spec.door_width_m))
        self.travel_max = spec.max_extension_m if self.slide else spec.max_open_angle_rad * self.hinge_radius
        self.cam_rotation0 = np.column_stack([self.right, -self.up, -self.normal])
        self.cam_origin0 = self.origin + self.view_distance * self.normal

    def angle(self, travel: float) -> float:
        return 0.0 if self.slide else travel / self.hinge_radius

    def leaf_transform(self, travel: float) -> tuple[np.ndarray, np.ndarray]:
        """(A, b) such that current world point = A @ closed_point + b."""
        if self.slide:
            return np.eye(3), travel * self.normal
        phi = self.sigma * travel / self.hinge_radius
        c, s = math.cos(phi), math.sin(phi)
        A = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return A, self.hinge - A @ self.hinge

    def leaf_normal(self, travel: float) -> np.ndarray:
        A, _ = self.leaf_transform(travel)
        return A @ self.normal

    def camera_pose(self, travel: float) -> tuple[np.ndarray, np.ndarray]:
        A, b = self.leaf_transform(travel)
        return A @ self.cam_rotation0, A @ self.cam_origin0 + b

    def pixel_to_world(self, u: float, v: float, travel: float) -> np.ndarray:
        p0 = (self.origin + (u - camera.CX) * self.pitch * self.right
              - (v - camera.CY) * self.pitch * self.up)
        A, b = self.leaf_transform(travel)
        return A @ p0 + b

    def world_to_pixel(self, p: np.ndarray, travel: float) -> tuple[float, float, float]:
        """(u, v, signed distance in front of the leaf) for a world point."""
        A, b = self.leaf_transform(travel)
        rel = A.T @ (np.asarray(p, dtype=float) - b) - self.origin
        u = camera.CX + float(rel @ self.right) / self.pitch
        v = camera.CY - float(rel @ self.up) / self.pitch
        return u, v, float(rel @ self.normal)


def base_to_world(base_pose, p_base) -> np.ndarray:
    x, y, h = base_pose
    c, s = math.cos(h), math.sin(h)
    return np.array([x + c * p_base[0] - s * p_base[1], y + s * p_base[0] + c * p_base[1], p_base[2]])


def world_to_base(base_pose, p_world) -> np.ndarray:
    x, y, h = base_pose
    c, s = math.cos(h), math.sin(h)
    dx, dy = p_world[0] - x, p_world[1] - y
    return np.array([c * dx + s * dy, -s * dx + c * dy, p_world[2]])


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2 * math.pi) - math.pi


# --------------------------------------------------------------------------
# the world


class World:
    """Mutable state of one episode's physics.  Advance only through :meth:`step`."""

    def __init__(self, spec: DoorSpec, cfg: WorldConfig, seed: int | np.random.Generator,
                 base_pose=(0.0, 0.0, 0.0)):
        spec.validate()
        self.spec = spec
        self.cfg = cfg
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        self.geometry = DoorGeometry(spec, cfg)
        no_latch = spec.handle.handle_type not in ROTATING_HANDLES
        self.door = DoorState(unlocked=no_latch and not spec.locked)
        base = np.array(base_pose, dtype=float)
        self.robot = RobotState(
            base_pose=base,
            ee_position_m=base_to_world(base, cfg.ee_home_m),
            ee_orientation=np.array([0.0, 0.0, 0.0, 1.0]),
            gripper_opening_m=0.08,
            joint_currents_A=np.array(cfg.free_current_A, dtype=float),
        )
        self.t_s = 0.0
        self.steps = 0
        self.faults: list[WorldFault] = []
        self._obstruction_left = 0
        self._free = np.array(cfg.free_current_A, dtype=float)
        self._limits = self._handle_limits()

    # -- queries ---------------------------------------------------------

    def copy(self) -> "World":
        return copy.deepcopy(self)

    @property
    def door_angle_rad(self) -> float:
        return self.door.door_angle_rad

    def is_open(self) -> bool:
        """Success criterion: hinge angle above 45 degrees, or drawer fully out."""
        if self.geometry.slide:
            return self.door.extension_m >= self.spec.max_extension_m - 1e-9
        return self.door.door_angle_rad > OPEN_SUCCESS_ANGLE_RAD

    def handle_world_point(self) -> np.ndarray:
        u, v = self.spec.handle.rotation_axis_px
        return self.geometry.pixel_to_world(u, v, self.door.door_travel_m)

    def leaf_normal(self) -> np.ndarray:
        return self.geometry.leaf_normal(self.door.door_travel_m)

    def visible(self) -> bool:
        cfg = self.cfg
        target = self.handle_world_point()
        normal = self.leaf_normal()
        x, y, heading = self.robot.base_pose
        dx, dy = x - target[0], y - target[1]
        dist = math.hypot(dx, dy)
        if dist > cfg.view_max_distance_m or dist < 1e-9:
            return False
        cos_cone = (dx * normal[0] + dy * normal[1]) / (dist * math.hypot(normal[0], normal[1]))
        if cos_cone < math.cos(cfg.view_cone_half_angle_rad):
            return False
        bearing = math.atan2(-dy, -dx)
        return abs(wrap_angle(bearing - heading)) <= cfg.fov_half_angle_rad

    def arm_fault(self, fault: WorldFault) -> None:
        self.faults.append(fault)

    # -- mechanics -------------------------------------------------------

    def _handle_limits(self) -> tuple[float, float]:
        h = self.spec.handle
        if h.handle_type not in ROTATING_HANDLES:
            return 0.0, 0.0
        slack, reach = h.hard_stop_slack_rad, h.unlock_angle_rad
        if self.spec.locked:
            return -slack, slack
        d = h.unlock_direction
        if d is UnlockDirection.CCW:
            return -slack, reach
        if d is UnlockDirection.CW:
            return -reach, slack
        if d is UnlockDirection.EITHER:
            return -reach, reach
        return -slack, slack

    def _check_unlock(self) -> None:
        h = self.spec.handle
        if self.door.unlocked or self.spec.locked or h.unlock_direction is UnlockDirection.NONE:
            return
        if h.handle_type not in ROTATING_HANDLES:
            return
        a, reach = self.door.handle_angle_rad, h.unlock_angle_rad - 1e-12
        d = h.unlock_direction
        if ((d in (UnlockDirection.CCW, UnlockDirection.EITHER) and a >= reach)
                or (d in (UnlockDirection.CW, UnlockDirection.EITHER) and a <= -reach)):
            self.door.unlocked = True

    def _release(self) -> None:
        """Contact gone: the spring-loaded handle returns to rest, door strain relaxes."""
        d = self.door
        d.gripper_engaged = False
        d.gripper_point_px = None
        d.handle_angle_rad = d.handle_command_rad = 0.0
        d.door_command_m = d.door_travel_m

    def _close_gripper(self, short: bool) -> None:
        d, geo, h = self.door, self.geometry, self.spec.handle
        ee = self.robot.ee_position_m
        if short:
            ee = ee + self.cfg.grasp_short_m * self.leaf_normal()
        u, v, depth = geo.world_to_pixel(ee, d.door_travel_m)
        engaged = (abs(depth) <= self.cfg.depth_capture_tolerance_m
                   and region_distance_px(h, (u, v)) <= h.capture_radius_px)
        d.gripper_closed = True
        d.gripper_engaged = engaged
        d.gripper_point_px = (u, v) if engaged else None
        self.robot.gripper_opening_m = self.cfg.handle_thickness_m if engaged else 0.0
        if engaged:
            d.grasp_handle_angle_rad = d.handle_angle_rad
            if h.handle_type is HandleType.KNOB:
                d.grasp_radius_m = h.rotation_radius_m
            elif h.handle_type is HandleType.LEVER:
                au, av = h.rotation_axis_px
                d.grasp_radius_m = math.hypot(u - au, v - av) * geo.pitch
            else:
                d.grasp_radius_m = 0.0

    def _apply_faults(self) -> tuple[bool, bool]:
        """Fire due faults.  Returns (grasp_short pending, slip now)."""
        short = slip = False
        for f in self.faults:
            if f.fired or self.steps < f.at_step:
                continue
            if f.min_travel_m is not None and self.door.door_travel_m < f.min_travel_m:
                continue
            if f.kind == "grasp_short":
                short = True
                continue  # consumed by the next close
            f.fired = True
            if f.kind == "contact_slip":
                slip = True
            elif f.kind == "obstruction":
                self._obstruction_left = self.cfg.obstruction_steps
            elif f.kind == "base_slip":
                x, y, h = self.robot.base_pose
                self.robot.base_pose = np.array([x - self.cfg.base_slip_m * math.cos(h),
                                                 y - self.cfg.base_slip_m * math.sin(h), h])
                if not self.door.gripper_engaged:
                    self.robot.ee_position_m = base_to_world(self.robot.base_pose, self.cfg.ee_home_m)
            else:
                raise ValueError(f"unknown world fault {f.kind!r}")
        return short, slip

    def step(self, cmd: EndEffectorCommand = HOLD) -> HapticSample:
        cfg, d, robot, geo = self.cfg, self.door, self.robot, self.geometry
        short, slip = self._apply_faults()

        if cmd.base_delta is not None:
            old = robot.base_pose
            robot.base_pose = old + np.asarray(cmd.base_delta, dtype=float)
            robot.base_pose[2] = wrap_angle(robot.base_pose[2])
            if not d.gripper_engaged:
                local = world_to_base(old, robot.ee_position_m)
                robot.ee_position_m = base_to_world(robot.base_pose, local)

        if cmd.ee_target_m is not None and not d.gripper_engaged:
            robot.ee_position_m = np.asarray(cmd.ee_target_m, dtype=float)

        if cmd.gripper == "open":
            d.gripper_closed = False
            robot.gripper_opening_m = 0.08
            self._release()
        elif cmd.gripper == "close":
            self._close_gripper(short)
            if short:
                for f in self.faults:
                    if f.kind == "grasp_short" and not f.fired:
                        f.fired = True

        if cmd.rotate_rad and d.gripper_engaged:
            lo, hi = self._limits
            d.handle_command_rad += cmd.rotate_rad
            d.handle_angle_rad = min(max(d.handle_command_rad, lo), hi)
            self._check_unlock()
            if cmd.arc_radius_m is not None:
                mismatch = abs(abs(cmd.arc_radius_m) - d.grasp_radius_m)
                swept = abs(d.handle_angle_rad - d.grasp_handle_angle_rad)
                if mismatch * swept > cfg.arc_slip_tolerance_m:
                    slip = True

        if cmd.pull_m:
            normal = self.leaf_normal()
            if d.gripper_engaged:
                sense = -1.0 if self.spec.swing is Swing.PUSH else 1.0
                d.door_command_m += sense * cmd.pull_m
                if d.unlocked:
                    d.door_travel_m = min(max(d.door_command_m, 0.0), geo.travel_max)
                robot.base_pose = robot.base_pose + np.array([cmd.pull_m * normal[0], cmd.pull_m * normal[1], 0.0])
                if d.gripper_point_px is not None:
                    robot.ee_position_m = geo.pixel_to_world(*d.gripper_point_px, d.door_travel_m)
            else:
                robot.base_pose = robot.base_pose + np.array([cmd.pull_m * normal[0], cmd.pull_m * normal[1], 0.0])
                robot.ee_position_m = robot.ee_position_m + cmd.pull_m * np.array([normal[0], normal[1], 0.0])

        if cmd.relax:
            d.handle_command_rad = d.handle_angle_rad
            d.door_command_m = d.door_travel_m

        if slip and d.gripper_engaged:
            self._release()

        d.door_angle_rad = geo.angle(d.door_travel_m)
        d.extension_m = d.door_travel_m if geo.slide else 0.0

        torque = 0.0
        if d.gripper_engaged:
            torque += cfg.handle_stiffness_Nm_per_rad * abs(d.handle_command_rad - d.handle_angle_rad)
        torque += cfg.door_resist_stiffness_N_per_m * abs(d.door_command_m - d.door_travel_m) * cfg.elbow_lever_arm_m
        if self._obstruction_left > 0:
            torque += cfg.obstruction_torque_Nm
            self._obstruction_left -= 1

        currents = self._free + self.rng.normal(0.0, cfg.current_noise_sigma_A, 7)
        currents[4] += cfg.current_gain_A_per_Nm * torque
        robot.joint_currents_A = currents
        self.steps += 1
        self.t_s = self.steps * cfg.dt_s
        resistance = Resistance.HIGH if (d.gripper_closed and d.gripper_engaged) else Resistance.LOW
        return HapticSample(self.t_s, currents, resistance)

    # -- sensing ---------------------------------------------------------

    def gripper_resistance(self) -> Resistance:
        d = self.door
        return Resistance.HIGH if (d.gripper_closed and d.gripper_engaged) else Resistance.LOW

    def render_observation(self) -> Observation:
        if not self.visible():
            raise NotVisible("door outside the viewing cone")
        spec, cfg = self.spec, self.cfg
        mask = handle_mask(spec.handle)
        area = int(mask.shape[0])
        su, sv = int(mask[:, 0].sum()), int(mask[:, 1].sum())
        rot, origin = self.geometry.camera_pose(self.door.door_travel_m)
        cloud = self._render_cloud()
        return Observation(
            handle_type=spec.handle.handle_type,
            mask_px=mask,
            mask_sum_px=(su, sv),
            mask_area=area,
            centroid_px=(su / area, sv / area) if area else (math.nan, math.nan),
            rotation_axis_px=tuple(spec.handle.rotation_axis_px),
            cloud_m=cloud,
            camera_rotation=rot,
            camera_origin_m=origin,
        )

    def _render_cloud(self) -> np.ndarray:
        """Door points in the camera frame: plane samples with noise plus outliers.

        Outliers are drawn uniformly from a cube around the door minus the slab
        within 3 sigma of the plane, so exactly ``outlier_fraction`` of the
        points are off-plane.
        """
        spec, cfg, rng = self.spec, self.cfg, self.rng
        n = cfg.cloud_points
        n_out = int(round(spec.outlier_fraction * n))
        n_in = n - n_out
        sigma = spec.point_cloud_noise_sigma_m
        d = cfg.view_distance_m
        x = rng.uniform(-spec.door_width_m / 2, spec.door_width_m / 2, n_in)
        y = rng.uniform(-spec.door_height_m / 2, spec.door_height_m / 2, n_in)
        inliers = np.column_stack([x, y, np.full(n_in, d)]) + rng.normal(0.0, sigma, (n_in, 3))
        half = cfg.outlier_box_m / 2
        ox = rng.uniform(-half, half, n_out)
        oy = rng.uniform(-half, half, n_out)
        gap = rng.uniform(3.0 * sigma, half, n_out) * rng.choice([-1.0, 1.0], n_out)
        outliers = np.column_stack([ox, oy, d + gap])
        return np.vstack([inliers, outliers])


def world_step(world: World, command: EndEffectorCommand) -> tuple[World, HapticSample]:
    """Functional form of :meth:`World.step`: the input world is left untouched."""
    nxt = world.copy()
    sample = nxt.step(command)
    return nxt, sample


def render_observation(world: World) -> Observation:
    return world.render_observation()


def gripper_resistance(world: World) -> Resistance:
    return world.gripper_resistance()
