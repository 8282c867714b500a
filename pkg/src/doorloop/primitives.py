"""The six motion primitives.

Each primitive drives the world one control tick at a time, watches the
haptic channel, and returns a :class:`PrimitiveOutcome` holding either
``SUCCESS`` or one of the six error codes.  Primitives never read hidden
world state to decide what happened; the ground-truth snapshot stored in
``telemetry["truth"]`` is for auditing only.  Door angle is the one
exception: the robot tracks the leaf through the handle it holds, so the
open primitive reads it as odometry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import perception
from .common import SUCCESS, ErrorCode, HandleType, PrimitiveId, Swing, ROTATING_HANDLES
from .config import Config
from .dmp import default_reach, dmp_rollout
from .haptics import (EventKind, HapticEvent, HapticSample, HapticTrace, LimitDetector,
                      classify_push_pull, detect_contact_lost, swing_event)
from .world import HOLD, EndEffectorCommand, NotVisible, World, WorldFault, base_to_world, world_to_base

# error code -> primitive that can raise it
ERROR_SOURCE = {
    ErrorCode.GRASP_IK_FAIL: (PrimitiveId.GRASP,),
    ErrorCode.GRASP_MISS: (PrimitiveId.GRASP,),
    ErrorCode.UNLOCK_MISS: (PrimitiveId.UNLOCK_LEVER, PrimitiveId.UNLOCK_KNOB),
    ErrorCode.UNLOCK_COLLISION: (PrimitiveId.UNLOCK_LEVER, PrimitiveId.UNLOCK_KNOB),
    ErrorCode.OPEN_MISS: (PrimitiveId.OPEN,),
    ErrorCode.OPEN_COLLISION: (PrimitiveId.OPEN,),
}


@dataclass
class PrimitiveOutcome:
    primitive: PrimitiveId
    result: str  # SUCCESS or an ErrorCode
    duration_steps: int
    telemetry: dict = field(default_factory=dict)
    trace: HapticTrace = field(default_factory=HapticTrace)
    events: list[HapticEvent] = field(default_factory=list)
    hazard: bool = False

    @property
    def ok(self) -> bool:
        return self.result == SUCCESS


@dataclass
class FaultInjection:
    """Arm the world cause of ``code`` when its primitive starts for the ``occurrence``-th time."""

    code: ErrorCode
    occurrence: int = 1


@dataclass
class EpisodeContext:
    world: World
    cfg: Config
    model: object  # anything with refine_grasp(observation, handle_type, plane)
    adaptive: bool = True
    swing_guess: Swing | None = None  # open-loop guess, or the coin-flip classifier's call
    rng_perception: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    rng_faults: np.random.Generator = field(default_factory=lambda: np.random.default_rng(1))
    injections: list[FaultInjection] = field(default_factory=list)
    invocations: dict = field(default_factory=dict)
    # filled in by approach / grasp
    plane: perception.PlaneFit | None = None
    door_normal_world: np.ndarray | None = None
    prediction: perception.GraspPrediction | None = None
    gripper_closed: bool = False
    # a conclusive probe is remembered: once the leaf is ajar a push door
    # follows a backward pull, so probing again would mislead
    swing_belief: Swing | None = None

    @property
    def handle_type(self) -> HandleType:
        return self.world.spec.handle.handle_type


class _Session:
    """Step counter, trace recorder and shared detectors for one primitive run."""

    def __init__(self, ctx: EpisodeContext, pid: PrimitiveId):
        self.ctx, self.world, self.pid = ctx, ctx.world, pid
        wc, pc = ctx.cfg.world, ctx.cfg.primitives
        self.budget = pc.step_budget[pid.value]
        self.trace = HapticTrace()
        self.events: list[HapticEvent] = []
        self.steps = 0
        self.hazard = False
        self.hazard_A = wc.current_threshold_A * pc.hazard_factor
        self.limit = LimitDetector(wc.current_threshold_A, pc.limit_window)
        self.collision = LimitDetector(wc.current_threshold_A * pc.collision_factor, pc.limit_window,
                                       EventKind.COLLISION_SPIKE)

    @property
    def left(self) -> int:
        return self.budget - self.steps

    def step(self, cmd: EndEffectorCommand = HOLD) -> HapticSample:
        sample = self.world.step(cmd)
        self.trace.append(sample)
        self.steps += 1
        if sample.elbow_A > self.hazard_A:
            self.hazard = True
        return sample

    def watch(self, sample: HapticSample) -> HapticEvent | None:
        """Collision first, then contact, then the rotation/stall limit."""
        event = self.collision.update(sample)
        if event is None and detect_contact_lost(sample):
            event = HapticEvent(EventKind.CONTACT_LOST, sample.t_s, 0.0)
        if event is None:
            event = self.limit.update(sample)
        if event is not None:
            self.events.append(event)
        return event

    def reset_detectors(self) -> None:
        self.limit.reset()
        self.collision.reset()

    def finish(self, result: str, **telemetry) -> PrimitiveOutcome:
        w = self.world
        telemetry["truth"] = {
            "engaged": bool(w.door.gripper_engaged),
            "unlocked": bool(w.door.unlocked),
            "door_angle_rad": float(w.door.door_angle_rad),
            "extension_m": float(w.door.extension_m),
            "max_elbow_A": float(self.trace.elbow().max()) if len(self.trace) else 0.0,
        }
        return PrimitiveOutcome(self.pid, result, self.steps, telemetry, self.trace, self.events, self.hazard)


# --------------------------------------------------------------------------
# fault injection


def _trigger_travel(world: World, fraction_of_target: float, target_rad: float) -> float:
    geo = world.geometry
    if geo.slide:
        return fraction_of_target * world.spec.max_extension_m
    return fraction_of_target * target_rad * geo.hinge_radius


def _arm_faults(ctx: EpisodeContext, pid: PrimitiveId) -> list[str]:
    n = ctx.invocations[pid] = ctx.invocations.get(pid, 0) + 1
    w, now = ctx.world, ctx.world.steps
    target = ctx.cfg.primitives.open_target_angle_rad
    armed = []
    for inj in ctx.injections:
        if pid not in ERROR_SOURCE[inj.code] or inj.occurrence != n:
            continue
        if inj.code is ErrorCode.GRASP_IK_FAIL:
            w.arm_fault(WorldFault("base_slip", at_step=now))
        elif inj.code is ErrorCode.GRASP_MISS:
            w.arm_fault(WorldFault("grasp_short", at_step=now))
        elif inj.code is ErrorCode.UNLOCK_MISS:
            w.arm_fault(WorldFault("contact_slip", at_step=now + 5))
        elif inj.code is ErrorCode.UNLOCK_COLLISION:
            w.arm_fault(WorldFault("obstruction", at_step=now + 5))
        elif inj.code is ErrorCode.OPEN_MISS:
            # contact lost about a third of the way to the target angle
            w.arm_fault(WorldFault("contact_slip", at_step=now, min_travel_m=_trigger_travel(w, 1 / 3, target)))
        elif inj.code is ErrorCode.OPEN_COLLISION:
            w.arm_fault(WorldFault("obstruction", at_step=now, min_travel_m=_trigger_travel(w, 1 / 4, target)))
        armed.append(inj.code.value)
    p = ctx.cfg.primitives.contact_loss_prob.get(pid.value, 0.0)
    if p > 0 and ctx.rng_faults.uniform() < p:
        w.arm_fault(WorldFault("contact_slip", at_step=now + int(ctx.rng_faults.integers(1, 40))))
        armed.append("random_contact_loss")
    return armed


# --------------------------------------------------------------------------
# approach


def _plane_in_world(obs, plane: perception.PlaneFit):
    """World-frame door normal (toward the robot) and the handle point on the plane."""
    normal = obs.direction_to_world(plane.normal)
    pose = perception.grasp_pose_from_prediction(perception.GraspPrediction(0.0, 0.0, 0.0), plane, obs)
    return normal, obs.camera_to_world(pose.position_m)


def _drive_to(s: _Session, goal: tuple[float, float, float]) -> bool:
    """Holonomic base motion at the configured speed limits.  False if the budget ran out."""
    pc, dt = s.ctx.cfg.primitives, s.ctx.cfg.world.dt_s
    lin, ang = pc.base_speed_m_s * dt, pc.base_turn_rate_rad_s * dt
    while True:
        x, y, h = s.world.robot.base_pose
        dx, dy = goal[0] - x, goal[1] - y
        dh = math.remainder(goal[2] - h, 2 * math.pi)
        dist = math.hypot(dx, dy)
        if dist < 1e-9 and abs(dh) < 1e-9:
            return True
        if s.left <= 0:
            return False
        k = min(1.0, lin / dist) if dist > 0 else 0.0
        s.step(EndEffectorCommand(base_delta=(dx * k, dy * k, max(-ang, min(ang, dh)))))


def approach(ctx: EpisodeContext) -> PrimitiveOutcome:
    s = _Session(ctx, PrimitiveId.APPROACH)
    w, pc = ctx.world, ctx.cfg.primitives
    if ctx.gripper_closed or w.door.gripper_closed:
        home = base_to_world(w.robot.base_pose, ctx.cfg.world.ee_home_m)
        s.step(EndEffectorCommand(gripper="open", ee_target_m=tuple(home)))
        ctx.gripper_closed = False
    scans = 0
    while True:
        try:
            obs = w.render_observation()
            break
        except NotVisible:
            if scans >= pc.max_scans or s.left <= 0:
                return s.finish(SUCCESS, found=False, scans=scans)
            scans += 1
            x, y, h = w.robot.base_pose
            if not _drive_to(s, (x, y, h + pc.scan_step_rad)):
                return s.finish(SUCCESS, found=False, scans=scans)
    plane = perception.ransac_plane(obs.cloud_m, ctx.cfg.perception.ransac_threshold_m,
                                    ctx.cfg.perception.ransac_iterations, ctx.rng_perception)
    normal, handle = _plane_in_world(obs, plane)
    nxy = np.array([normal[0], normal[1]])
    nxy /= np.linalg.norm(nxy)
    goal = (handle[0] + pc.approach_offset_m * nxy[0], handle[1] + pc.approach_offset_m * nxy[1],
            math.atan2(-nxy[1], -nxy[0]))
    ctx.plane = plane
    ctx.door_normal_world = np.array([nxy[0], nxy[1], 0.0])
    reached = _drive_to(s, goal)
    return s.finish(SUCCESS, found=True, scans=scans, reached=reached,
                    preset_pose=[float(g) for g in goal], inliers=plane.inlier_count)


# --------------------------------------------------------------------------
# grasp


def _in_box(p_base, box) -> bool:
    return all(lo <= c <= hi for c, (lo, hi) in zip(p_base, box))


def grasp(ctx: EpisodeContext) -> PrimitiveOutcome:
    s = _Session(ctx, PrimitiveId.GRASP)
    faults = _arm_faults(ctx, PrimitiveId.GRASP)
    w, pc, wc = ctx.world, ctx.cfg.primitives, ctx.cfg.world
    home = base_to_world(w.robot.base_pose, wc.ee_home_m)
    s.step(EndEffectorCommand(gripper="open", ee_target_m=tuple(home)))
    ctx.gripper_closed = False
    try:
        obs = w.render_observation()
    except NotVisible:
        return s.finish(ErrorCode.GRASP_IK_FAIL, reason="not visible", faults=faults)
    plane = perception.ransac_plane(obs.cloud_m, ctx.cfg.perception.ransac_threshold_m,
                                    ctx.cfg.perception.ransac_iterations, ctx.rng_perception)
    pred = ctx.model.refine_grasp(obs, obs.handle_type, plane)
    try:
        pose = perception.grasp_pose_from_prediction(pred, plane, obs)
    except perception.BehindCamera:
        return s.finish(ErrorCode.GRASP_IK_FAIL, reason="behind camera", faults=faults)
    target = obs.camera_to_world(pose.position_m)
    approach_dir = obs.direction_to_world(pose.approach_axis)
    pregrasp = target - pc.pregrasp_offset_m * approach_dir
    base = w.robot.base_pose
    if not (_in_box(world_to_base(base, target), wc.workspace_box_m)
            and _in_box(world_to_base(base, pregrasp), wc.workspace_box_m)):
        return s.finish(ErrorCode.GRASP_IK_FAIL, reason="outside workspace",
                        target_base=[float(c) for c in world_to_base(base, target)], faults=faults)
    ctx.prediction = pred

    start = w.robot.ee_position_m.copy()
    path = dmp_rollout(default_reach(), start, pregrasp, pc.dmp_steps).y
    idx = np.linspace(0, len(path) - 1, pc.reach_waypoints).round().astype(int)[1:]
    for p in path[idx]:
        s.step(EndEffectorCommand(ee_target_m=tuple(p)))
    for a in np.linspace(0.0, 1.0, 5)[1:]:
        s.step(EndEffectorCommand(ee_target_m=tuple(pregrasp + a * (target - pregrasp))))
    sample = s.step(EndEffectorCommand(gripper="close"))
    ctx.gripper_closed = True
    telemetry = dict(dx_px=pred.dx_px, dy_px=pred.dy_px, R=pred.rotation_param_R,
                     orientation=[float(q) for q in pose.orientation], faults=faults)
    if detect_contact_lost(sample):
        return s.finish(ErrorCode.GRASP_MISS, **telemetry)
    return s.finish(SUCCESS, **telemetry)


# --------------------------------------------------------------------------
# unlock


def rotate_until_limit(s: _Session, sign: float, radius: float) -> tuple[str, float]:
    """Turn the held handle until a haptic event.  Returns (what happened, travel)."""
    pc, dt = s.ctx.cfg.primitives, s.ctx.cfg.world.dt_s
    dtheta = pc.rotation_speed_rad_s * dt
    travel = 0.0
    s.reset_detectors()
    while s.left > 0:
        sample = s.step(EndEffectorCommand(rotate_rad=sign * dtheta, arc_radius_m=radius))
        travel += dtheta
        event = s.watch(sample)
        if event is None:
            continue
        if event.kind is EventKind.COLLISION_SPIKE:
            return "collision", travel
        if event.kind is EventKind.CONTACT_LOST:
            return "lost", travel
        return "limit", travel
    return "budget", travel


def _unlock(ctx: EpisodeContext, pid: PrimitiveId) -> PrimitiveOutcome:
    s = _Session(ctx, pid)
    faults = _arm_faults(ctx, pid)
    pc = ctx.cfg.primitives
    pred = ctx.prediction
    R = pred.rotation_param_R if pred is not None else 0.0
    sign = 1.0 if R >= 0 else -1.0
    radius = abs(R)
    initial = sign
    if not ctx.world.door.gripper_engaged:
        s.step()
        return s.finish(ErrorCode.UNLOCK_MISS, reason="no contact at start", faults=faults)
    reversals = 0
    while True:
        what, travel = rotate_until_limit(s, sign, radius)
        tele = dict(initial_sign=initial, final_sign=sign, reversals=reversals, travel_rad=travel, faults=faults)
        if what == "lost":
            return s.finish(ErrorCode.UNLOCK_MISS, **tele)
        if what in ("collision", "budget"):
            return s.finish(ErrorCode.UNLOCK_COLLISION, reason=what, **tele)
        s.step(EndEffectorCommand(relax=True))
        if travel >= pc.unlock_min_travel_rad:
            return s.finish(SUCCESS, **tele)
        # stopped early: wrong direction or a locked latch
        if not ctx.adaptive or reversals >= 1:
            return s.finish(ErrorCode.UNLOCK_COLLISION, reason="limit in both directions"
                            if reversals else "limit, no reversal", **tele)
        reversals += 1
        sign = -sign


def unlock_lever(ctx: EpisodeContext) -> PrimitiveOutcome:
    return _unlock(ctx, PrimitiveId.UNLOCK_LEVER)


def unlock_knob(ctx: EpisodeContext) -> PrimitiveOutcome:
    return _unlock(ctx, PrimitiveId.UNLOCK_KNOB)


# --------------------------------------------------------------------------
# open


def execute_probe(s: _Session, baseline_A: float) -> tuple[Swing | None, HapticTrace]:
    """Short backward pull with the handle held; classify the elbow response."""
    pc, dt = s.ctx.cfg.primitives, s.ctx.cfg.world.dt_s
    n = max(2, int(round(pc.probe_distance_m / (pc.probe_speed_m_s * dt))))
    d = pc.probe_distance_m / n
    start = len(s.trace)
    for _ in range(n):
        s.step(EndEffectorCommand(pull_m=d))
    probe = s.trace[start:]
    s.step(EndEffectorCommand(relax=True))
    return classify_push_pull(probe, baseline_A, pc.push_pull_delta_A), probe


def open_door(ctx: EpisodeContext) -> PrimitiveOutcome:
    s = _Session(ctx, PrimitiveId.OPEN)
    faults = _arm_faults(ctx, PrimitiveId.OPEN)
    w, pc, dt = ctx.world, ctx.cfg.primitives, ctx.cfg.world.dt_s
    slide = w.geometry.slide
    if not w.door.gripper_engaged:
        s.step()
        return s.finish(ErrorCode.OPEN_MISS, reason="no contact at start", faults=faults)

    base = []
    for _ in range(pc.baseline_samples):
        base.append(s.step())
        event = s.watch(base[-1])
        if event is not None and event.kind is EventKind.CONTACT_LOST:
            return s.finish(ErrorCode.OPEN_MISS, reason="contact lost before probe", faults=faults)
        if event is not None and event.kind is EventKind.COLLISION_SPIKE:
            return s.finish(ErrorCode.OPEN_COLLISION, reason="collision before probe", faults=faults)
    baseline = float(np.mean([b.elbow_A for b in base]))

    probes = 0
    if not ctx.adaptive or pc.swing_classifier == "coin":
        swing = ctx.swing_guess
        source = "guess" if not ctx.adaptive else "coin"
    elif ctx.swing_belief is not None:
        swing, source = ctx.swing_belief, "memory"
    else:
        swing, source = None, "haptic"
        for _ in range(2):  # one retry on an inconclusive probe
            swing, probe = execute_probe(s, baseline)
            probes += 1
            s.events.append(swing_event(swing, probe[-1].t_s, float(probe.elbow().max())))
            if not w.door.gripper_engaged:
                return s.finish(ErrorCode.OPEN_MISS, reason="contact lost during probe", probes=probes,
                                faults=faults)
            if swing is not None:
                ctx.swing_belief = swing
                break
        if swing is None:
            swing, source = Swing.PULL, "default"
    sense = 1.0 if swing is Swing.PULL else -1.0
    tele = dict(swing=swing.value, swing_source=source, probes=probes, baseline_A=baseline, faults=faults)

    step = pc.open_speed_m_s * dt
    commanded = 0.0
    s.reset_detectors()
    while s.left > 0:
        sample = s.step(EndEffectorCommand(pull_m=sense * step))
        commanded += step
        event = s.watch(sample)
        if event is not None:
            if event.kind is EventKind.CONTACT_LOST:
                return s.finish(ErrorCode.OPEN_MISS, **tele)
            if event.kind is EventKind.COLLISION_SPIKE:
                return s.finish(ErrorCode.OPEN_COLLISION, reason="collision", **tele)
            # stall at the threshold: a drawer at its end stop, otherwise blocked
            s.step(EndEffectorCommand(relax=True))
            if slide and sense > 0 and commanded > pc.probe_distance_m:
                return s.finish(SUCCESS, **tele)
            return s.finish(ErrorCode.OPEN_COLLISION, reason="stalled", **tele)
        if not slide and w.door.door_angle_rad >= pc.open_target_angle_rad:
            return s.finish(SUCCESS, **tele)
    return s.finish(ErrorCode.OPEN_COLLISION, reason="budget", **tele)


# --------------------------------------------------------------------------
# traverse


def traverse(ctx: EpisodeContext) -> PrimitiveOutcome:
    s = _Session(ctx, PrimitiveId.TRAVERSE)
    w, pc = ctx.world, ctx.cfg.primitives
    spec = w.spec
    if spec.swing is Swing.SLIDE or spec.handle.handle_type is HandleType.CABINET:
        return s.finish(SUCCESS, mode="none")
    if spec.swing is Swing.PULL:
        for _ in range(min(pc.pull_traverse_steps, s.budget)):
            s.step()
        return s.finish(SUCCESS, mode="scripted")
    s.step(EndEffectorCommand(gripper="open"))
    ctx.gripper_closed = False
    n = ctx.door_normal_world if ctx.door_normal_world is not None else w.leaf_normal()
    x, y, h = w.robot.base_pose
    goal = (x - pc.traverse_distance_m * n[0], y - pc.traverse_distance_m * n[1], h)
    _drive_to(s, goal)
    return s.finish(SUCCESS, mode="drive", base_pose=[float(c) for c in w.robot.base_pose])


PRIMITIVES = {
    PrimitiveId.APPROACH: approach,
    PrimitiveId.GRASP: grasp,
    PrimitiveId.UNLOCK_LEVER: unlock_lever,
    PrimitiveId.UNLOCK_KNOB: unlock_knob,
    PrimitiveId.OPEN: open_door,
    PrimitiveId.TRAVERSE: traverse,
}


def run_primitive(pid: PrimitiveId, ctx: EpisodeContext) -> PrimitiveOutcome:
    return PRIMITIVES[pid](ctx)


def needs_unlock(handle_type: HandleType) -> bool:
    return handle_type in ROTATING_HANDLES
