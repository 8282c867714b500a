"""Door suites: YAML files with one document per door, plus builders.

Each document holds the DoorSpec fields (with an ``id``) and a nested
``handle`` mapping with the HandleSpec fields.  Enum values are the lower
case names (``lever``, ``push``, ``ccw`` ...).  Unknown or missing fields
are errors.  Pixel coordinates refer to the fixed 640x480 virtual image
(focal 525 px, principal point at the center) of a camera looking straight
at the door from ``view_distance_m`` in front of ``plane_origin_m``.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import camera
from .common import HandleType, HingeSide, Swing, UnlockDirection
from .world import CROSSBAR_BAR_PX, DoorSpec, HandleSpec

DEFAULT_VIEW_DISTANCE_M = 1.0
PITCH = camera.pixel_pitch(DEFAULT_VIEW_DISTANCE_M)


class SuiteParseError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<suite>"):
        self.line = line
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


_ENUMS = {"handle_type": HandleType, "unlock_direction": UnlockDirection,
          "swing": Swing, "hinge_side": HingeSide}


def _pairs(value):
    return tuple(float(v) for v in value)


def _segments(value):
    return tuple((_pairs(a), _pairs(b)) for a, b in value)


_CONVERT = {
    "anchor_px": _pairs, "extent_px": _pairs, "rotation_axis_px": _pairs,
    "plane_origin_m": _pairs, "plane_normal": _pairs, "graspable_region": _segments,
}


def _key_line(node, key: str) -> int:
    for k, _ in getattr(node, "value", []):
        if getattr(k, "value", None) == key:
            return k.start_mark.line + 1
    return node.start_mark.line + 1


def _build(cls, raw, node, source: str):
    if not isinstance(raw, dict):
        raise SuiteParseError(f"expected a mapping for {cls.__name__}", node.start_mark.line + 1, source)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    for key in raw:
        if key not in fields:
            raise SuiteParseError(f"unknown field {key!r} in {cls.__name__}", _key_line(node, key), source)
    required = [n for n, f in fields.items() if f.default is dataclasses.MISSING]
    for name in required:
        if name not in raw:
            raise SuiteParseError(f"missing field {name!r} in {cls.__name__}", node.start_mark.line + 1, source)
    out = {}
    for key, value in raw.items():
        try:
            if key in _ENUMS:
                out[key] = _ENUMS[key](value)
            elif key in _CONVERT:
                out[key] = _CONVERT[key](value)
            elif key == "handle":
                sub = next(v for k, v in node.value if k.value == "handle")
                out[key] = _build(HandleSpec, value, sub, source)
            elif key in ("id",):
                out[key] = str(value)
            elif key == "locked":
                if not isinstance(value, bool):
                    raise ValueError("locked must be true or false")
                out[key] = value
            else:
                out[key] = float(value)
        except SuiteParseError:
            raise
        except (TypeError, ValueError) as exc:
            raise SuiteParseError(f"bad value for {key!r}: {exc}", _key_line(node, key), source) from None
    return cls(**out)


def parse_suite(text: str, source: str = "<suite>") -> list[DoorSpec]:
    loader = yaml.SafeLoader(text)
    doors: list[DoorSpec] = []
    seen = set()
    try:
        while loader.check_node():
            node = loader.get_node()
            raw = loader.construct_document(node)
            if raw is None:
                continue
            door = _build(DoorSpec, raw, node, source)
            try:
                door.validate()
            except ValueError as exc:
                raise SuiteParseError(str(exc), node.start_mark.line + 1, source) from None
            if door.id in seen:
                raise SuiteParseError(f"duplicate door id {door.id!r}", _key_line(node, "id"), source)
            seen.add(door.id)
            doors.append(door)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise SuiteParseError(str(exc).splitlines()[0], mark.line + 1 if mark else None, source) from None
    finally:
        loader.dispose()
    return doors


def load_suite(path: str | Path) -> list[DoorSpec]:
    """Load a suite file.  Bare names resolve to the shipped suites (``suite_field20``)."""
    p = Path(path)
    if not p.exists() and p.suffix == "" and "/" not in str(path):
        res = resources.files("doorloop").joinpath(f"data/{path}.yaml")
        if res.is_file():
            return parse_suite(res.read_text(), f"{path}.yaml")
    try:
        text = p.read_text()
    except OSError as exc:
        raise SuiteParseError(f"cannot read suite: {exc.strerror}", None, str(path)) from None
    return parse_suite(text, str(path))


def door_to_dict(door: DoorSpec) -> dict:
    def plain(v):
        if isinstance(v, tuple):
            return [plain(x) for x in v]
        if hasattr(v, "value"):
            return v.value
        return v

    out = {}
    for f in dataclasses.fields(door):
        v = getattr(door, f.name)
        if f.name == "handle":
            out["handle"] = {g.name: plain(getattr(v, g.name)) for g in dataclasses.fields(v)}
        else:
            out[f.name] = plain(v)
    return out


def dump_suite(doors: list[DoorSpec]) -> str:
    return yaml.safe_dump_all([door_to_dict(d) for d in doors], sort_keys=False, default_flow_style=None)


def door_digest(door: DoorSpec) -> str:
    blob = json.dumps(door_to_dict(door), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# --------------------------------------------------------------------------
# handle builders (pixel geometry in the door camera image)


def make_lever(axis_px, length_px: float, direction: UnlockDirection, *, thickness_px: float = 14.0,
               points_left: bool = False, unlock_angle_rad: float = 0.7, slack_rad: float = 0.05,
               capture_px: float = 6.0) -> HandleSpec:
    """Horizontal lever bar from the rotation axis; graspable on its outer half."""
    au, av = axis_px
    L, h = length_px, thickness_px
    anchor = (au - L, av - h / 2) if points_left else (au, av - h / 2)
    s = -1.0 if points_left else 1.0
    vc = math.ceil(av - h / 2) + (math.ceil(h) - 1) / 2.0  # centerline row of the bar pixels
    tip = au + s * (L - 1)
    return HandleSpec(HandleType.LEVER, anchor, (L, h), (au, av), direction,
                      (L - 1) * PITCH, unlock_angle_rad, slack_rad,
                      (((au + s * 0.5 * L, vc), (tip, vc)),), capture_px)


def make_knob(center_px, radius_m: float, direction: UnlockDirection, *, unlock_angle_rad: float = 0.9,
              slack_rad: float = 0.05, capture_px: float = 5.0) -> HandleSpec:
    cu, cv = center_px
    d = 2.0 * radius_m / PITCH
    return HandleSpec(HandleType.KNOB, (cu - d / 2, cv - d / 2), (d, d), (cu, cv), direction,
                      radius_m, unlock_angle_rad, slack_rad, (((cu, cv), (cu, cv)),), capture_px)


def make_crossbar(anchor_px, width_px: float, height_px: float, *, capture_px: float = 6.0) -> HandleSpec:
    """C-shaped push bar: top bar with two legs hanging down.  Graspable along all three centerlines.

    The rotation axis is put at the bottom of the left leg; it only serves as
    the reference point for picking a grasp far from the mount.
    """
    au, av = anchor_px
    W, H, t = width_px, height_px, CROSSBAR_BAR_PX
    u0, v0 = math.ceil(au), math.ceil(av)
    u1 = math.ceil(au + W) - 1
    v1 = math.ceil(av + H) - 1
    top = v0 + (t - 1) / 2.0
    left = u0 + (t - 1) / 2.0
    right = u1 - (t - 1) / 2.0
    region = (((left, top), (right, top)), ((left, top), (left, v1)), ((right, top), (right, v1)))
    return HandleSpec(HandleType.CROSSBAR, (au, av), (W, H), (au, av + H), UnlockDirection.NONE,
                      0.0, 0.5, 0.05, region, capture_px)


def make_cabinet(center_px, width_px: float, height_px: float = 12.0, *, capture_px: float = 5.0) -> HandleSpec:
    cu, cv = center_px
    au, av = cu - width_px / 2, cv - height_px / 2
    u0, u1 = math.ceil(au), math.ceil(au + width_px) - 1
    vc = math.ceil(av) + (math.ceil(av + height_px) - math.ceil(av) - 1) / 2.0
    return HandleSpec(HandleType.CABINET, (au, av), (width_px, height_px), (cu, cv), UnlockDirection.NONE,
                      0.0, 0.5, 0.05, (((u0 + 3.0, vc), (u1 - 3.0, vc)),), capture_px)


def make_door(door_id: str, handle: HandleSpec, *, swing: Swing, hinge_side: HingeSide = HingeSide.LEFT,
              origin=(3.0, 0.0, 1.0), normal=(-1.0, 0.0, 0.0), width_m: float = 0.9, height_m: float = 2.0,
              max_open_angle_rad: float = math.pi / 2, locked: bool = False, noise_sigma_m: float = 0.002,
              outlier_fraction: float = 0.1, max_extension_m: float = 0.0) -> DoorSpec:
    n = np.asarray(normal, dtype=float)
    n = tuple(float(c) for c in n / np.linalg.norm(n))
    door = DoorSpec(door_id, handle, swing, hinge_side, max_open_angle_rad, locked,
                    tuple(float(c) for c in origin), n, width_m, height_m, noise_sigma_m,
                    outlier_fraction, max_extension_m)
    door.validate()
    return door


def _heading_normal(angle: float) -> tuple[float, float, float]:
    return (math.cos(angle), math.sin(angle), 0.0)


def gen_suite(n: int, seed: int, *, locked_fraction: float = 0.0,
              types: tuple[HandleType, ...] = tuple(HandleType)) -> list[DoorSpec]:
    """Random doors for fuzzing.  Handle geometry, physics and placement vary."""
    rng = np.random.default_rng(seed)
    doors = []
    for i in range(n):
        kind = types[int(rng.integers(len(types)))]
        locked = bool(rng.uniform() < locked_fraction) and kind in (HandleType.LEVER, HandleType.KNOB)
        hinge = HingeSide.LEFT if rng.uniform() < 0.5 else HingeSide.RIGHT
        free_u = 320 + (1 if hinge is HingeSide.LEFT else -1) * rng.uniform(120, 190)
        v = 240 + rng.uniform(-60, 60)
        unlock = float(rng.uniform(0.4, 1.0))
        slack = float(rng.uniform(0.02, 0.1))
        direction = UnlockDirection.NONE if locked else [UnlockDirection.CW, UnlockDirection.CCW,
                                                          UnlockDirection.EITHER][int(rng.integers(3))]
        swing = Swing.PUSH if rng.uniform() < 0.5 else Swing.PULL
        kw = {}
        if kind is HandleType.LEVER:
            if direction is UnlockDirection.EITHER:
                direction = UnlockDirection.CW
            handle = make_lever((free_u, v), rng.uniform(45, 75), direction,
                                points_left=hinge is HingeSide.LEFT, unlock_angle_rad=unlock, slack_rad=slack)
        elif kind is HandleType.KNOB:
            handle = make_knob((free_u, v), rng.uniform(0.02, 0.035), direction,
                               unlock_angle_rad=unlock, slack_rad=slack)
        elif kind is HandleType.CROSSBAR:
            w = rng.uniform(110, 170)
            handle = make_crossbar((320 - w / 2, v - 30), w, rng.uniform(50, 80))
        else:
            if rng.uniform() < 0.5:
                swing = Swing.SLIDE
                handle = make_cabinet((320, 240 + rng.uniform(-20, 20)), rng.uniform(60, 110))
                kw = dict(width_m=rng.uniform(0.4, 0.7), height_m=rng.uniform(0.2, 0.35),
                          max_extension_m=rng.uniform(0.25, 0.45))
            else:
                handle = make_cabinet((free_u * 0.6 + 320 * 0.4, v), rng.uniform(40, 80))
                kw = dict(width_m=rng.uniform(0.45, 0.7), height_m=rng.uniform(0.6, 0.9))
        angle = rng.uniform(-math.pi, math.pi)
        dist = rng.uniform(2.0, 4.0)
        origin = (-dist * math.cos(angle), -dist * math.sin(angle), float(rng.uniform(0.85, 1.15)))
        doors.append(make_door(
            f"gen{seed}-{i:04d}", handle, swing=swing, hinge_side=hinge, origin=origin,
            normal=_heading_normal(angle), locked=locked,
            max_open_angle_rad=float(rng.uniform(math.pi / 2, 2.0)),
            noise_sigma_m=float(rng.uniform(0.0005, 0.003)),
            outlier_fraction=float(rng.uniform(0.0, 0.35)), **kw))
    return doors
