"""Enumerations shared across the control stack.

The rotation-sign convention lives here and nowhere else: a positive
rotation parameter means counter-clockwise as seen from the robot.
"""
from __future__ import annotations

import enum


class HandleType(str, enum.Enum):
    LEVER = "lever"
    KNOB = "knob"
    CROSSBAR = "crossbar"
    CABINET = "cabinet"


class UnlockDirection(str, enum.Enum):
    CW = "cw"
    CCW = "ccw"
    EITHER = "either"
    NONE = "none"


class Swing(str, enum.Enum):
    PUSH = "push"
    PULL = "pull"
    SLIDE = "slide"


class HingeSide(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


class Resistance(str, enum.Enum):
    HIGH = "high"
    LOW = "low"


class PrimitiveId(str, enum.Enum):
    APPROACH = "approach"
    GRASP = "grasp"
    UNLOCK_LEVER = "unlock_lever"
    UNLOCK_KNOB = "unlock_knob"
    OPEN = "open"
    TRAVERSE = "traverse"


class ErrorCode(str, enum.Enum):
    GRASP_IK_FAIL = "GRASP_IK_FAIL"
    GRASP_MISS = "GRASP_MISS"
    UNLOCK_MISS = "UNLOCK_MISS"
    UNLOCK_COLLISION = "UNLOCK_COLLISION"
    OPEN_MISS = "OPEN_MISS"
    OPEN_COLLISION = "OPEN_COLLISION"


SUCCESS = "SUCCESS"

# sign(R) > 0 <=> CCW.  Handle angles use the same sign.
CCW_SIGN = 1.0


def sign_for_direction(direction: UnlockDirection) -> float:
    """Rotation sign that turns a handle in ``direction``.

    ``EITHER`` and ``NONE`` have no preferred sense and map to CCW.
    """
    if direction is UnlockDirection.CW:
        return -CCW_SIGN
    return CCW_SIGN


def direction_for_sign(value: float) -> UnlockDirection:
    if value == 0:
        return UnlockDirection.NONE
    return UnlockDirection.CCW if value * CCW_SIGN > 0 else UnlockDirection.CW


ROTATING_HANDLES = frozenset({HandleType.LEVER, HandleType.KNOB})
