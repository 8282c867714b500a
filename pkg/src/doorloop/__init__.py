"""Haptic-feedback closed-loop door opening: simulation, control stack and experiment harness."""
from .common import (CCW_SIGN, ErrorCode, HandleType, HingeSide, PrimitiveId, Resistance, Swing,
                     UnlockDirection)
from .config import Config, default_config, load_config
from .planner import EpisodeRecord, PlannerState, next_state, run_episode
from .suite import load_suite
from .world import DoorSpec, HandleSpec, World

__all__ = [
    "CCW_SIGN", "Config", "DoorSpec", "EpisodeRecord", "ErrorCode", "HandleSpec", "HandleType", "HingeSide",
    "PlannerState", "PrimitiveId", "Resistance", "Swing", "UnlockDirection", "World", "default_config",
    "load_config", "load_suite", "next_state", "run_episode",
]
