"""High-level state machine.

States are clustered by primitive.  The table maps (state, result,
handle type) to the next state and carries a provenance mark per row:
``paper`` for rows fixed by the source description, ``inferred`` for rows
chosen here, ``unreachable`` for combinations a primitive can never emit
(they map to Failed so the lookup is total).
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .common import SUCCESS, ErrorCode, HandleType, PrimitiveId, Swing
from .config import Config
from .primitives import EpisodeContext, FaultInjection, PrimitiveOutcome, run_primitive
from .world import DoorSpec, World


class PlannerState(str, enum.Enum):
    START = "Start"
    APPROACH = "Approach"
    GRASP = "Grasp"
    UNLOCK_LEVER = "UnlockLever"
    UNLOCK_KNOB = "UnlockKnob"
    OPEN = "Open"
    TRAVERSE = "Traverse"
    DONE = "Done"
    FAILED = "Failed"


ABSORBING = frozenset({PlannerState.DONE, PlannerState.FAILED})
RESULTS = (SUCCESS, *(e.value for e in ErrorCode))

STATE_PRIMITIVE = {
    PlannerState.APPROACH: PrimitiveId.APPROACH,
    PlannerState.GRASP: PrimitiveId.GRASP,
    PlannerState.UNLOCK_LEVER: PrimitiveId.UNLOCK_LEVER,
    PlannerState.UNLOCK_KNOB: PrimitiveId.UNLOCK_KNOB,
    PlannerState.OPEN: PrimitiveId.OPEN,
    PlannerState.TRAVERSE: PrimitiveId.TRAVERSE,
}

# results each state's primitive can produce
_EMITS = {
    PlannerState.START: (SUCCESS,),
    PlannerState.APPROACH: (SUCCESS,),
    PlannerState.GRASP: (SUCCESS, ErrorCode.GRASP_IK_FAIL, ErrorCode.GRASP_MISS),
    PlannerState.UNLOCK_LEVER: (SUCCESS, ErrorCode.UNLOCK_MISS, ErrorCode.UNLOCK_COLLISION),
    PlannerState.UNLOCK_KNOB: (SUCCESS, ErrorCode.UNLOCK_MISS, ErrorCode.UNLOCK_COLLISION),
    PlannerState.OPEN: (SUCCESS, ErrorCode.OPEN_MISS, ErrorCode.OPEN_COLLISION),
    PlannerState.TRAVERSE: (SUCCESS,),
}

_ERROR_ROWS = {
    ErrorCode.GRASP_IK_FAIL: (PlannerState.APPROACH, "paper"),
    ErrorCode.GRASP_MISS: (PlannerState.APPROACH, "paper"),
    ErrorCode.UNLOCK_MISS: (PlannerState.GRASP, "inferred"),
    ErrorCode.UNLOCK_COLLISION: (PlannerState.APPROACH, "inferred"),
    ErrorCode.OPEN_MISS: (PlannerState.APPROACH, "paper"),
    ErrorCode.OPEN_COLLISION: (PlannerState.GRASP, "paper"),
}


@dataclass(frozen=True)
class Transition:
    state: PlannerState
    result: str
    handle_type: HandleType
    next_state: PlannerState
    provenance: str


def _after_grasp(handle_type: HandleType) -> tuple[PlannerState, str]:
    if handle_type is HandleType.LEVER:
        return PlannerState.UNLOCK_LEVER, "paper"
    if handle_type is HandleType.KNOB:
        return PlannerState.UNLOCK_KNOB, "paper"
    return PlannerState.OPEN, "inferred"


def _reachable(state: PlannerState, result: str, handle_type: HandleType) -> bool:
    if result not in _EMITS[state]:
        return False
    if state is PlannerState.UNLOCK_LEVER:
        return handle_type is HandleType.LEVER
    if state is PlannerState.UNLOCK_KNOB:
        return handle_type is HandleType.KNOB
    return True


def _row(state: PlannerState, result: str, handle_type: HandleType) -> Transition:
    if not _reachable(state, result, handle_type):
        return Transition(state, result, handle_type, PlannerState.FAILED, "unreachable")
    if result == SUCCESS:
        nxt, prov = {
            PlannerState.START: (PlannerState.APPROACH, "paper"),
            PlannerState.APPROACH: (PlannerState.GRASP, "paper"),
            PlannerState.UNLOCK_LEVER: (PlannerState.OPEN, "paper"),
            PlannerState.UNLOCK_KNOB: (PlannerState.OPEN, "paper"),
            PlannerState.OPEN: (PlannerState.TRAVERSE, "paper"),
            PlannerState.TRAVERSE: (PlannerState.DONE, "paper"),
        }.get(state) or _after_grasp(handle_type)
        return Transition(state, result, handle_type, nxt, prov)
    nxt, prov = _ERROR_ROWS[ErrorCode(result)]
    return Transition(state, result, handle_type, nxt, prov)


TRANSITIONS: dict[tuple[PlannerState, str, HandleType], Transition] = {
    (s, r, h): _row(s, r, h)
    for s in PlannerState if s not in ABSORBING
    for r in RESULTS
    for h in HandleType
}


def next_state(current: PlannerState, outcome: PrimitiveOutcome | str, handle_type: HandleType) -> PlannerState:
    """Pure table lookup.  Absorbing states map to themselves."""
    if current in ABSORBING:
        return current
    result = _result_str(outcome.result if isinstance(outcome, PrimitiveOutcome) else outcome)
    return TRANSITIONS[(current, result, handle_type)].next_state


def dump_transitions(include_unreachable: bool = False) -> str:
    lines = []
    for t in TRANSITIONS.values():
        if t.provenance == "unreachable" and not include_unreachable:
            continue
        lines.append(f"{t.state.value:<12} {t.result:<17} {t.handle_type.value:<9} -> "
                     f"{t.next_state.value:<12} [{t.provenance}]")
    return "\n".join(lines) + "\n"


def max_episode_steps(cfg: Config) -> int:
    """Upper bound on world steps in one episode.

    Every error spends one unit of some state's retry budget, and between two
    errors the chain runs at most once through all six primitives.
    """
    errors = sum(b + 1 for b in cfg.planner.retry_budget.values())
    return (errors + 1) * sum(cfg.primitives.step_budget.values())


# --------------------------------------------------------------------------
# episodes


@dataclass
class OutcomeRecord:
    state: str
    primitive: str
    result: str
    next_state: str
    duration_steps: int
    telemetry: dict
    events: list[dict]


@dataclass
class EpisodeRecord:
    door_id: str
    seed: list[int]
    method: str
    success: bool
    state_sequence: list[str]
    outcomes: list[OutcomeRecord]
    final_door_angle_rad: float
    final_extension_m: float
    wall_steps: int
    failure_reason: str | None = None
    injections: list[list] = field(default_factory=list)
    door_digest: str = ""
    config_digest: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=1, default=_jsonable)

    @classmethod
    def from_dict(cls, raw: dict) -> "EpisodeRecord":
        raw = dict(raw)
        raw["outcomes"] = [OutcomeRecord(**o) for o in raw["outcomes"]]
        return cls(**raw)


def _result_str(result) -> str:
    return result.value if isinstance(result, ErrorCode) else str(result)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, enum.Enum):
        return obj.value
    raise TypeError(f"not serializable: {type(obj).__name__}")


def run_episode(door: DoorSpec, seed, cfg: Config, ctx: EpisodeContext | None = None, *,
                method: str = "closed-oracle",
                injections: tuple[FaultInjection, ...] = (), keep_traces: bool = False):
    """Run the state machine to Done or Failed.

    ``ctx`` supplies the world, perception model and random streams; the
    harness builds it from ``seed``.  Returns the :class:`EpisodeRecord`, or
    ``(record, outcomes)`` when ``keep_traces`` is set.
    """
    if ctx is None:
        from .harness import build_context
        ctx = build_context(door, seed, cfg, method)
    ctx.injections = list(injections)
    open_loop = not ctx.adaptive
    world: World = ctx.world
    handle_type = door.handle.handle_type
    retries = dict(cfg.planner.retry_budget)
    state = next_state(PlannerState.START, SUCCESS, handle_type)
    sequence: list[str] = []
    records: list[OutcomeRecord] = []
    outcomes: list[PrimitiveOutcome] = []
    reason = None
    while state not in ABSORBING:
        pid = STATE_PRIMITIVE[state]
        sequence.append(state.value)
        outcome = run_primitive(pid, ctx)
        nxt = next_state(state, outcome, handle_type)
        if outcome.hazard:
            nxt, reason = PlannerState.FAILED, f"hazard during {pid.value}"
        elif not outcome.ok:
            if open_loop:
                nxt, reason = PlannerState.FAILED, f"{outcome.result} (open loop halts)"
            else:
                retries[pid.value] -= 1
                if retries[pid.value] < 0:
                    nxt, reason = PlannerState.FAILED, f"{outcome.result} after retry budget"
        records.append(OutcomeRecord(
            state=state.value, primitive=pid.value, result=_result_str(outcome.result),
            next_state=nxt.value, duration_steps=outcome.duration_steps,
            telemetry=outcome.telemetry,
            events=[{"kind": e.kind.value, "t_s": e.t_s, "evidence_A": e.evidence_A} for e in outcome.events],
        ))
        if keep_traces:
            outcomes.append(outcome)
        state = nxt
    sequence.append(state.value)
    success = world.is_open()
    record = EpisodeRecord(
        door_id=door.id,
        seed=list(seed) if isinstance(seed, (list, tuple)) else [int(seed)],
        method=method,
        success=bool(success),
        state_sequence=sequence,
        outcomes=records,
        final_door_angle_rad=float(world.door.door_angle_rad),
        final_extension_m=float(world.door.extension_m),
        wall_steps=int(world.steps),
        failure_reason=reason,
        injections=[[i.code.value, i.occurrence] for i in injections],
    )
    return (record, outcomes) if keep_traces else record


def swing_truth(door: DoorSpec) -> Swing:
    """Swing the probe should report: drawers follow a pull."""
    return Swing.PULL if door.swing is Swing.SLIDE else door.swing
