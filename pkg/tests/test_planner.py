import json

import pytest
from hypothesis import given, settings, strategies as st

from doorloop.common import SUCCESS, ErrorCode, HandleType, Swing, UnlockDirection
from doorloop.config import default_config
from doorloop.harness import build_context, episode
from doorloop.planner import (ABSORBING, RESULTS, TRANSITIONS, EpisodeRecord, PlannerState, dump_transitions,
                              max_episode_steps, next_state, run_episode)
from doorloop.primitives import FaultInjection

from conftest import lever_door

LIVE = [s for s in PlannerState if s not in ABSORBING]


def test_table_is_total():
    assert len(TRANSITIONS) == len(LIVE) * len(RESULTS) * len(HandleType)
    for s in LIVE:
        for r in RESULTS:
            for h in HandleType:
                assert (s, r, h) in TRANSITIONS


@given(st.sampled_from(list(PlannerState)), st.sampled_from(RESULTS), st.sampled_from(list(HandleType)))
def test_next_state_always_defined(state, result, ht):
    assert isinstance(next_state(state, result, ht), PlannerState)


def test_absorbing_states_stay():
    for s in ABSORBING:
        assert next_state(s, ErrorCode.GRASP_MISS.value, HandleType.LEVER) is s


@pytest.mark.parametrize("state,result,ht,expect", [
    (PlannerState.GRASP, "GRASP_MISS", HandleType.LEVER, PlannerState.APPROACH),
    (PlannerState.GRASP, "GRASP_IK_FAIL", HandleType.KNOB, PlannerState.APPROACH),
    (PlannerState.OPEN, "OPEN_COLLISION", HandleType.LEVER, PlannerState.GRASP),
    (PlannerState.OPEN, "OPEN_MISS", HandleType.CABINET, PlannerState.APPROACH),
    (PlannerState.UNLOCK_LEVER, "UNLOCK_MISS", HandleType.LEVER, PlannerState.GRASP),
    (PlannerState.UNLOCK_KNOB, "UNLOCK_COLLISION", HandleType.KNOB, PlannerState.APPROACH),
    (PlannerState.TRAVERSE, SUCCESS, HandleType.CROSSBAR, PlannerState.DONE),
    (PlannerState.GRASP, SUCCESS, HandleType.LEVER, PlannerState.UNLOCK_LEVER),
    (PlannerState.GRASP, SUCCESS, HandleType.KNOB, PlannerState.UNLOCK_KNOB),
    (PlannerState.GRASP, SUCCESS, HandleType.CROSSBAR, PlannerState.OPEN),
    (PlannerState.GRASP, SUCCESS, HandleType.CABINET, PlannerState.OPEN),
    (PlannerState.UNLOCK_LEVER, SUCCESS, HandleType.KNOB, PlannerState.FAILED),
])
def test_transition_rows(state, result, ht, expect):
    assert next_state(state, result, ht) is expect


def test_provenance_marks():
    t = TRANSITIONS
    assert t[(PlannerState.GRASP, "GRASP_MISS", HandleType.LEVER)].provenance == "paper"
    assert t[(PlannerState.OPEN, "OPEN_COLLISION", HandleType.KNOB)].provenance == "paper"
    assert t[(PlannerState.UNLOCK_LEVER, "UNLOCK_MISS", HandleType.LEVER)].provenance == "inferred"
    assert t[(PlannerState.UNLOCK_KNOB, "UNLOCK_COLLISION", HandleType.KNOB)].provenance == "inferred"
    assert t[(PlannerState.APPROACH, "OPEN_MISS", HandleType.LEVER)].provenance == "unreachable"


def test_dump_lists_reachable_rows():
    text = dump_transitions()
    assert "unreachable" not in text
    assert "Grasp        GRASP_MISS        lever     -> Approach     [paper]" in text
    full = dump_transitions(include_unreachable=True)
    assert len(full.splitlines()) == len(TRANSITIONS)


def test_max_steps_formula():
    cfg = default_config()
    budget = sum(cfg.primitives.step_budget.values())
    assert max_episode_steps(cfg) == (6 * 4 + 1) * budget


def test_lever_pull_door_regular_chain(cfg):
    rec = episode(lever_door(swing=Swing.PULL), [0, 0, 0], cfg, "closed-oracle")
    assert rec.success
    assert rec.state_sequence == ["Approach", "Grasp", "UnlockLever", "Open", "Traverse", "Done"]


def test_grasp_miss_recovers(cfg):
    rec = episode(lever_door(swing=Swing.PULL), [0, 0, 0], cfg, "closed-oracle",
                  (FaultInjection(ErrorCode.GRASP_MISS),))
    assert rec.success and rec.state_sequence[-1] == "Done"
    assert rec.state_sequence.count("Approach") == 2


def test_locked_door_exhausts_budget(cfg):
    rec = episode(lever_door(locked=True), [0, 0, 0], cfg, "closed-oracle")
    assert not rec.success and rec.state_sequence[-1] == "Failed"
    errs = [o.result for o in rec.outcomes if o.result != SUCCESS]
    assert errs == ["UNLOCK_COLLISION"] * (cfg.planner.retry_budget["unlock_lever"] + 1)
    assert "retry budget" in rec.failure_reason


def test_open_loop_halts_on_first_error(cfg):
    # draw 0.9 against accuracy 0.5: the direction guess is wrong
    door = lever_door()
    ctx = build_context(door, [0, 0, 0], cfg, "open-random")
    ctx.model.direction_draw = 0.9
    rec = run_episode(door, [0, 0, 0], cfg, ctx, method="open-random")
    assert rec.state_sequence[-1] == "Failed"
    assert sum(o.result != SUCCESS for o in rec.outcomes) == 1


def test_record_json_round_trip(cfg):
    rec = episode(lever_door(), [1, 2, 3], cfg, "closed-oracle")
    again = EpisodeRecord.from_dict(json.loads(rec.to_json()))
    assert again.to_json() == rec.to_json()
