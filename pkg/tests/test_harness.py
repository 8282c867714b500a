import json
from fractions import Fraction

import pytest

from doorloop.cli import main
from doorloop.common import HandleType, UnlockDirection
from doorloop.harness import (ABLATION_SUBSET, ReplayMismatch, SuiteConfig, binomial_band, fuzz_episode,
                              openloop_expectation, replay, run_suite, table_csv, write_records)
from doorloop.planner import max_episode_steps
from doorloop.suite import dump_suite, load_suite, make_door, make_knob
from doorloop.common import Swing

from conftest import lever_door


def test_csv_accounting():
    res = run_suite(SuiteConfig(trials_per_door=2, door_ids=("lever-01", "knob-02", "cabinet-01")))
    rows = {r["handle_type"]: r for r in res.rows}
    assert rows["all"]["trials"] == 6
    assert rows["all"]["successes"] == sum(rows[k]["successes"] for k in ("lever", "knob", "cabinet"))
    assert all(r["rate"] == Fraction(r["successes"], r["trials"]) for r in res.rows)
    lines = res.to_csv().splitlines()
    assert lines[0] == "method,handle_type,successes,trials,rate"
    assert len(lines) == 5


def test_empty_table():
    assert table_csv([]) == "method,handle_type,successes,trials,rate\n"


def test_workers_do_not_change_results():
    sc = dict(trials_per_door=2, door_ids=("lever-01", "crossbar-02", "knob-03"))
    a = run_suite(SuiteConfig(parallel_workers=1, **sc))
    b = run_suite(SuiteConfig(parallel_workers=3, **sc))
    assert a.to_csv() == b.to_csv()
    assert [r.to_json() for r in a.records] == [r.to_json() for r in b.records]


def test_unknown_door_id():
    with pytest.raises(KeyError):
        run_suite(SuiteConfig(door_ids=("nope",)))


def test_openloop_expectations(field20):
    by = {d.id: d for d in field20}
    assert openloop_expectation(by["crossbar-01"]) == Fraction(1, 2)
    assert openloop_expectation(by["lever-01"]) == Fraction(1, 4)
    either = [d for d in field20 if d.handle.unlock_direction is UnlockDirection.EITHER]
    assert either and all(openloop_expectation(d) == Fraction(1, 2) for d in either)
    assert openloop_expectation(lever_door(locked=True)) == 0


def test_binomial_band():
    lo, hi = binomial_band(0.25, 200)
    assert hi - 0.25 == pytest.approx(3 * (0.25 * 0.75 / 200) ** 0.5)
    assert lo < 0.25 < hi


def test_ablation_subset_is_nonconvex_or_lever(field20):
    by = {d.id: d for d in field20}
    assert len(ABLATION_SUBSET) == 5
    assert {by[i].handle.handle_type for i in ABLATION_SUBSET} <= {HandleType.LEVER, HandleType.CROSSBAR}


def test_replay(tmp_path, cfg):
    res = run_suite(SuiteConfig(trials_per_door=1, door_ids=("lever-02",)))
    [path] = write_records(res.records, tmp_path)
    text = replay(path)
    assert text.rstrip().endswith("Done")
    assert "re-run: identical" in text
    stored = json.loads(path.read_text())
    assert stored["final_door_angle_rad"] == res.records[0].final_door_angle_rad


def test_replay_mismatched_suite(tmp_path, field20):
    res = run_suite(SuiteConfig(trials_per_door=1, door_ids=("lever-02",)))
    [path] = write_records(res.records, tmp_path)
    other = [d if d.id != "lever-02" else make_door("lever-02", make_knob((400.0, 240.0), 0.03,
                                                                          UnlockDirection.CW), swing=Swing.PULL)
             for d in field20]
    alt = tmp_path / "alt.yaml"
    alt.write_text(dump_suite(other))
    with pytest.raises(ReplayMismatch):
        replay(path, str(alt))


def test_fuzz_episodes_halt():
    for i in range(30):
        rec, bound = fuzz_episode(i, base_seed=99)
        assert rec.state_sequence[-1] in ("Done", "Failed")
        assert rec.wall_steps <= bound


# -- command line ---------------------------------------------------------


def test_cli_run_and_assert(capsys):
    assert main(["run", "--doors", "cabinet-01", "--trials", "1", "--assert"]) == 0
    assert capsys.readouterr().out.startswith("method,")
    assert main(["run", "--method", "closed-centroid", "--doors", "crossbar-01", "--trials", "1",
                 "--assert", "0.5"]) == 3


def test_cli_usage_error():
    assert main(["run", "--trials", "x"]) == 1
    assert main([]) == 1


def test_cli_parse_error(tmp_path):
    bad = tmp_path / "bad.yaml"
    bad.write_text("id: a\nbogus: 1\n")
    assert main(["run", "--suite", str(bad)]) == 2


def test_cli_empty_suite(tmp_path, capsys):
    empty = tmp_path / "empty.yaml"
    empty.write_text("")
    assert main(["run", "--suite", str(empty)]) == 0
    assert capsys.readouterr().out == "method,handle_type,successes,trials,rate\n"


def test_cli_dump_and_gen(tmp_path, capsys):
    assert main(["dump-transitions"]) == 0
    assert "[paper]" in capsys.readouterr().out
    out = tmp_path / "g.yaml"
    assert main(["gen-suite", "--n", "4", "--seed", "1", "--out", str(out)]) == 0
    assert len(load_suite(str(out))) == 4


def test_cli_replay_bad_record(tmp_path):
    p = tmp_path / "r.json"
    p.write_text("{}")
    assert main(["replay", str(p)]) == 2
