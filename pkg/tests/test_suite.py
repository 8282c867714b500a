import math

import pytest

from doorloop.common import HandleType, Swing, UnlockDirection
from doorloop.suite import (SuiteParseError, door_digest, dump_suite, gen_suite, load_suite, make_knob,
                            parse_suite)

from conftest import lever_door


def test_field20_composition(field20):
    assert len(field20) == 20
    kinds = [d.handle.handle_type for d in field20]
    for ht in HandleType:
        assert kinds.count(ht) == 5
    assert len({d.id for d in field20}) == 20
    assert all(d.solvable for d in field20)


def test_dump_parse_round_trip(field20):
    again = parse_suite(dump_suite(field20))
    assert [door_digest(d) for d in again] == [door_digest(d) for d in field20]


def test_empty_suite():
    assert parse_suite("") == []


def _one_door_text():
    return dump_suite([lever_door()])


def test_unknown_field_reports_line():
    text = _one_door_text().replace("swing: pull", "swing: pull\ncolour: red")
    line = text.splitlines().index("colour: red") + 1
    with pytest.raises(SuiteParseError) as err:
        parse_suite(text, "x.yaml")
    assert err.value.line == line
    assert f"x.yaml:{line}" in str(err.value)


def test_bad_enum_reports_line():
    text = _one_door_text().replace("swing: pull", "swing: sideways")
    line = text.splitlines().index("swing: sideways") + 1
    with pytest.raises(SuiteParseError) as err:
        parse_suite(text)
    assert err.value.line == line


def test_missing_field():
    text = "\n".join(l for l in _one_door_text().splitlines() if not l.startswith("swing:"))
    with pytest.raises(SuiteParseError, match="missing field 'swing'"):
        parse_suite(text)


def test_duplicate_id():
    t = _one_door_text()
    with pytest.raises(SuiteParseError, match="duplicate"):
        parse_suite(t + "---\n" + t)


def test_yaml_syntax_error_has_line():
    with pytest.raises(SuiteParseError) as err:
        parse_suite("id: a\nhandle: [1, 2\n")
    assert err.value.line is not None


def test_validation_error():
    text = _one_door_text().replace("outlier_fraction: 0.1", "outlier_fraction: 0.7")
    with pytest.raises(SuiteParseError, match="outlier_fraction"):
        parse_suite(text)


def test_missing_file():
    with pytest.raises(SuiteParseError):
        load_suite("/nonexistent/suite.yaml")


def test_knob_builder_diameter():
    h = make_knob((320.0, 240.0), 0.03, UnlockDirection.CW)
    assert h.extent_px[0] == pytest.approx(2 * 0.03 * 525)


def test_gen_suite_is_seeded_and_valid():
    a, b = gen_suite(30, 5, locked_fraction=0.3), gen_suite(30, 5, locked_fraction=0.3)
    assert [door_digest(d) for d in a] == [door_digest(d) for d in b]
    for d in a:
        d.validate()
    assert any(d.locked for d in a)
    assert all(d.swing is Swing.SLIDE or d.max_open_angle_rad >= math.pi / 2 for d in a)
