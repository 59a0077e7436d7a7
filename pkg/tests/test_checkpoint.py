import pytest

from flatdenjoy import checkpoint as CK
from flatdenjoy import construction as C
from flatdenjoy.circle_core import eval_lift, to_text


def test_stage0_round_trip(stage0, tmp_path):
    side = CK.save(stage0, tmp_path, "h0")
    assert side.name == "stage_0.state"
    assert not (tmp_path / "stage_0.prev.map").exists()
    S = CK.load(side)
    assert S == stage0
    assert CK.load(tmp_path / "stage_0.map") == stage0


def test_round_trip_keeps_budgets_and_prev(k4_run, tmp_path):
    S = k4_run["states"][2]
    CK.save(S, tmp_path, "abc")
    T = CK.load(tmp_path / "stage_2.state")
    assert T.budgets == S.budgets
    assert to_text(T.map) == to_text(S.map)
    assert to_text(T.prev) == to_text(S.prev)
    assert eval_lift(T.map, 0.321) == eval_lift(S.map, 0.321)
    assert (tmp_path / "stage_2.state").read_text().startswith("# config abc\nstage/1\n")


def test_reloaded_state_verifies_the_same(k4_run, tmp_path):
    S = k4_run["states"][1]
    CK.save(S, tmp_path)
    T = CK.load(tmp_path / "stage_1.state")
    a, b = C.verify_conditions(S), C.verify_conditions(T)
    assert [c.passed for c in a.conditions] == [c.passed for c in b.conditions]
    assert [c.margin for c in a.conditions] == [c.margin for c in b.conditions]


def test_anchor_round_trip(tmp_path):
    S = C.init_stage0(0.05, 0.6180339887498949, 0.3, C.AnchorConfig(0.2, 0.5))
    CK.save(S, tmp_path)
    assert CK.load(tmp_path / "stage_0.state").anchor == C.AnchorConfig(0.2, 0.5)


def test_missing_header():
    with pytest.raises(ValueError):
        CK.parse_state("n 0\n", None)
