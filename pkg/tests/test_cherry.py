import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatdenjoy import cherry as Ch
from flatdenjoy import rotation as R
from flatdenjoy.circle_core import eval_lift, rotation_map
from flatdenjoy.errors import PreconditionError

G = float(R.GOLDEN)


def brute_hausdorff(u, v):
    d = np.abs(np.subtract.outer(np.asarray(u) % 1.0, np.asarray(v) % 1.0))
    d = np.minimum(d, 1.0 - d)
    return max(d.min(axis=1).max(), d.min(axis=0).max())


@settings(max_examples=40, deadline=None)
@given(u=st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=30),
       v=st.lists(st.floats(0, 1, exclude_max=True), min_size=1, max_size=30))
def test_hausdorff_matches_pairwise(u, v):
    assert Ch.hausdorff(u, v) == pytest.approx(brute_hausdorff(u, v), abs=1e-15)


def test_classify_inside_flat_interval(stage0):
    c = Ch.classify_point(stage0.map, 0.5, 100)
    assert c.tag == "SinkBound" and c.j == 0 and str(c) == "SinkBound(0)"


def test_classify_boundary_is_not_sink(stage0):
    c = Ch.classify_point(stage0.map, float(stage0.U.a), 1)
    assert c.tag != "SinkBound"


def test_classify_rotation_orbits():
    M = rotation_map(G)
    assert Ch.classify_point(M, 0.1, 200).tag == "Unresolved"
    assert str(Ch.classify_point(M, 0.1, 200)) == "Unresolved(200)"
    assert Ch.classify_point(M, 0.1, 40_000).tag == "AttractorCandidate"
    with pytest.raises(PreconditionError):
        Ch.classify_point(M, 0.1, 0)


def test_sink_entry_step_matches_orbit(stage0):
    M = stage0.map
    x = 0.05
    c = Ch.classify_point(M, x, 100)
    assert c.tag == "SinkBound"
    y = x
    for _ in range(c.j):
        y = eval_lift(M, y)
    a, b = float(stage0.U.a), float(stage0.U.b)
    assert a < y % 1.0 < b


def test_basin_fraction_and_half_width(stage0):
    rep = Ch.basin_estimate(stage0.map, 400, 200, seed=3)
    assert 0.0 < rep.sink <= 1.0
    assert rep.sink + rep.attractor + rep.unresolved == pytest.approx(1.0)
    assert rep.half_width == pytest.approx(1.959964 * np.sqrt(rep.sink * (1 - rep.sink) / 400),
                                           rel=1e-6)
    again = Ch.basin_estimate(stage0.map, 400, 200, seed=3)
    assert again == rep
    with pytest.raises(PreconditionError):
        Ch.basin_estimate(stage0.map, 10, 200, seed=3)


def test_basin_on_certificate_map(k4_run):
    S = k4_run["final"]
    rep = Ch.basin_estimate(S.map, 1000, S.r, seed=0, I=S.I)
    assert 0.0 < rep.sink < 1.0
    assert rep.I_probes == 5


def test_preimage_endpoints(stage0):
    M = stage0.map
    a, b = 0.3, 0.4
    xa, xb, flagged = Ch.preimage(M, a, b)
    for x, c in ((xa, a), (xb, b)):
        d = eval_lift(M, x) - c
        assert abs(d - round(d)) <= 1e-12
    assert flagged == []


def test_gap_cover_grows(stage0):
    lengths = [Ch.gap_cover(stage0.map, d).length for d in range(6)]
    assert lengths[0] == pytest.approx(float(stage0.U.length))
    assert all(x <= y for x, y in zip(lengths, lengths[1:]))


def test_gap_cover_complement_partitions_circle(k4_run):
    cover = Ch.gap_cover(k4_run["map"], 5)
    rest = sum(b - a for a, b in cover.complement())
    assert cover.length + rest == pytest.approx(1.0, abs=1e-12)
    lengths = [Ch.gap_cover(k4_run["map"], d).length for d in range(6)]
    assert all(x < y for x, y in zip(lengths, lengths[1:]))


def test_gap_cover_needs_one_flat_interval():
    with pytest.raises(PreconditionError):
        Ch.gap_cover(rotation_map(G), 3)


def test_merge_wraps_through_zero():
    assert Ch._merge([(0.9, 1.1), (0.05, 0.2)]) == [(0.9, 1.2)]
    assert Ch._merge([(0.1, 0.2), (0.15, 0.3), (0.5, 0.6)]) == [(0.1, 0.3), (0.5, 0.6)]


def test_suspension_trace_of_rotation():
    M = rotation_map(0.25)
    tr = Ch.suspension_trace(M, 0.1, 3, samples=4)
    assert len(tr.x) == 3 * 5
    first = tr.x[:5]
    assert np.allclose(first, 0.1 + 0.25 * np.linspace(0, 1, 5))
    # each period starts where the previous ended
    assert tr.x[5] == pytest.approx(tr.x[4])
    assert tr.duration == 3.0


def test_csv_exports_carry_hash(stage0):
    rep = Ch.basin_estimate(stage0.map, 100, 50, seed=0)
    text = Ch.basin_csv(rep, "abc")
    assert text.splitlines()[0] == "# config abc"
    assert text.splitlines()[1] == "key,value"
    cover = Ch.gap_cover(stage0.map, 2)
    assert Ch.gap_cover_csv(cover, "abc").count("\n") == 2 + 3
