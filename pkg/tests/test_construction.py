import dataclasses
import pytest

from flatdenjoy import construction as C
from flatdenjoy import rotation as R
from flatdenjoy.circle_core import (IntervalOnCircle, cj_distance, flat_set, rotation_map,
                                    tangency_order)
from flatdenjoy.errors import HitBudgetExceeded, LengthTooSmall, PreconditionError

from .conftest import EPS, L0

G = float(R.GOLDEN)


def brute_hit(t, J, U, limit):
    """Smallest m with the rotated copy of J meeting U, by direct simulation."""
    w = J[1] - J[0]
    for m in range(1, limit + 1):
        a = (J[0] + m * t) % 1.0
        if a < U[1] and a + w > U[0] or a + w > 1.0 + U[0]:
            return m
    return None


def test_init_accepts_reference_parameters(stage0):
    assert 4 * EPS < L0
    comps = flat_set(stage0.map)
    assert len(comps) == 1 and float(comps[0].length) == pytest.approx(L0, abs=1e-12)
    assert tangency_order(stage0.map, float(stage0.U.a), "left") == 2
    assert tangency_order(stage0.map, float(stage0.U.b), "right") == 2
    assert stage0.schedule == (1,)


def test_init_rejects_short_length():
    with pytest.raises(LengthTooSmall):
        C.init_stage0(0.2, R.GOLDEN, 0.75)


def test_initial_interval_is_middle_third_of_preimage(stage0):
    M, U = stage0.map, stage0.U
    I = stage0.I
    w = float(I.length)
    # the outer thirds map into the landing window too
    lo, hi = float(U.b) - EPS, float(U.b)
    for x in (float(I.a) - w, float(I.b) + w):
        y = M.program(x) % 1.0
        assert lo - 1e-12 <= y <= hi + 1e-12
    assert w > 0


def test_stage0_conditions_pass(stage0):
    rep = C.verify_conditions(stage0)
    assert rep.ok, rep.failed()


def test_planted_interval_in_U_fails_condition_10(stage0):
    a = float(stage0.U.a)
    bad = dataclasses.replace(stage0, I=IntervalOnCircle(a + 0.1, a + 0.11))
    rep = C.verify_conditions(bad)
    # inside the flat interval the image also degenerates, so 9 fails as well
    assert 10 in rep.failed() and set(rep.failed()) <= {9, 10}
    assert "j=0" in rep[10].note


@pytest.mark.parametrize("J,U", [((0.0, 0.01), (0.5, 0.6)), ((0.3, 0.32), (0.9, 0.95)),
                                 ((0.7, 0.701), (0.1, 0.105))])
def test_find_hit_time_against_simulation(J, U):
    M = rotation_map(G)
    m, side = C.find_hit_time(M, IntervalOnCircle(*J), IntervalOnCircle(*U), 1000)
    assert m == brute_hit(G, J, U, 1000)
    assert side in ("left", "right")


def test_find_hit_time_preconditions():
    M = rotation_map(G)
    with pytest.raises(PreconditionError):
        C.find_hit_time(M, IntervalOnCircle(0.52, 0.53), IntervalOnCircle(0.5, 0.6), 100)
    with pytest.raises(PreconditionError):
        C.find_hit_time(M, IntervalOnCircle(0.0, 0.01), IntervalOnCircle(0.5, 0.6), 0)
    with pytest.raises(HitBudgetExceeded, match="M_max"):
        C.find_hit_time(M, IntervalOnCircle(0.0, 0.01), IntervalOnCircle(0.5, 0.6), 1)


def test_default_hit_budget():
    assert C.default_hit_budget(R.GOLDEN) == 4 * 75025


def test_order_tables():
    assert C.table_orders(0) == (2, 2)
    assert C.table_orders(1) == (2, 4)
    assert C.table_orders(2) == (4, 4)
    assert C.table_orders(3, anchored=True) == (None, 5)
    assert [C.lemma_order(n) for n in range(4)] == [3, 3, 5, 5]


def test_telescoped_lengths():
    assert C.telescoped_length(L0, EPS, 1) == pytest.approx(0.396447, abs=1e-6)
    assert C.telescoped_length(L0, EPS, 4) == pytest.approx(0.75 - 3.75 * EPS, abs=1e-15)
    assert L0 - 4 * EPS == pytest.approx(0.042893, abs=1e-6)


def test_k4_run_geometry(k4_run):
    S = k4_run["final"]
    assert float(S.U.length) == pytest.approx(0.087087, abs=1e-6)
    assert float(S.U.length) == pytest.approx(0.75 - 3.75 * EPS, abs=1e-12)
    sched = S.schedule
    assert sched[0] == 1 and all(x < y for x, y in zip(sched, sched[1:]))
    hits = [b.hit_time for b in S.budgets]
    assert [y - x for x, y in zip(sched, sched[1:])] == hits


def test_k4_every_stage_passes(k4_run):
    for rep in k4_run["reports"]:
        assert rep.ok, (rep.stage, rep.failed())
    rep3 = k4_run["reports"][3]
    # discrete conditions match exactly; measured ones keep a positive margin
    assert all(rep3[i].margin == 0 for i in (1, 3, 4, 5))
    assert all(rep3[i].margin > 0 for i in (2, 6, 7, 8, 9, 10))


def test_k4_first_step_budget(k4_run):
    s0, s1 = k4_run["states"][:2]
    assert float(cj_distance(s1.map, s0.map, 1)) <= 0.5


def test_k4_certificate(k4_run):
    cert = k4_run["cert"]
    assert cert.ok
    assert cert.limit_length == pytest.approx(0.75 - 4 * EPS)
    assert all(0.0 < L < bound for _, _, L, bound in cert.decay)
    assert all(norm <= bound for _, norm, bound in cert.cauchy)
    js = [row[0] for row in cert.decay]
    assert js == list(range(cert.schedule[0], cert.schedule[-1]))


def test_k4_orbit_avoids_final_flat_interval(k4_run):
    S = k4_run["final"]
    images = C.iterate_interval(S.map, S.I, S.r)
    assert not S.I.intersects(S.U)
    assert not any(J.intersects(S.U) for J in images[:-1])
    assert all(float(J.length) > 0 for J in images)


def test_run_rejects_zero_stages():
    with pytest.raises(PreconditionError):
        C.run(0)
