import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatdenjoy import expr as E
from flatdenjoy.circle_core import (CirclePoint, IntervalOnCircle, MapDescriptor, cj_distance,
                                    derivative, eval_lift, eval_many, flat, flat_set,
                                    from_text, image_interval, iterate_interval, rotation_map,
                                    smooth, tangency_order, to_text, validate)
from flatdenjoy.errors import (BreakpointNonSmooth, DegenerateOrbit, HiddenFlatRegion,
                               OrderMismatch)
from flatdenjoy.segments import Seg, from_segments


def junction4():
    """Flat at 0.2 on (0.1, 0.3), then h((x - 0.3)^4) with h(u) = 0.2 + u."""
    b, bp = 0.3, 0.2
    j = E.add(E.Const(bp), E.Mono(b, 4))
    end = bp + (0.8 - b) ** 4
    rest = E.add(E.Const(end), E.scale((1.2 - end) / 0.3, E.Affine(1.0, -0.8)))
    segs = [Seg(0.1, b, flat(bp), 1),
            Seg(b, 0.8, smooth(j, (4, None)), 4),
            Seg(0.8, 1.1, smooth(rest), 4)]
    return from_segments(segs)


def test_eval_rotation():
    assert eval_lift(rotation_map(0.25), 0.9) == pytest.approx(1.15)


def test_eval_flat_piece():
    M = MapDescriptor((0.0, 0.2, 0.5, 1.0),
                      (smooth(E.add(E.Const(0.7 - 0.2 * 0.2 / 0.2), E.Affine(1.0, 0.0))),
                       flat(0.7), smooth(E.Affine(1.0, 0.2))))
    assert eval_lift(M, 0.3) == pytest.approx(0.7)


def test_eval_stage0_against_dense_oracle(stage0):
    M = stage0.map
    xs = np.linspace(0.0, 1.0, 100_001)
    ys = eval_many(M, xs)
    assert np.all(np.diff(ys) >= -1e-12)
    # interpolation of the sampled monotone lift agrees with direct evaluation
    for x in (0.0, 0.3, 0.71234, 0.95):
        assert eval_lift(M, x) == pytest.approx(np.interp(x, xs, ys), abs=1e-4)


def test_derivative_examples():
    assert derivative(rotation_map(0.3), 1, 0.4) == pytest.approx(1.0)
    M = junction4()
    assert derivative(M, 7, 0.2) == 0.0
    for m, want in ((3, 0.0), (4, 24.0)):
        d = derivative(M, m, 0.3, side="right")
        assert d == pytest.approx(want, abs=1e-12)
        assert d == pytest.approx(forward_richardson(M, 0.3, m, 1e-3), abs=1e-5)


def forward_richardson(M, x, m, h):
    """One-sided m-th difference of the lift at high precision, one Richardson step."""
    with mpmath.workdps(60):
        def fwd(h):
            h = mpmath.mpf(h)
            return sum((-1) ** (m - j) * math.comb(m, j) * M.eval_mp(mpmath.mpf(x) + j * h)
                       for j in range(m + 1)) / h ** m
        return float(2 * fwd(h / 2) - fwd(h))


def test_derivative_at_breakpoint_needs_side(stage0):
    with pytest.raises(BreakpointNonSmooth):
        derivative(stage0.map, 2, float(stage0.U.b))


def test_image_interval():
    M = junction4()
    p = image_interval(M, IntervalOnCircle(0.15, 0.25))
    assert isinstance(p, CirclePoint) and p.length == 0.0
    R = rotation_map(0.3)
    J = image_interval(R, IntervalOnCircle(0.1, 0.2))
    assert float(J.a) == pytest.approx(0.4) and float(J.length) == pytest.approx(0.1)


def test_image_interval_matches_sampling(stage0):
    M, I = stage0.map, stage0.I
    J = image_interval(M, I)
    xs = np.linspace(float(I.a), float(I.b), 1000)
    ys = eval_many(M, xs)
    assert float(J.length) == pytest.approx(ys[-1] - ys[0], rel=1e-9)
    assert ys.min() >= eval_lift(M, float(I.a)) and ys.max() <= eval_lift(M, float(I.b))


def test_iterate_interval():
    R = rotation_map(0.3)
    imgs = iterate_interval(R, IntervalOnCircle(0.1, 0.15), 5)
    assert len(imgs) == 5
    assert all(float(K.length) == pytest.approx(0.05) for K in imgs)
    with pytest.raises(DegenerateOrbit) as exc:
        iterate_interval(junction4(), IntervalOnCircle(0.15, 0.25), 1)
    assert exc.value.j == 1


def test_cj_distance():
    M = junction4()
    assert float(cj_distance(M, M, 3)) == 0.0
    assert float(cj_distance(M.shifted(0.01), M, 0)) == pytest.approx(0.01)


def test_flat_set():
    assert flat_set(rotation_map(0.2)) == []
    comps = flat_set(junction4())
    assert len(comps) == 1
    assert float(comps[0].a) == pytest.approx(0.1) and float(comps[0].b) == pytest.approx(0.3)


def test_flat_set_stage0(stage0):
    comps = flat_set(stage0.map)
    assert len(comps) == 1
    assert float(comps[0].length) == pytest.approx(0.75, abs=1e-12)


def test_hidden_flat_region():
    M = MapDescriptor((0.0, 0.5, 1.0), (smooth(E.Const(0.3)), smooth(E.Affine(1.4, -0.4))))
    with pytest.raises(HiddenFlatRegion):
        flat_set(M)


def test_tangency_orders(stage0):
    assert tangency_order(stage0.map, float(stage0.U.b), "right") == 2
    assert tangency_order(stage0.map, float(stage0.U.a), "left") == 2
    assert tangency_order(junction4(), 0.3, "right") == 4


def test_tangency_mismatch():
    M = junction4()
    p = M.pieces[M.piece_index(0.5)]
    bad = MapDescriptor(M.breakpoints,
                        tuple(smooth(q.expr, (3, None)) if q is p else q for q in M.pieces),
                        M.translation, M.smoothness)
    with pytest.raises(OrderMismatch):
        tangency_order(bad, 0.3, "right")


def test_validate():
    assert validate(rotation_map(0.1)).ok
    dec = MapDescriptor((0.0, 0.5, 1.0), (smooth(E.Affine(1.0, 0.0)),
                                          smooth(E.add(E.Const(0.5), E.Mono(0.75, 2)))))
    rep = validate(dec)
    assert not rep.ok
    assert "monotone" in [c.name for c in rep.failures()]


def test_text_round_trip(stage0):
    text = to_text(stage0.map)
    assert text.startswith("mapdesc/1\n")
    again = from_text(text)
    assert to_text(again) == text
    assert eval_lift(again, 0.37) == eval_lift(stage0.map, 0.37)


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-5, 5))
def test_degree_one(stage0, x):
    M = stage0.map
    assert abs(eval_lift(M, x + 1.0) - eval_lift(M, x) - 1.0) < 1e-12


@settings(max_examples=30, deadline=None)
@given(x=st.floats(0, 1), d=st.floats(1e-9, 0.5))
def test_monotone(stage0, x, d):
    M = stage0.map
    assert eval_lift(M, x) <= eval_lift(M, x + d) + 1e-12


@settings(max_examples=20, deadline=None)
@given(a=st.floats(0, 1), w=st.floats(1e-4, 0.3))
def test_image_length_bounded_by_sup_derivative(stage0, a, w):
    M = stage0.map
    I = IntervalOnCircle(a, a + w)
    J = image_interval(M, I)
    xs = np.linspace(a, a + w, 400)
    d1 = max(abs(derivative(M, 1, x, side="right")) for x in xs)
    assert float(J.length) <= d1 * w * (1 + 1e-6) + 1e-12
