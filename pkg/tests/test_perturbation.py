import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatdenjoy import perturbation as P
from flatdenjoy import rotation as R
from flatdenjoy.circle_core import (IntervalOnCircle, cj_distance, eval_many, flat_set,
                                    rotation_map, validate)
from flatdenjoy.errors import BudgetExceeded, PreconditionError

from .conftest import EPS

G = float(R.GOLDEN)


def split(stage0, parity, delta=0.01):
    return P.flatten_split(stage0.map, P.SplitSpec(parity, EPS, delta, stage0.U, 0))


@pytest.mark.parametrize("parity", ["even", "odd"])
def test_split_two_components_and_gap(stage0, parity):
    res = split(stage0, parity)
    comps = flat_set(res.map)
    assert len(comps) == 2
    (a0, b0), (a1, b1) = [(float(c.a), float(c.b)) for c in comps]
    assert a1 - b0 == pytest.approx(EPS, abs=1e-12)
    assert min(a0, a1) == pytest.approx(0.125) and max(b0, b1) == pytest.approx(0.875)
    expected = P.split_components(parity, stage0.U, EPS)
    assert [float(c.length) for c in comps] == pytest.approx([float(c.length) for c in expected])
    assert res.norm < 0.01
    assert validate(res.map).ok


def test_split_c0_monotone_in_delta(stage0):
    norms = [split(stage0, "even", d).norm_c0 for d in (0.02, 0.01, 0.005, 0.0025)]
    assert all(x > y for x, y in zip(norms, norms[1:]))
    assert all(n < d for n, d in zip(norms, (0.02, 0.01, 0.005, 0.0025)))


def test_split_norm_linear_in_amplitude(stage0):
    spec = P.SplitSpec("even", EPS, 0.01, stage0.U, 0, norm_order=2)
    d = [float(cj_distance(P.split_with_amplitude(stage0.map, spec, A, "left"), stage0.map, 2))
         for A in (1e-3, 2e-3)]
    assert d[1] / d[0] == pytest.approx(2.0, rel=1e-6)


def test_split_rejects_short_interval(stage0):
    with pytest.raises(PreconditionError):
        P.SplitSpec("even", 0.2, 0.01, IntervalOnCircle(0.1, 0.4), 0)


def test_split_amplitude_beyond_monotone_room(stage0):
    spec = P.SplitSpec("even", EPS, 0.01, stage0.U, 0, amplitude=5.0)
    with pytest.raises(BudgetExceeded):
        P.flatten_split(stage0.map, spec)


def test_bump_flat_to_flat():
    p = P.bump_primitive("flat-to-flat", IntervalOnCircle(0.2, 0.4), 0.1)
    assert p(0.2) == 0.0 and p(0.4) == pytest.approx(0.1)
    assert p(0.3) == pytest.approx(0.05)
    assert np.all(p.derivs(0.2, 6, "right")[1:] == 0.0)
    assert np.allclose(p.derivs(0.4, 6, "left")[1:], 0.0, atol=1e-12)


def test_bump_flat_to_order_k():
    p = P.bump_primitive("flat-to-order-k", IntervalOnCircle(0.0, 0.5), 1.0, order=3)
    assert p(0.25) == pytest.approx(0.125)
    d = p.derivs(0.0, 4)
    assert np.all(d[:3] == 0.0) and d[3] == pytest.approx(48.0)
    with pytest.raises(PreconditionError):
        P.bump_primitive("flat-to-order-k", IntervalOnCircle(0.0, 0.5), 1.0)
    with pytest.raises(PreconditionError):
        P.bump_primitive("sideways", IntervalOnCircle(0.0, 0.5), 1.0)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-1, 1), w=st.floats(0.01, 1), amp=st.floats(1e-6, 1))
def test_bump_monotone(a, w, amp):
    p = P.bump_primitive("flat-to-flat", IntervalOnCircle(a, a + w), amp)
    ys = [p(x) for x in np.linspace(a, a + w, 101)]
    assert np.all(np.diff(ys) >= -1e-15)


def test_micro_translate_recovers_offset():
    M = rotation_map(G + 1e-4)
    n = 100_000
    out = P.micro_translate(M, 1e-3, R.GOLDEN, n)
    assert abs(out.translation - G) <= 1.0 / n
    assert R.rotation_enclosure(out, n).contains(G)


def test_micro_translate_budget(stage0):
    with pytest.raises(BudgetExceeded):
        P.micro_translate(stage0.map.shifted(1e-3), 1e-12, R.GOLDEN, 100_000)
    with pytest.raises(PreconditionError):
        P.micro_translate(stage0.map, 0.0, R.GOLDEN, 100)


def test_reflatten_leaves_one_component(stage0):
    res = split(stage0, "even")
    spec = P.ReflattenSpec("even", EPS, 0.25, stage0.U, 0, 1, order=3)
    H = P.reflatten_with(res.map, spec, 1e-3)
    comps = flat_set(H)
    assert len(comps) == 1
    kept = spec.kept
    assert float(comps[0].a) == pytest.approx(float(kept.a), abs=1e-12)
    assert float(comps[0].b) == pytest.approx(float(kept.b), abs=1e-12)
    assert validate(H).ok
    # far from the operator window nothing moves
    xs = np.linspace(0.9, 1.0, 5)
    assert np.allclose(eval_many(H, xs), eval_many(res.map, xs), atol=1e-3)


def test_reflatten_components_by_parity():
    U = IntervalOnCircle(0.1, 0.9)
    odd = P.ReflattenSpec("odd", 0.1, 0.5, U, 0, 1)
    even = P.ReflattenSpec("even", 0.1, 0.5, U, 0, 1)
    assert (float(odd.erased.a), float(odd.erased.b)) == pytest.approx((0.1, 0.2))
    assert (float(odd.kept.a), float(odd.kept.b)) == pytest.approx((0.3, 0.9))
    assert (float(even.erased.a), float(even.erased.b)) == pytest.approx((0.8, 0.9))
    assert (float(even.kept.a), float(even.kept.b)) == pytest.approx((0.1, 0.7))
    assert odd.junction_order == 2 and even.junction_order == 3
