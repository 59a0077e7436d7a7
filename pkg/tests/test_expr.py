import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flatdenjoy import expr as E


def richardson(f, x, m, h=1e-3):
    """m-th derivative by central differences with one Richardson step."""
    def central(h):
        k = np.arange(m + 1)
        coef = np.array([(-1) ** (m - j) * math.comb(m, j) for j in k], dtype=float)
        pts = x + (k - m / 2) * h
        return float(np.dot(coef, [f(p) for p in pts])) / h ** m
    return (4 * central(h / 2) - central(h)) / 3


def test_basic_values():
    e = E.add(E.Const(1.0), E.scale(2.0, E.Mono(0.5, 3)))
    assert E.evaluate(e, 1.5) == pytest.approx(3.0)
    assert E.evaluate(E.Affine(2.0, -1.0), 0.25) == pytest.approx(-0.5)


def test_mollifier_vanishes_left_of_zero():
    m = E.Moll(0)
    assert E.evaluate(m, -0.3) == 0.0
    assert E.evaluate(m, 0.5) == pytest.approx(math.exp(-2.0))
    d = E.derivatives(m, [0.0], 8)
    assert np.all(d[1:, 0] == 0.0)


def test_prefix_round_trip():
    e = E.compose(E.add(E.Const(0.25), E.Mono(0.0, 4)), E.affine_map(0.1, 0.4))
    text = E.to_prefix(e)
    assert E.to_prefix(E.from_prefix(text)) == text
    xs = np.linspace(0.1, 0.4, 7)
    assert np.allclose(E.values(E.from_prefix(text), xs), E.values(e, xs))


def test_prefix_rejects_trailing_tokens():
    with pytest.raises(ValueError):
        E.from_prefix("(const 1.0) (const 2.0)")


def test_diff_stays_in_basis():
    e = E.mul(E.Mono(0.2, 3), E.compose(E.Moll(0), E.Affine(1.0, 0.0)))
    d = e.diff()
    assert isinstance(d, E.Expr)
    xs = np.array([0.3, 0.5, 0.8])
    assert np.allclose(E.values(d, xs), E.derivatives(e, xs, 1)[1], rtol=1e-9)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-1, 1), k=st.integers(1, 6), x=st.floats(-1, 1), m=st.integers(1, 4))
def test_monomial_jets_match_formula(c, k, x, m):
    d = E.derivatives(E.Mono(c, k), [x], m)[m, 0]
    exact = 0.0 if m > k else math.perm(k, m) * (x - c) ** (k - m)
    assert d == pytest.approx(exact, rel=1e-9, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(0.2, 0.8), m=st.integers(1, 4))
def test_jets_match_finite_differences(x, m):
    e = E.compose(E.unit_step(E.X), E.Affine(1.0, 0.0))
    f = lambda y: float(E.evaluate(e, y))
    d = E.derivatives(e, [x], m)[m, 0]
    assert d == pytest.approx(richardson(f, x, m, 1e-2), rel=1e-4, abs=1e-5)


def test_compile_mp_matches_float():
    import mpmath
    e = E.add(E.Const(0.5), E.scale(np.float64(0.25), E.Mono(0.1, 2)))
    f = E.compile_mp(e)
    with mpmath.workdps(40):
        assert float(f(mpmath.mpf("0.6"))) == pytest.approx(float(E.evaluate(e, 0.6)))
