"""Compiled float evaluation of piecewise lifts.

Expression trees are lowered to a small stack program; one numba-compiled
interpreter evaluates any program, so building new descriptors costs no
compilation.  Orbit loops (rotation enclosures, first-return searches)
run entirely inside compiled code.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from . import expr as E

OP_CONST, OP_X, OP_ADD, OP_MUL, OP_POW, OP_MOLL, OP_SETX, OP_POPX, OP_AFF = range(9)

_STACK = 512


def lower(e: E.Expr):
    """Lower an expression to ``(ops, iargs, fargs, gargs)`` lists."""
    ops, ia, fa, ga = [], [], [], []

    def put(op, i=0, f=0.0, g=0.0):
        ops.append(op)
        ia.append(i)
        fa.append(f)
        ga.append(g)

    def walk(node):
        if isinstance(node, E.Const):
            put(OP_CONST, f=node.value)
        elif isinstance(node, E.Affine):
            put(OP_X)
            put(OP_AFF, f=node.slope, g=node.offset)
        elif isinstance(node, E.Mono):
            put(OP_X)
            put(OP_AFF, f=1.0, g=-node.center)
            put(OP_POW, i=node.power)
        elif isinstance(node, E.Moll):
            put(OP_X)
            put(OP_MOLL, i=node.order)
        elif isinstance(node, E.Sum):
            for t in node.terms:
                walk(t)
            put(OP_ADD, i=len(node.terms))
        elif isinstance(node, E.Prod):
            for f in node.factors:
                walk(f)
            put(OP_MUL, i=len(node.factors))
        elif isinstance(node, E.Comp):
            walk(node.inner)
            put(OP_SETX)
            walk(node.outer)
            put(OP_POPX)
        else:
            raise TypeError(type(node))

    walk(e)
    return ops, ia, fa, ga


class Program:
    """Concatenated stack programs for the pieces of one descriptor."""

    def __init__(self, breakpoints, kinds, flat_values, exprs, translation):
        ops, ia, fa, ga, start, length = [], [], [], [], [], []
        for k, e in zip(kinds, exprs):
            start.append(len(ops))
            if k == 1:
                o, i, f, g = lower(e)
                ops += o
                ia += i
                fa += f
                ga += g
            length.append(len(ops) - start[-1])
        self.bps = np.asarray(breakpoints, dtype=np.float64)
        self.kinds = np.asarray(kinds, dtype=np.int64)
        self.vals = np.asarray(flat_values, dtype=np.float64)
        self.start = np.asarray(start, dtype=np.int64)
        self.length = np.asarray(length, dtype=np.int64)
        self.ops = np.asarray(ops or [0], dtype=np.int64)
        self.ia = np.asarray(ia or [0], dtype=np.int64)
        self.fa = np.asarray(fa or [0.0], dtype=np.float64)
        self.ga = np.asarray(ga or [0.0], dtype=np.float64)
        self.t = float(translation)

    def args(self, t=None):
        return (self.bps, self.kinds, self.vals, self.start, self.length,
                self.ops, self.ia, self.fa, self.ga, self.t if t is None else float(t))

    def __call__(self, x: float) -> float:
        return lift(float(x), *self.args())

    def orbit_end(self, x0: float, n: int, t=None) -> float:
        return iterate(float(x0), int(n), *self.args(t))

    def orbit(self, x0: float, n: int, t=None) -> np.ndarray:
        return orbit(float(x0), int(n), *self.args(t))

    def orbit_parts(self, x0: float, n: int, t=None):
        """``(fractional parts, integer parts)`` of the orbit."""
        return orbit_parts(float(x0), int(n), *self.args(t))


@numba.njit(cache=True)
def _run(x, start, length, ops, ia, fa, ga):
    stack = np.empty(_STACK)
    xs = np.empty(_STACK)
    sp = 0
    xp = 0
    xs[0] = x
    for pc in range(start, start + length):
        op = ops[pc]
        if op == 0:
            stack[sp] = fa[pc]
            sp += 1
        elif op == 1:
            stack[sp] = xs[xp]
            sp += 1
        elif op == 2:
            n = ia[pc]
            acc = 0.0
            for i in range(sp - n, sp):
                acc += stack[i]
            sp -= n
            stack[sp] = acc
            sp += 1
        elif op == 3:
            n = ia[pc]
            acc = 1.0
            for i in range(sp - n, sp):
                acc *= stack[i]
            sp -= n
            stack[sp] = acc
            sp += 1
        elif op == 4:
            stack[sp - 1] = stack[sp - 1] ** ia[pc]
        elif op == 5:
            u = stack[sp - 1]
            if u <= 1.0 / 700.0:
                stack[sp - 1] = 0.0
            else:
                stack[sp - 1] = math.exp(-1.0 / u - ia[pc] * math.log(u))
        elif op == 6:
            xp += 1
            sp -= 1
            xs[xp] = stack[sp]
        elif op == 7:
            xp -= 1
        else:
            stack[sp - 1] = fa[pc] * stack[sp - 1] + ga[pc]
    return stack[0]


@numba.njit(cache=True)
def _base(y, bps, kinds, vals, start, length, ops, ia, fa, ga):
    # y in [0, 1)
    lo = 0
    hi = bps.shape[0] - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if bps[mid] <= y:
            lo = mid
        else:
            hi = mid
    if kinds[lo] == 0:
        return vals[lo]
    return _run(y, start[lo], length[lo], ops, ia, fa, ga)


@numba.njit(cache=True)
def lift(x, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    k = math.floor(x)
    y = x - k
    if y >= 1.0:
        y = 0.0
        k += 1.0
    return _base(y, bps, kinds, vals, start, length, ops, ia, fa, ga) + k + t


@numba.njit(cache=True)
def step(y, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    """One step on the circle: ``(frac, turns)`` of ``F(y)`` for ``y`` in ``[0, 1)``.

    Orbits are followed in reduced form so that precision does not decay
    with the size of the lift.
    """
    v = _base(y, bps, kinds, vals, start, length, ops, ia, fa, ga) + t
    k = math.floor(v)
    f = v - k
    if f >= 1.0:
        f = 0.0
        k += 1.0
    return f, k


@numba.njit(cache=True)
def _reduce(x):
    k = math.floor(x)
    y = x - k
    if y >= 1.0:
        y = 0.0
        k += 1.0
    return y, k


@numba.njit(cache=True)
def iterate_parts(x, n, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    """``F^n(x)`` as ``(frac, integer part)``."""
    y, k = _reduce(x)
    for _ in range(n):
        y, dk = step(y, bps, kinds, vals, start, length, ops, ia, fa, ga, t)
        k += dk
    return y, k


@numba.njit(cache=True)
def iterate(x, n, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    y, k = iterate_parts(x, n, bps, kinds, vals, start, length, ops, ia, fa, ga, t)
    return k + y


@numba.njit(cache=True)
def orbit_parts(x, n, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    """Fractional parts and integer parts of ``F^i(x)``, ``i = 0..n``."""
    fr = np.empty(n + 1)
    ks = np.empty(n + 1)
    y, k = _reduce(x)
    fr[0] = y
    ks[0] = k
    for i in range(n):
        y, dk = step(y, bps, kinds, vals, start, length, ops, ia, fa, ga, t)
        k += dk
        fr[i + 1] = y
        ks[i + 1] = k
    return fr, ks


@numba.njit(cache=True)
def orbit(x, n, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    fr, ks = orbit_parts(x, n, bps, kinds, vals, start, length, ops, ia, fa, ga, t)
    return ks + fr


@numba.njit(cache=True)
def first_return(x, lo, hi, horizon, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    """First ``q >= 1`` with ``F^q(x) - p`` in ``(lo, hi)`` for some integer ``p``.

    Returns ``(q, p, F^q(x))``; ``q = 0`` when no return happens within the
    horizon, in which case the last value is ``F^horizon(x)``.
    """
    y, k = _reduce(x)
    for q in range(1, horizon + 1):
        y, dk = step(y, bps, kinds, vals, start, length, ops, ia, fa, ga, t)
        k += dk
        p = math.floor(y - lo)
        z = y - p
        if z > lo and z < hi:
            return q, k + p, k + y
    return 0, 0.0, k + y


@numba.njit(cache=True)
def flat_cycle(los, his, horizon, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    """Follow the orbit of the first flat value through the flat components.

    Each visit to a component replaces the point by that component's value,
    so the first repeated component closes a periodic cycle.  Returns
    ``(q, p, d)``: cycle length and turns (``q = 0`` if no cycle closes
    within the horizon), and the displacement after ``horizon`` steps.
    Components are given in base coordinates, ``0 <= los[i] < 1``.
    """
    m = los.shape[0]
    seen_q = np.full(m, -1)
    seen_k = np.zeros(m)
    x = 0.5 * (los[0] + his[0])
    y, k = _reduce(x)
    x0 = k + y
    seen_q[0] = 0
    seen_k[0] = 0.0
    for q in range(1, horizon + 1):
        y, dk = step(y, bps, kinds, vals, start, length, ops, ia, fa, ga, t)
        k += dk
        for i in range(m):
            # the component may wrap past 1
            if y > los[i] and y < his[i]:
                w = k
            elif y + 1.0 > los[i] and y + 1.0 < his[i]:
                w = k - 1.0
            else:
                continue
            if seen_q[i] >= 0:
                return q - seen_q[i], w - seen_k[i], (k + y) - x0
            seen_q[i] = q
            seen_k[i] = w
            break
    return 0, 0.0, (k + y) - x0


@numba.njit(cache=True)
def cycle_below(rho, los, his, horizon, bps, kinds, vals, start, length, ops, ia, fa, ga, t):
    """Whether the translate ``t`` rotates slower than ``rho``."""
    q, p, d = flat_cycle(los, his, horizon, bps, kinds, vals, start, length, ops, ia, fa, ga, t)
    if q > 0:
        return p < rho * q
    return d < rho * horizon


@numba.njit(cache=True)
def return_bisect(t_lo, t_hi, rho, los, his, horizon, bps, kinds, vals, start,
                  length, ops, ia, fa, ga):
    """Bisect the translation so the flat values' orbit has rotation ``rho``.

    The flat components are ``(los[i], his[i])`` in base coordinates.  A
    closed cycle through them gives the exact rotation number ``p/q`` of
    that translate; otherwise the displacement after ``horizon`` steps
    decides.  Runs to double resolution and returns the final bracket.
    """
    for _ in range(200):
        mid = 0.5 * (t_lo + t_hi)
        if mid <= t_lo or mid >= t_hi:
            break
        if cycle_below(rho, los, his, horizon, bps, kinds, vals, start, length,
                       ops, ia, fa, ga, mid):
            t_lo = mid
        else:
            t_hi = mid
    return t_lo, t_hi
