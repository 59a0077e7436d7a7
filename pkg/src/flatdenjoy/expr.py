"""Closed-form expression trees for smooth map pieces.

The basis is constants, affine maps, integer powers ``(x - c)**k``, the
one-sided mollifier ``x**-j * exp(-1/x)`` (zero for ``x <= 0``), sums,
products and composition.  Derivative values are computed with truncated
Taylor arithmetic ("jets") vectorized over numpy arrays; ``diff`` gives the
symbolic derivative and shows the basis is closed under differentiation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import reduce

import mpmath
import numpy as np

# Below this argument exp(-1/u) underflows in double precision.
MOLL_CUTOFF = 1.0 / 700.0


class Expr:
    """Base class for expression nodes."""

    def diff(self) -> "Expr":
        raise NotImplementedError

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return add(self, scale(-1.0, _lift(other)))

    def __rsub__(self, other):
        return add(_lift(other), scale(-1.0, self))

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __neg__(self):
        return scale(-1.0, self)

    def __call__(self, inner: "Expr") -> "Expr":
        return compose(self, inner)

    def __str__(self):
        return to_prefix(self)


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: float

    def diff(self):
        return ZERO


@dataclass(frozen=True, eq=True)
class Affine(Expr):
    slope: float
    offset: float

    def diff(self):
        return Const(self.slope)


@dataclass(frozen=True, eq=True)
class Mono(Expr):
    """``(x - center) ** power`` with integer power (possibly negative)."""

    center: float
    power: int

    def diff(self):
        if self.power == 0:
            return ZERO
        if self.power == 1:
            return ONE
        return scale(float(self.power), Mono(self.center, self.power - 1))


@dataclass(frozen=True, eq=True)
class Moll(Expr):
    """``x**-order * exp(-1/x)`` for ``x > 0``, identically zero otherwise."""

    order: int = 0

    def diff(self):
        j = self.order
        nxt = Moll(j + 2)
        if j == 0:
            return nxt
        return add(nxt, scale(-float(j), Moll(j + 1)))


@dataclass(frozen=True, eq=True)
class Sum(Expr):
    terms: tuple

    def diff(self):
        return add(*(t.diff() for t in self.terms))


@dataclass(frozen=True, eq=True)
class Prod(Expr):
    factors: tuple

    def diff(self):
        parts = []
        for i, f in enumerate(self.factors):
            rest = self.factors[:i] + (f.diff(),) + self.factors[i + 1:]
            parts.append(mul(*rest))
        return add(*parts)


@dataclass(frozen=True, eq=True)
class Comp(Expr):
    outer: Expr
    inner: Expr

    def diff(self):
        return mul(compose(self.outer.diff(), self.inner), self.inner.diff())


ZERO = Const(0.0)
ONE = Const(1.0)
X = Affine(1.0, 0.0)


def _lift(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Const(float(v))


# ----------------------------------------------------------------------------
# simplifying constructors


def add(*terms: Expr) -> Expr:
    flat = []
    c = 0.0
    for t in terms:
        parts = t.terms if isinstance(t, Sum) else (t,)
        for p in parts:
            if isinstance(p, Const):
                c += p.value
            else:
                flat.append(p)
    # fold affine terms together
    aff = [p for p in flat if isinstance(p, Affine)]
    if len(aff) > 1 or (aff and c != 0.0):
        flat = [p for p in flat if not isinstance(p, Affine)]
        s = sum(p.slope for p in aff)
        o = sum(p.offset for p in aff) + c
        c = 0.0
        if s != 0.0:
            flat.append(Affine(s, o))
        else:
            c = o
    if c != 0.0:
        flat.append(Const(c))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Sum(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat = []
    c = 1.0
    for f in factors:
        parts = f.factors if isinstance(f, Prod) else (f,)
        for p in parts:
            if isinstance(p, Const):
                c *= p.value
            else:
                flat.append(p)
    if c == 0.0:
        return ZERO
    if not flat:
        return Const(c)
    if len(flat) == 1:
        return scale(c, flat[0])
    body = Prod(tuple(flat))
    if c == 1.0:
        return body
    return Prod((Const(c),) + body.factors)


def scale(c: float, e: Expr) -> Expr:
    """``c * e`` distributing over sums and folding into affine nodes."""
    c = float(c)
    if c == 1.0:
        return e
    if c == 0.0:
        return ZERO
    if isinstance(e, Const):
        return Const(c * e.value)
    if isinstance(e, Affine):
        return Affine(c * e.slope, c * e.offset)
    if isinstance(e, Sum):
        return add(*(scale(c, t) for t in e.terms))
    if isinstance(e, Prod):
        head = e.factors[0]
        if isinstance(head, Const):
            k = c * head.value
            rest = e.factors[1:]
            if k == 1.0:
                return rest[0] if len(rest) == 1 else Prod(rest)
            return Prod((Const(k),) + rest)
        return Prod((Const(c),) + e.factors)
    return Prod((Const(c), e))


def compose(outer: Expr, inner: Expr) -> Expr:
    if isinstance(outer, Const):
        return outer
    if inner == X:
        return outer
    if outer == X:
        return inner
    if isinstance(outer, Affine):
        return add(scale(outer.slope, inner), Const(outer.offset))
    # distribute only over affine substitutions, which keeps trees small
    # and makes reflection and integer shifts round-trip exactly
    if isinstance(outer, Sum) and isinstance(inner, Affine):
        return add(*(compose(t, inner) for t in outer.terms))
    if isinstance(outer, Prod) and isinstance(inner, Affine):
        return mul(*(compose(f, inner) for f in outer.factors))
    if isinstance(outer, Comp):
        return compose(outer.outer, compose(outer.inner, inner))
    if isinstance(inner, Const):
        return Const(float(evaluate(outer, inner.value)))
    if isinstance(outer, Mono) and isinstance(inner, Affine):
        if inner.slope == 1.0:
            return Mono(outer.center - inner.offset, outer.power)
        if outer.power >= 0:
            # (s x + o - c)^k = s^k (x - (c - o)/s)^k
            return scale(inner.slope ** outer.power,
                         Mono((outer.center - inner.offset) / inner.slope, outer.power))
    return Comp(outer, inner)


# ----------------------------------------------------------------------------
# building blocks


def affine_map(lo: float, hi: float) -> Expr:
    """The affine map sending ``lo -> 0`` and ``hi -> 1``."""
    w = hi - lo
    return Affine(1.0 / w, -lo / w)


def reciprocal(e: Expr) -> Expr:
    return compose(Mono(0.0, -1), e)


def unit_step(s: Expr = X, exact_at: str = "lo") -> Expr:
    """Flat-to-flat step: 0 for s <= 0, 1 for s >= 1, C-infinity.

    Both forms are the same function; ``exact_at`` picks the end where
    every derivative evaluates to exactly zero in floating point
    (``"lo"`` for s = 0, ``"hi"`` for s = 1).
    """
    left = compose(Moll(0), s)
    right = compose(Moll(0), add(Const(1.0), scale(-1.0, s)))
    denom = reciprocal(add(left, right))
    if exact_at == "lo":
        return mul(left, denom)
    return add(Const(1.0), scale(-1.0, mul(right, denom)))


def shift(e: Expr, k: float) -> Expr:
    """The expression ``x -> e(x - k) + k`` (translate graph along the diagonal)."""
    if k == 0:
        return e
    return add(compose(e, Affine(1.0, -float(k))), Const(float(k)))


def reflect(e: Expr, c: float) -> Expr:
    """Conjugate by the reflection ``x -> c - x``: ``x -> c - e(c - x)``."""
    r = Affine(-1.0, float(c))
    return compose(r, compose(e, r))


# ----------------------------------------------------------------------------
# scalar evaluation


def _moll_float(u: float, j: int) -> float:
    if u <= MOLL_CUTOFF:
        return 0.0
    return math.exp(-1.0 / u - j * math.log(u))


def _moll_mp(u, j):
    if u <= 0:
        return mpmath.mpf(0)
    return mpmath.exp(-1 / u) / u ** j


def evaluate(e: Expr, x, mp: bool = False):
    """Direct recursive evaluation (float, or mpmath when ``mp``)."""
    if isinstance(e, Const):
        return mpmath.mpf(e.value) if mp else e.value
    if isinstance(e, Affine):
        return e.slope * x + e.offset
    if isinstance(e, Mono):
        return (x - e.center) ** e.power
    if isinstance(e, Moll):
        return _moll_mp(x, e.order) if mp else _moll_float(x, e.order)
    if isinstance(e, Sum):
        return sum((evaluate(t, x, mp) for t in e.terms[1:]), evaluate(e.terms[0], x, mp))
    if isinstance(e, Prod):
        return reduce(lambda a, f: a * evaluate(f, x, mp), e.factors[1:],
                      evaluate(e.factors[0], x, mp))
    if isinstance(e, Comp):
        return evaluate(e.outer, evaluate(e.inner, x, mp), mp)
    raise TypeError(type(e))


def compile_mp(e: Expr):
    """Generate a Python function evaluating ``e`` with mpmath numbers."""
    lines = []
    memo = {}

    def emit(node, var):
        key = (id(node), var)
        if key in memo:
            return memo[key]
        if isinstance(node, Const):
            out = f"mpf({float(node.value)!r})"
        elif isinstance(node, Affine):
            out = f"({float(node.slope)!r}*{var}+{float(node.offset)!r})"
        elif isinstance(node, Mono):
            out = f"(({var}-{float(node.center)!r})**{int(node.power)})"
        elif isinstance(node, Moll):
            out = f"moll({var},{node.order})"
        elif isinstance(node, Sum):
            out = "(" + "+".join(emit(t, var) for t in node.terms) + ")"
        elif isinstance(node, Prod):
            out = "(" + "*".join(emit(f, var) for f in node.factors) + ")"
        elif isinstance(node, Comp):
            inner = emit(node.inner, var)
            tmp = f"t{len(lines)}"
            lines.append(f"    {tmp} = {inner}")
            out = emit(node.outer, tmp)
        else:
            raise TypeError(type(node))
        if len(out) > 40:
            tmp = f"t{len(lines)}"
            lines.append(f"    {tmp} = {out}")
            out = tmp
        memo[key] = out
        return out

    result = emit(e, "x")
    src = "def f(x):\n" + "\n".join(lines + [f"    return {result}"]) + "\n"
    ns = {"mpf": mpmath.mpf, "moll": _moll_mp}
    exec(src, ns)
    return ns["f"]


# ----------------------------------------------------------------------------
# Taylor jets: array of shape (order+1, npoints) holding f^(i)(x)/i!


def _jmul(a, b):
    n = a.shape[0]
    out = np.zeros_like(a)
    for k in range(n):
        out[k] = np.sum(a[: k + 1] * b[k::-1], axis=0)
    return out


def _jrecip(a):
    n = a.shape[0]
    out = np.zeros_like(a)
    out[0] = 1.0 / a[0]
    for k in range(1, n):
        out[k] = -np.sum(a[1: k + 1] * out[k - 1::-1][: k], axis=0) / a[0]
    return out


def _jexp(a):
    n = a.shape[0]
    out = np.zeros_like(a)
    out[0] = np.exp(a[0])
    for k in range(1, n):
        i = np.arange(1, k + 1).reshape(-1, *([1] * (a.ndim - 1)))
        out[k] = np.sum(i * a[1: k + 1] * out[k - 1::-1][:k], axis=0) / k
    return out


def _jpow(a, k):
    if k < 0:
        return _jpow(_jrecip(a), -k)
    out = np.zeros_like(a)
    out[0] = 1.0
    base = a
    while k:
        if k & 1:
            out = _jmul(out, base)
        k >>= 1
        if k:
            base = _jmul(base, base)
    return out


def _jmoll(u, j):
    out = np.zeros_like(u)
    mask = u[0] > MOLL_CUTOFF
    if np.any(mask):
        v = u[:, mask]
        r = _jrecip(v)
        e = _jexp(-r)
        out[:, mask] = _jmul(_jpow(r, j), e) if j else e
    return out


def _jet(e: Expr, x, memo):
    key = id(e)
    hit = memo.get(key)
    if hit is not None and hit[0] is x:
        return hit[1]
    if isinstance(e, Const):
        out = np.zeros_like(x)
        out[0] = e.value
    elif isinstance(e, Affine):
        out = e.slope * x
        out[0] += e.offset
    elif isinstance(e, Mono):
        y = x.copy()
        y[0] -= e.center
        out = _jpow(y, e.power)
    elif isinstance(e, Moll):
        out = _jmoll(x, e.order)
    elif isinstance(e, Sum):
        out = sum(_jet(t, x, memo) for t in e.terms)
    elif isinstance(e, Prod):
        out = reduce(_jmul, (_jet(f, x, memo) for f in e.factors))
    elif isinstance(e, Comp):
        inner = _jet(e.inner, x, memo)
        out = _jet(e.outer, inner, {})
    else:
        raise TypeError(type(e))
    memo[key] = (x, out)
    return out


def jet(e: Expr, xs, order: int) -> np.ndarray:
    """Taylor coefficients ``e^(i)(x)/i!`` for ``i <= order`` at points ``xs``."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    base = np.zeros((order + 1, xs.size))
    base[0] = xs
    if order >= 1:
        base[1] = 1.0
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        return _jet(e, base, {})


def derivatives(e: Expr, xs, order: int) -> np.ndarray:
    """Array of shape ``(order+1, len(xs))`` with the derivatives ``e^(i)(x)``."""
    coeffs = jet(e, xs, order)
    fact = np.array([math.factorial(i) for i in range(order + 1)], dtype=float)
    return coeffs * fact[:, None]


def values(e: Expr, xs) -> np.ndarray:
    return jet(e, xs, 0)[0]


# ----------------------------------------------------------------------------
# prefix text form

_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def to_prefix(e: Expr) -> str:
    if isinstance(e, Const):
        return f"(const {float(e.value)!r})"
    if isinstance(e, Affine):
        return f"(affine {float(e.slope)!r} {float(e.offset)!r})"
    if isinstance(e, Mono):
        return f"(mono {float(e.center)!r} {int(e.power)})"
    if isinstance(e, Moll):
        return f"(moll {int(e.order)})"
    if isinstance(e, Sum):
        return "(sum " + " ".join(to_prefix(t) for t in e.terms) + ")"
    if isinstance(e, Prod):
        return "(prod " + " ".join(to_prefix(f) for f in e.factors) + ")"
    if isinstance(e, Comp):
        return f"(comp {to_prefix(e.outer)} {to_prefix(e.inner)})"
    raise TypeError(type(e))


def from_prefix(text: str) -> Expr:
    tokens = _TOKEN.findall(text)
    pos = 0

    def parse():
        nonlocal pos
        if tokens[pos] != "(":
            raise ValueError(f"expected '(' at token {pos}")
        head = tokens[pos + 1]
        pos += 2
        if head in ("const", "affine", "mono", "moll"):
            args = []
            while tokens[pos] != ")":
                args.append(tokens[pos])
                pos += 1
            pos += 1
            if head == "const":
                return Const(float(args[0]))
            if head == "affine":
                return Affine(float(args[0]), float(args[1]))
            if head == "mono":
                return Mono(float(args[0]), int(args[1]))
            return Moll(int(args[0]))
        kids = []
        while tokens[pos] != ")":
            kids.append(parse())
        pos += 1
        if head == "sum":
            return Sum(tuple(kids))
        if head == "prod":
            return Prod(tuple(kids))
        if head == "comp":
            return Comp(kids[0], kids[1])
        raise ValueError(f"unknown node {head!r}")

    out = parse()
    if pos != len(tokens):
        raise ValueError("trailing tokens in expression")
    return out
