"""Splitting a flat interval in two, and erasing one part again.

Both operators work on a window around the flat interval ``U = (a, b)``.
The code is written once for the orientation in which the component to be
erased sits at the left end, ``(a, a + e)``, and the kept component is
``(a + 2e, b)``.  The other orientation is obtained by conjugating the
window with ``x -> a + b - x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import expr as E
from . import rotation as R
from .circle_core import (INF, IntervalOnCircle, MapDescriptor, Piece, cj_distance, flat,
                     flat_set, iterate_interval, smooth, validate)
from .errors import (BudgetExceeded, ContainmentLost, DegenerateOrbit, InvariantRegression,
                     PreconditionError)
from .segments import Seg, evaluate_view, reflect_view, splice, view

MAX_HALVINGS = 40
PARITIES = ("odd", "even")


def parity_of(n: int) -> str:
    return "odd" if n % 2 else "even"


@lru_cache(maxsize=None)
def step_slope() -> float:
    """Maximum slope of the unit step on [0, 1]."""
    s = np.linspace(0.0, 1.0, 20001)
    return float(E.derivatives(E.unit_step(), s, 1)[1].max())


# ----------------------------------------------------------------------------
# specs


@dataclass(frozen=True)
class SplitSpec:
    """Inputs of ``flatten_split``.

    ``n`` is the stage index, ``flat`` the interval ``(a, b)`` in lift
    coordinates.  ``norm_order`` is the C^j order the budget is measured in
    (the stage index by default).  ``amplitude`` skips the search.  ``side``
    forces where the rise of the kept component is compensated, given in
    the canonical orientation.
    """

    parity: str
    eps: float
    delta: float
    flat: IntervalOnCircle
    n: int
    norm_order: int | None = None
    amplitude: float | None = None
    side: str | None = None

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise PreconditionError(f"parity must be one of {PARITIES}")
        if not 0.0 < self.eps < 0.25:
            raise PreconditionError("eps must lie in (0, 1/4)")
        if not 0.0 < self.delta < 1.0:
            raise PreconditionError("delta must lie in (0, 1)")
        if not 2.0 * self.gap < float(self.flat.length):
            raise PreconditionError("flat interval is shorter than 2 eps / 2^n")
        if self.side not in (None, "left", "right"):
            raise PreconditionError("side must be left or right")

    @property
    def gap(self) -> float:
        return self.eps / 2.0 ** self.n

    @property
    def order(self) -> int:
        return self.n if self.norm_order is None else self.norm_order


@dataclass(frozen=True)
class ReflattenSpec:
    """Inputs of ``reflatten``.

    ``flat`` is the interval that was split; the erased and kept components
    follow from the parity.  ``r`` is the return exponent of the step and
    ``target`` the window ``G^r(test)`` must sit in (by default the part of
    the kept component next to its far end, of length ``e / 2``).
    ``order`` is the vanishing order of the new junction; it defaults to the
    step exponent (``n + 2`` odd, ``n + 3`` even).
    """

    parity: str
    eps: float
    sigma: float
    flat: IntervalOnCircle
    n: int
    r: int
    test: IntervalOnCircle | None = None
    target: IntervalOnCircle | None = None
    order: int | None = None
    norm_order: int | None = None
    beta: float | None = None

    def __post_init__(self):
        if self.parity not in PARITIES:
            raise PreconditionError(f"parity must be one of {PARITIES}")
        if not 0.0 < self.sigma < 1.0:
            raise PreconditionError("sigma must lie in (0, 1)")
        if self.r < 1:
            raise PreconditionError("return exponent must be positive")

    @property
    def gap(self) -> float:
        return self.eps / 2.0 ** self.n

    @property
    def erased(self) -> IntervalOnCircle:
        a, b, e = float(self.flat.a), float(self.flat.b), self.gap
        if self.parity == "odd":
            return IntervalOnCircle(a, a + e)
        return IntervalOnCircle(b - e, b)

    @property
    def kept(self) -> IntervalOnCircle:
        a, b, e = float(self.flat.a), float(self.flat.b), self.gap
        if self.parity == "odd":
            return IntervalOnCircle(a + 2 * e, b)
        return IntervalOnCircle(a, b - 2 * e)

    @property
    def junction_order(self) -> int:
        if self.order is not None:
            return self.order
        return self.n + 2 if self.parity == "odd" else self.n + 3

    @property
    def window(self) -> IntervalOnCircle:
        if self.target is not None:
            return self.target
        a, b, h = float(self.flat.a), float(self.flat.b), self.gap / 2
        if self.parity == "odd":
            return IntervalOnCircle(b - h, b)
        return IntervalOnCircle(a, a + h)


def split_components(parity: str, U: IntervalOnCircle, e: float):
    """The two flat components a split of ``U`` produces, left to right."""
    a, b = float(U.a), float(U.b)
    if parity == "odd":
        return [IntervalOnCircle(a, a + e), IntervalOnCircle(a + 2 * e, b)]
    return [IntervalOnCircle(a, b - 2 * e), IntervalOnCircle(b - e, b)]


def operator_window(U: IntervalOnCircle):
    """Lift window touched by the operators.

    Nominally ``U`` enlarged by a quarter of its length on each side; capped
    so the window never covers the whole circle.
    """
    a, b = float(U.a), float(U.b)
    L = b - a
    w = min(0.25 * L, 0.45 * (1.0 - L))
    return a - w, b + w


def split_window(U: IntervalOnCircle):
    """Lift window of the split: the compensation may use most of the arc
    outside ``U`` on either side, where the map still rises by O(1)."""
    a, b = float(U.a), float(U.b)
    w = 0.45 * (1.0 - (b - a))
    return a - w, b + w


# ----------------------------------------------------------------------------
# segment helpers


def piece_expr(p: Piece) -> E.Expr:
    return E.Const(p.value) if p.is_flat else p.expr


SNAP = 1e-12


def snap(segs, x: float) -> float:
    """``x``, or the segment boundary within ``SNAP`` of it (reflection
    moves boundaries by an ulp)."""
    for s in segs:
        for y in (s.lo, s.hi):
            if abs(y - x) <= SNAP:
                return y
    return x


def cut(segs, points):
    """Split segments at the given interior points."""
    out = []
    for s in segs:
        inner = sorted(x for x in points if s.lo + SNAP < x < s.hi - SNAP)
        if not inner:
            out.append(s)
            continue
        t0, t1 = s.piece.tangency
        lo, cls = s.lo, s.cls
        for x in inner + [s.hi]:
            tan = (t0 if lo == s.lo else None, t1 if x == s.hi else None)
            out.append(Seg(lo, x, replace(s.piece, tangency=tan), cls))
            lo, cls = x, INF
    return out


def within(segs, lo, hi):
    return [s for s in segs if s.lo >= lo - SNAP and s.hi <= hi + SNAP]


def transform(segs, fn, tangency=None):
    """Apply ``fn`` to each piece expression; keeps classes and declared orders."""
    out = []
    for s in segs:
        tan = s.piece.tangency if tangency is None else tangency
        out.append(Seg(s.lo, s.hi, smooth(fn(piece_expr(s.piece)), tan), s.cls))
    return out


def _view_point(segs, y: float, lo: float, hi: float) -> float:
    """Point of ``[lo, hi]`` where the increasing view takes the value ``y``."""
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if evaluate_view(segs, mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _two_halves(lo, hi, make):
    """Seg list for a step-based expression split at its midpoint."""
    mid = 0.5 * (lo + hi)
    return [(lo, mid, make("lo")), (mid, hi, make("hi"))]


def _build(M: MapDescriptor, U: IntervalOnCircle, parity: str, canonical, window=None):
    """Apply a canonical-orientation rewrite to the window of ``U`` and splice."""
    lo, hi = operator_window(U) if window is None else window
    segs = view(M, lo, hi)
    a, b = float(U.a), float(U.b)
    c = a + b
    if parity == "even":
        segs = reflect_view(segs, c)
    new = canonical(segs, a, b)
    if parity == "even":
        new = reflect_view(new, c)
    return splice(M, lo, hi, new)


# ----------------------------------------------------------------------------
# bump primitives


@dataclass(frozen=True)
class Primitive:
    """A monotone connector on a window, stored as sub-pieces."""

    kind: str
    window: IntervalOnCircle
    parts: tuple  # (lo, hi, expr)
    tangency: tuple

    def __call__(self, x: float) -> float:
        for lo, hi, e in self.parts:
            if lo <= x <= hi:
                return float(E.evaluate(e, x))
        raise ValueError(f"{x} outside the window")

    def derivs(self, x: float, order: int, side: str | None = None) -> np.ndarray:
        parts = self.parts if side != "left" else tuple(reversed(self.parts))
        for lo, hi, e in parts:
            if lo <= x <= hi:
                return E.derivatives(e, [x], order)[:, 0]
        raise ValueError(f"{x} outside the window")


def bump_primitive(kind: str, window: IntervalOnCircle, amplitude: float,
                   order: int | None = None, base: float = 0.0) -> Primitive:
    """Monotone connector rising by ``amplitude`` over ``window``.

    ``flat-to-flat``: mollifier step, every derivative vanishing at both ends.
    ``flat-to-order-k``: ``base + amplitude u^k`` with ``u`` the window
    parameter, flat to the left of the window.
    """
    lo, hi = float(window.a), float(window.b)
    if not hi > lo:
        raise PreconditionError("window must have positive length")
    s = E.affine_map(lo, hi)
    if amplitude == 0.0:
        return Primitive(kind, window, ((lo, hi, E.Const(base)),), (INF, INF))
    if kind == "flat-to-flat":
        def make(at):
            return E.add(E.Const(base), E.scale(amplitude, E.unit_step(s, at)))
        parts = tuple(_two_halves(lo, hi, make))
        return Primitive(kind, window, parts, (INF, INF))
    if kind == "flat-to-order-k":
        if order is None or order < 1:
            raise PreconditionError("flat-to-order-k needs a positive order")
        e = E.add(E.Const(base), E.scale(amplitude, E.compose(E.Mono(0.0, order), s)))
        return Primitive(kind, window, ((lo, hi, e),), (order, None))
    raise PreconditionError(f"unknown primitive kind {kind!r}")


def _gap_segments(x0, x1, v0, rise):
    p = bump_primitive("flat-to-flat", IntervalOnCircle(x0, x1), rise, base=v0)
    (l0, l1, el), (h0, h1, eh) = p.parts
    return [Seg(l0, l1, smooth(el, (INF, None)), INF),
            Seg(h0, h1, smooth(eh, (None, INF)), INF)]


# ----------------------------------------------------------------------------
# flatten_split


@dataclass(frozen=True)
class SplitResult:
    map: MapDescriptor
    amplitude: float
    side: str
    norm: float
    norm_c0: float
    halvings: int


def _compensate(segs, y0, Y, fn_amp):
    """Compose arc pieces with a range-side step ramp.

    The arc runs from value ``y0`` to ``y0 + Y``; the added amount is
    ``fn_amp(step(s))`` with ``s = (y - y0) / Y``.  The step is split where
    ``s = 1/2`` so each end uses its exact form.
    """
    x0, x1 = segs[0].lo, segs[-1].hi
    xm = _view_point(segs, y0 + 0.5 * Y, x0, x1)
    segs = cut(segs, [xm])
    s = E.affine_map(y0, y0 + Y)
    out = []
    for seg in segs:
        at = "lo" if seg.hi <= xm else "hi"
        g = E.add(E.X, fn_amp(E.unit_step(s, at)))
        out.extend(transform([seg], lambda e, g=g: E.compose(g, e)))
    return out


def _split_canonical(A: float, side: str, e: float):
    def rewrite(segs, a, b):
        lo, hi = segs[0].lo, segs[-1].hi
        a, b = snap(segs, a), snap(segs, b)
        segs = cut(segs, [a, b])
        v = evaluate_view(segs, 0.5 * (a + b))
        cls_a = next(s.cls for s in segs if s.lo == a)
        left, right = within(segs, lo, a), within(segs, b, hi)
        if side == "right":
            vs, vk = v, v + A
            Y = evaluate_view(segs, hi) - v
            right = _compensate(right, v, Y, lambda st: E.add(E.Const(A), E.scale(-A, st)))
        else:
            vs, vk = v - A, v
            y0 = evaluate_view(segs, lo)
            left = _compensate(left, y0, v - y0, lambda st: E.scale(-A, st))
        mid = [Seg(a, a + e, flat(vs), cls_a)]
        mid += _gap_segments(a + e, a + 2 * e, vs, A)
        mid.append(Seg(a + 2 * e, b, flat(vk), INF))
        return left + mid + right
    return rewrite


def split_room(M: MapDescriptor, U: IntervalOnCircle, parity: str):
    """Rise available to the compensation on each side (canonical orientation)."""
    lo, hi = split_window(U)
    segs = view(M, lo, hi)
    a, b = float(U.a), float(U.b)
    if parity == "even":
        segs = reflect_view(segs, a + b)
    v = evaluate_view(segs, 0.5 * (a + b))
    return {"left": v - evaluate_view(segs, segs[0].lo),
            "right": evaluate_view(segs, segs[-1].hi) - v}


def split_with_amplitude(M: MapDescriptor, spec: SplitSpec, A: float, side: str) -> MapDescriptor:
    return _build(M, spec.flat, spec.parity, _split_canonical(A, side, spec.gap),
                  split_window(spec.flat))


def _check_split(G: MapDescriptor, spec: SplitSpec):
    rep = validate(G)
    if not rep.ok:
        raise InvariantRegression(f"flatten_split output fails {rep.failures()}")
    expected = split_components(spec.parity, spec.flat, spec.gap)
    got = flat_set(G)
    if not _same_components(got, expected):
        raise InvariantRegression(f"flat set {got} differs from {expected}")


def _same_components(got, expected, tol=1e-12) -> bool:
    if len(got) != len(expected):
        return False
    want = sorted((float(c.a) % 1.0, float(c.length)) for c in expected)
    have = sorted((float(c.a) % 1.0, float(c.length)) for c in got)
    return all(abs(x[0] - y[0]) <= tol and abs(x[1] - y[1]) <= tol for x, y in zip(have, want))


def flatten_split(M: MapDescriptor, spec: SplitSpec, verify: bool = True) -> SplitResult:
    """Split the flat interval into two flat components separated by ``e``.

    The change is linear in the amplitude, so the norm of one probe
    split fixes how many halvings from the full budget are needed; the
    result is then built and measured.
    """
    room = split_room(M, spec.flat, spec.parity)
    side = spec.side or max(room, key=room.get)
    A_mono = 0.5 * room[side] / step_slope()
    if A_mono <= 0.0:
        raise BudgetExceeded(f"no room to compensate on the {side}")
    j = spec.order
    if spec.amplitude is not None:
        A, halvings = float(spec.amplitude), 0
        if A > A_mono:
            raise BudgetExceeded(f"amplitude {A} breaks monotonicity (limit {A_mono})")
    else:
        # probe inside the admissible range: circle distances saturate at 1/2
        probe = min(A_mono, spec.delta)
        unit = float(cj_distance(split_with_amplitude(M, spec, probe, side), M, j)) / probe
        A, halvings = spec.delta, 0
        while A > A_mono or A * float(unit) >= 0.9 * spec.delta:
            A *= 0.5
            halvings += 1
            if halvings > MAX_HALVINGS:
                raise BudgetExceeded(
                    f"no amplitude within {MAX_HALVINGS} halvings of {spec.delta} fits the budget")
    G = split_with_amplitude(M, spec, A, side)
    norm = cj_distance(G, M, j)
    if verify:
        if norm >= spec.delta:
            raise BudgetExceeded(f"C^{j} distance {float(norm)} exceeds {spec.delta}")
        _check_split(G, spec)
    return SplitResult(G, A, side, float(norm), float(cj_distance(G, M, 0)), halvings)


# ----------------------------------------------------------------------------
# reflatten


@dataclass(frozen=True)
class ReflattenResult:
    map: MapDescriptor
    beta: float
    order: int
    norm: float
    margin: float
    images: tuple
    halvings: int


def _reflatten_canonical(beta: float, k: int, e: float, blend: float):
    """Erase ``(a, a + e)``; the kept component starts with order ``k``.

    ``blend`` is the length over which the old junction at ``a`` is
    flattened onto the erased component's value.
    """
    def rewrite(segs, a, b):
        lo, hi = segs[0].lo, segs[-1].hi
        a, b = snap(segs, a), snap(segs, b)
        a1, a2 = snap(segs, a + e), snap(segs, a + 2 * e)
        d = a - lo
        wt = 0.5 * d
        x0, x1 = a - blend, a - 0.5 * blend
        segs = cut(segs, [lo + 0.5 * wt, lo + wt, x0, 0.5 * (x0 + x1), x1, a, a1, a2, b])
        vs = evaluate_view(segs, a + 0.5 * e)
        phi = E.scale(beta * (-1.0) ** (k + 1), E.Mono(a2, k))
        out = []
        taper = E.affine_map(lo, lo + wt)
        for s in within(segs, lo, lo + wt):
            at = "lo" if s.hi <= lo + 0.5 * wt else "hi"
            chi = E.unit_step(taper, at)
            out += transform([s], lambda f, chi=chi: E.add(f, E.mul(chi, phi)))
        out += transform(within(segs, lo + wt, x0), lambda f: E.add(f, phi))
        ramp = E.affine_map(x0, x1)
        for s in within(segs, x0, x1):
            at = "lo" if s.hi <= 0.5 * (x0 + x1) else "hi"
            keep = E.add(E.ONE, E.scale(-1.0, E.unit_step(ramp, at)))
            out += transform([s], lambda f, keep=keep: E.add(
                E.Const(vs), E.mul(E.add(f, E.Const(-vs)), keep), phi), tangency=(None, None))
        out.append(Seg(x1, a1, smooth(E.add(E.Const(vs), phi)), INF))
        gap = transform(within(segs, a1, a2), lambda f: E.add(f, phi), tangency=(None, None))
        last = gap[-1]
        gap[-1] = replace(last, piece=replace(last.piece, tangency=(None, k)))
        out += gap
        out.append(Seg(a2, b, flat(evaluate_view(segs, 0.5 * (a2 + b))), k - 1))
        out += within(segs, b, hi)
        return out
    return rewrite


def reflatten_with(Mt: MapDescriptor, spec: ReflattenSpec, beta: float, blend: float | None = None):
    lo, _ = operator_window(spec.flat)
    d = float(spec.flat.a) - lo
    blend = 0.25 * d if blend is None else blend
    return _build(Mt, spec.flat, spec.parity,
                  _reflatten_canonical(beta, spec.junction_order, spec.gap, blend))


def containment(G: MapDescriptor, spec: ReflattenSpec):
    """Images of the test interval and the margin of the r-th inside the target."""
    test = spec.test or _shrunk(spec.erased)
    target = spec.window
    try:
        images = iterate_interval(G, test, spec.r)
    except DegenerateOrbit as exc:
        return tuple(exc.orbit), -math.inf
    last = images[-1]
    margin = _inner_margin(target, last)
    return tuple(images), margin


def _shrunk(I: IntervalOnCircle, frac: float = 0.25) -> IntervalOnCircle:
    w = float(I.length)
    return IntervalOnCircle(float(I.a) + frac * w, float(I.b) - frac * w)


def _inner_margin(target: IntervalOnCircle, J) -> float:
    """Smallest distance from ``J`` to the ends of ``target`` (negative if outside)."""
    L = float(target.length)
    da = float((J.a - target.a) % 1)
    db = float((J.b - target.a) % 1)
    if da >= L or db > L or db < da:
        return -min(abs(da - L), abs(1 - da))
    return min(da, L - db)


def flattening_blend(Mt: MapDescriptor, spec: ReflattenSpec) -> float:
    """Blend length whose flattening of the old junction costs under ``sigma/2``.

    That cost does not depend on ``beta``.
    """
    j = spec.n + 1 if spec.norm_order is None else spec.norm_order
    lo, _ = operator_window(spec.flat)
    blend = 0.25 * (float(spec.flat.a) - lo)
    for _ in range(20):
        base_cost = cj_distance(reflatten_with(Mt, spec, 0.0, blend), Mt, j)
        if base_cost < 0.5 * spec.sigma:
            return blend
        blend *= 0.5
    raise BudgetExceeded(f"flattening the old junction costs {float(base_cost)} > sigma/2")


def flattening_cost(k: int, j: int, blend: float, samples: int = 400) -> float:
    """C^j cost of flattening a unit junction ``(x - a)^k`` over ``blend``.

    This is what erasing a component later costs per unit of the junction
    coefficient; for ``k = j`` it does not shrink with the blend length.
    """
    a = 0.0
    x0, x1 = a - blend, a - 0.5 * blend
    xm = 0.5 * (x0 + x1)
    ramp = E.affine_map(x0, x1)
    worst = 0.0
    for lo, hi, at in ((x0, xm, "lo"), (xm, x1, "hi")):
        e = E.mul(E.Mono(a, k), E.unit_step(ramp, at))
        d = E.derivatives(e, np.linspace(lo, hi, samples), j)[j]
        worst = max(worst, float(np.max(np.abs(d))))
    d = E.derivatives(E.Mono(a, k), np.linspace(x1, a, samples // 4), j)[j]
    return max(worst, float(np.max(np.abs(d))))


def reflatten_candidates(Mt: MapDescriptor, spec: ReflattenSpec, blend: float | None = None,
                         beta_max: float | None = None):
    """Yield ``(G, beta, norm, halvings)`` for halving ``beta`` that pass
    validation and the ``sigma`` budget; the caller decides on containment.

    ``beta_max`` caps the starting coefficient (e.g. so that flattening the
    new junction at a later stage stays affordable).
    """
    j = spec.n + 1 if spec.norm_order is None else spec.norm_order
    blend = flattening_blend(Mt, spec) if blend is None else blend
    beta = spec.sigma if spec.beta is None else spec.beta
    if beta_max is not None and spec.beta is None:
        beta = min(beta, beta_max)
    for halvings in range(MAX_HALVINGS + 1):
        G = reflatten_with(Mt, spec, beta, blend)
        if validate(G).ok:
            norm = cj_distance(G, Mt, j)
            if norm < spec.sigma:
                yield G, beta, float(norm), halvings
        if spec.beta is not None:
            return
        beta *= 0.5


def reflatten(Mt: MapDescriptor, spec: ReflattenSpec) -> ReflattenResult:
    """Erase one flat component, leaving a junction of order ``k``.

    ``beta`` (the coefficient of the new junction) is halved from the full
    budget until the output is monotone, within ``sigma`` and keeps the
    ``r``-th image of the test interval inside the target window.
    """
    need = 1e-4 * float(spec.window.length)
    last_margin = None
    for G, beta, norm, halvings in reflatten_candidates(Mt, spec):
        images, margin = containment(G, spec)
        if margin > need:
            return ReflattenResult(G, beta, spec.junction_order, norm, margin, images, halvings)
        last_margin = margin
    if last_margin is not None:
        raise ContainmentLost(f"image left the target window for every admissible beta "
                              f"(last margin {last_margin})")
    raise BudgetExceeded("no admissible beta passes validation within sigma")


# ----------------------------------------------------------------------------
# micro_translate


def micro_translate(M: MapDescriptor, budget: float, rho, n: int,
                    horizon: int = 200_000) -> MapDescriptor:
    """Smallest-effort translation putting the rotation enclosure around ``rho``.

    Maps with a flat interval are tuned on the combinatorics of the flat
    value's orbit, which pins the translation to double resolution; other
    maps fall back to enclosure bisection.
    """
    if budget <= 0.0:
        raise PreconditionError("budget must be positive")
    rho = float(rho)
    t = M.translation
    comps = flat_set(M, check_hidden=False)
    if comps:
        rho = R.lift_target(M, rho, t, horizon)
        side = R.flat_return_side(M, rho, t, horizon)
        step, other = 1e-14, None
        while step <= budget:
            cand = t - side * step
            if R.flat_return_side(M, rho, cand, horizon) != side:
                other = cand
                break
            step *= 8.0
        if other is None:
            cand = t - side * budget
            if R.flat_return_side(M, rho, cand, horizon) != side:
                other = cand
        if other is None:
            raise BudgetExceeded(f"no translation within {budget} reaches rotation {rho}")
        lo, hi = sorted((t, other))
        lo, hi = R.tune_flat_return(M, rho, lo, hi, horizon)
        for cand in (hi, lo):
            out = M.with_translation(cand)
            if R.rotation_enclosure(out, n).contains(rho % 1.0):
                return out
        raise BudgetExceeded(f"tuned translation does not certify rotation {rho} at n={n}")
    lo, hi = t - budget, t + budget
    if not (R.rotation_enclosure(M.with_translation(lo), n).lower <= rho
            <= R.rotation_enclosure(M.with_translation(hi), n).upper):
        raise BudgetExceeded(f"no translation within {budget} reaches rotation {rho}")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        enc = R.rotation_enclosure(M.with_translation(mid), n)
        if enc.contains(rho) or not lo < mid < hi:
            return M.with_translation(mid)
        if enc.mid < rho:
            lo = mid
        else:
            hi = mid
    return M.with_translation(0.5 * (lo + hi))


def translation_delta(M1: MapDescriptor, M0: MapDescriptor) -> float:
    """Translation change between two normalisations of the same base."""
    d = M1.translation - M0.translation
    return d - round(d)
