"""Lifts of monotone degree-one circle maps built from flat and smooth pieces."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from functools import cached_property

import mpmath
import numpy as np

from . import expr as E
from . import vm
from .errors import (BreakpointNonSmooth, DegenerateOrbit, HiddenFlatRegion,
                     OrderMismatch, PreconditionError)

INF = math.inf
MAX_ORDER = 12
MAGIC = "mapdesc/1"


@dataclass(frozen=True)
class Piece:
    """One piece of the base map on ``[x_j, x_{j+1}]``.

    ``expr`` is ``None`` for a flat piece, which then has constant ``value``.
    ``tangency`` holds the declared vanishing orders at the left and right
    ends of a smooth junction piece (``None`` when nothing is declared).
    """

    expr: E.Expr | None = None
    value: float = 0.0
    tangency: tuple = (None, None)

    @property
    def is_flat(self) -> bool:
        return self.expr is None

    def derivs(self, xs, order: int) -> np.ndarray:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if self.is_flat:
            out = np.zeros((order + 1, xs.size))
            out[0] = self.value
            return out
        return E.derivatives(self.expr, xs, order)


def flat(value: float) -> Piece:
    return Piece(None, float(value))


def smooth(e: E.Expr, tangency=(None, None)) -> Piece:
    return Piece(e, 0.0, tuple(tangency))


@dataclass(frozen=True)
class IntervalOnCircle:
    """Open arc ``pi(a, b)`` given by lift coordinates ``a < b``."""

    a: object
    b: object

    @property
    def length(self):
        return self.b - self.a

    @property
    def mid(self):
        return (self.a + self.b) / 2

    def normalized(self) -> "IntervalOnCircle":
        k = math.floor(self.a) if isinstance(self.a, float) else int(mpmath.floor(self.a))
        return IntervalOnCircle(self.a - k, self.b - k)

    def contains(self, x, margin=0.0) -> bool:
        """Whether ``pi(x)`` lies in the arc shrunk by ``margin`` on each side."""
        lo = self.a + margin
        d = x - lo
        d = d - math.floor(d) if isinstance(d, float) else d - mpmath.floor(d)
        return 0 < d < self.length - 2 * margin

    def contains_interval(self, other: "IntervalOnCircle", margin=0.0) -> bool:
        if other.length >= self.length:
            return False
        return self.contains(other.a, margin) and self.contains(other.b, margin) \
            and _arc_offset(self.a, other.a) <= _arc_offset(self.a, other.b)

    def intersects(self, other: "IntervalOnCircle") -> bool:
        if self.length + other.length >= 1:
            return True
        d = _arc_offset(self.a, other.a)
        # other starts inside self, or self starts inside other
        return d < self.length or d > 1 - other.length

    def as_floats(self) -> "IntervalOnCircle":
        return IntervalOnCircle(float(self.a), float(self.b))


def _arc_offset(base, x):
    d = x - base
    return d - math.floor(d) if isinstance(d, float) else d - mpmath.floor(d)


@dataclass(frozen=True)
class CirclePoint:
    """Degenerate image of an interval."""

    x: float

    @property
    def length(self):
        return 0.0


@dataclass(frozen=True)
class MapDescriptor:
    """Piecewise closed-form lift ``F(x) = base(x - floor x) + floor x + t``.

    ``smoothness[j]`` is the intended smoothness class at ``x_j`` (``INF``
    for C-infinity joins); index 0 refers to the wrap point ``0 = 1``.
    """

    breakpoints: tuple
    pieces: tuple
    translation: float = 0.0
    smoothness: tuple = field(default=None)

    def __post_init__(self):
        bps = tuple(float(x) for x in self.breakpoints)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "translation", float(self.translation))
        if self.smoothness is None:
            object.__setattr__(self, "smoothness", (INF,) * (len(bps) - 1))
        if bps[0] != 0.0 or bps[-1] != 1.0:
            raise PreconditionError("breakpoints must run from 0 to 1")
        if any(b <= a for a, b in zip(bps, bps[1:])):
            raise PreconditionError("breakpoints must be strictly increasing")
        if len(self.pieces) != len(bps) - 1 or len(self.smoothness) != len(bps) - 1:
            raise PreconditionError("need one piece and one smoothness class per cell")

    # -- evaluation helpers ---------------------------------------------------
    @cached_property
    def program(self) -> vm.Program:
        kinds = [0 if p.is_flat else 1 for p in self.pieces]
        vals = [p.value for p in self.pieces]
        exprs = [p.expr for p in self.pieces]
        return vm.Program(self.breakpoints, kinds, vals, exprs, self.translation)

    @cached_property
    def _mp_pieces(self):
        return [None if p.is_flat else E.compile_mp(p.expr) for p in self.pieces]

    def piece_index(self, y: float) -> int:
        i = bisect.bisect_right(self.breakpoints, y) - 1
        return min(max(i, 0), len(self.pieces) - 1)

    def base(self, y: float) -> float:
        return float(vm._base(float(y), *self.program.args()[:-1]))

    def eval_mp(self, x):
        k = mpmath.floor(x)
        y = x - k
        i = self.piece_index(float(y))
        # float rounding may misplace y next to a breakpoint
        if y < self.breakpoints[i] and i > 0:
            i -= 1
        elif i + 1 < len(self.pieces) and y >= self.breakpoints[i + 1]:
            i += 1
        p = self.pieces[i]
        v = mpmath.mpf(p.value) if p.is_flat else self._mp_pieces[i](y)
        return v + k + self.translation

    def with_translation(self, t: float) -> "MapDescriptor":
        return normalize(MapDescriptor(self.breakpoints, self.pieces, t, self.smoothness))

    def shifted(self, tau: float) -> "MapDescriptor":
        return self.with_translation(self.translation + tau)

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)


def normalize(M: MapDescriptor) -> MapDescriptor:
    """Shift the translation by an integer so that ``F(0)`` lies in ``[0, 1)``."""
    f0 = M.pieces[0].value if M.pieces[0].is_flat else float(E.evaluate(M.pieces[0].expr, 0.0))
    k = math.floor(f0 + M.translation)
    if k == 0:
        return M
    return MapDescriptor(M.breakpoints, M.pieces, M.translation - k, M.smoothness)


def rotation_map(rho: float) -> MapDescriptor:
    """The lift ``x -> x + rho``."""
    return normalize(MapDescriptor((0.0, 1.0), (smooth(E.X),), rho))


# ----------------------------------------------------------------------------
# evaluation and derivatives


def eval_lift(M: MapDescriptor, x: float) -> float:
    return M.program(x)


def eval_many(M: MapDescriptor, xs) -> np.ndarray:
    xs = np.asarray(xs, dtype=float)
    k = np.floor(xs)
    y = xs - k
    out = np.empty_like(xs)
    idx = np.clip(np.searchsorted(M.breakpoints, y, side="right") - 1, 0, M.n_pieces - 1)
    for i in np.unique(idx):
        sel = idx == i
        out[sel] = M.pieces[i].derivs(y[sel], 0)[0]
    return out + k + M.translation


def _breakpoint_index(M: MapDescriptor, y: float, tol: float = 0.0):
    i = bisect.bisect_left(M.breakpoints, y - tol)
    if i < len(M.breakpoints) and abs(M.breakpoints[i] - y) <= tol:
        return i % M.n_pieces
    return None


def one_sided(M: MapDescriptor, y: float, side: str, order: int) -> np.ndarray:
    """Derivatives ``0..order`` of the base map at ``y`` from one side.

    ``y`` is a base coordinate; at a breakpoint the piece on ``side`` is used.
    """
    y = y - math.floor(y)
    j = _breakpoint_index(M, y)
    if j is not None:
        if side == "left":
            i = (j - 1) % M.n_pieces
            at = M.breakpoints[j] if j > 0 else 1.0
            out = M.pieces[i].derivs([at], order)[:, 0]
            if j == 0:
                out[0] -= 1.0
            return out
        return M.pieces[j].derivs([M.breakpoints[j]], order)[:, 0]
    return M.pieces[M.piece_index(y)].derivs([y], order)[:, 0]


def _close(u, v, tol=1e-9):
    return abs(u - v) <= tol * max(1.0, abs(u), abs(v))


def _order_scales(left, right):
    """Magnitude against which order ``i`` is compared.

    A vanishing derivative between two large neighbours carries roundoff of
    their size, so the scale is the geometric mean of the neighbouring orders.
    """
    mags = np.maximum(np.abs(left), np.abs(right))
    out = np.maximum(1.0, mags)
    out[1:-1] = np.maximum(out[1:-1], np.sqrt(mags[:-2] * mags[2:]))
    return out


def _mismatch(left, right, top):
    """Largest scaled disagreement over orders ``1..top`` and where it occurs."""
    scales = _order_scales(left, right)
    errs = np.abs(left - right)[1:top + 1] / scales[1:top + 1]
    i = int(np.argmax(errs))
    return float(errs[i]), i + 1


def derivative(M: MapDescriptor, m: int, x: float, side: str | None = None) -> float:
    if m < 1 or m > MAX_ORDER:
        raise PreconditionError(f"order must lie in 1..{MAX_ORDER}")
    y = x - math.floor(x)
    if side is None and _breakpoint_index(M, y) is not None:
        left = one_sided(M, y, "left", m + 1)
        right = one_sided(M, y, "right", m + 1)
        err, i = _mismatch(left, right, m)
        if err > 1e-9:
            raise BreakpointNonSmooth(
                f"one-sided derivatives of order {i} differ at {x}: {left[i]} vs {right[i]}")
        return float(right[m])
    return float(one_sided(M, y, side or "right", m)[m])


# ----------------------------------------------------------------------------
# intervals


def image_interval(M: MapDescriptor, I: IntervalOnCircle, mp: bool = False):
    if mp:
        fa, fb = M.eval_mp(I.a), M.eval_mp(I.b)
    else:
        fa, fb = eval_lift(M, float(I.a)), eval_lift(M, float(I.b))
    if fb <= fa:
        return CirclePoint(float(fa) - math.floor(float(fa)))
    return IntervalOnCircle(fa, fb).normalized()


def iterate_interval(M: MapDescriptor, I: IntervalOnCircle, n: int, dps: int | None = 60):
    """Images ``f^j(I)`` for ``j = 1..n``; high precision unless ``dps`` is None."""
    if n < 1:
        raise PreconditionError("n must be >= 1")
    out = []
    if dps is None:
        a, b = float(I.a), float(I.b)
        for j in range(1, n + 1):
            a, b = eval_lift(M, a), eval_lift(M, b)
            if b <= a:
                raise DegenerateOrbit(j, out)
            out.append(IntervalOnCircle(a, b).normalized())
        return out
    with mpmath.workdps(dps):
        a, b = mpmath.mpf(I.a), mpmath.mpf(I.b)
        for j in range(1, n + 1):
            a, b = M.eval_mp(a), M.eval_mp(b)
            if b <= a:
                raise DegenerateOrbit(j, out)
            out.append(IntervalOnCircle(a, b).normalized())
    return out


# ----------------------------------------------------------------------------
# norms


@dataclass(frozen=True)
class NormEstimate:
    """Sampled C^j distance, a lower bound for the true sup."""

    value: float
    converged: bool
    grid: int
    by_order: tuple = ()

    def __float__(self):
        return float(self.value)

    def __lt__(self, other):
        return self.value < float(other)

    def __le__(self, other):
        return self.value <= float(other)

    def __gt__(self, other):
        return self.value > float(other)

    def __ge__(self, other):
        return self.value >= float(other)


def _cell_samples(u: float, v: float, count: int) -> np.ndarray:
    # uniform points plus geometric clustering toward both ends
    w = v - u
    s = np.linspace(0.0, 1.0, count)
    g = np.geomspace(1e-7, 0.5, max(8, count // 8))
    s = np.unique(np.concatenate([s, g, 1.0 - g]))
    return u + w * s


def _sup_diff(M1, M2, j, grid):
    cuts = sorted(set(M1.breakpoints) | set(M2.breakpoints))
    best = np.zeros(j + 1)
    for u, v in zip(cuts, cuts[1:]):
        count = max(16, int(grid * (v - u)))
        xs = _cell_samples(u, v, count)
        mid = 0.5 * (u + v)
        d1 = M1.pieces[M1.piece_index(mid)].derivs(xs, j)
        d2 = M2.pieces[M2.piece_index(mid)].derivs(xs, j)
        d1[0] += M1.translation
        d2[0] += M2.translation
        diff = np.abs(d1 - d2)
        # lifts normalised on opposite sides of an integer are the same map
        diff[0] = np.abs((d1[0] - d2[0] + 0.5) % 1.0 - 0.5)
        diff[~np.isfinite(diff)] = 0.0
        best = np.maximum(best, diff.max(axis=1))
    return best


def cj_distance(M1: MapDescriptor, M2: MapDescriptor, j: int, grid: int = 2000,
                rtol: float = 1e-10, max_refine: int = 4) -> NormEstimate:
    """Sampled ``max_{i<=j} sup |F1^(i) - F2^(i)|`` over one period."""
    if j < 0:
        raise PreconditionError("j must be >= 0")
    prev = _sup_diff(M1, M2, j, grid)
    converged = False
    g = grid
    for _ in range(max_refine):
        g *= 2
        cur = _sup_diff(M1, M2, j, g)
        change = float(np.max(np.abs(cur - prev)))
        scale = max(float(np.max(cur)), 1e-300)
        prev = cur
        if change <= rtol * scale or change == 0.0:
            converged = True
            break
    return NormEstimate(float(np.max(prev)), converged, g, tuple(float(v) for v in prev))


# ----------------------------------------------------------------------------
# flat set and tangency


def flat_set(M: MapDescriptor, check_hidden: bool = True, max_order: int = MAX_ORDER):
    """Maximal arcs on which the map is flat, as lift intervals with ``a`` in [0,1)."""
    runs = []
    for i, p in enumerate(M.pieces):
        if not p.is_flat:
            continue
        lo, hi = M.breakpoints[i], M.breakpoints[i + 1]
        if runs and runs[-1][1] == lo:
            runs[-1][1] = hi
        else:
            runs.append([lo, hi])
    if len(runs) > 1 and runs[0][0] == 0.0 and runs[-1][1] == 1.0:
        first = runs.pop(0)
        runs[-1][1] = 1.0 + first[1]
    if len(runs) == 1 and runs[0][0] == 0.0 and runs[0][1] == 1.0:
        raise PreconditionError("map is flat everywhere")
    if check_hidden:
        _check_hidden(M, max_order)
    return [IntervalOnCircle(a, b) for a, b in sorted(runs)]


def _check_hidden(M: MapDescriptor, max_order: int):
    for i, p in enumerate(M.pieces):
        if p.is_flat:
            continue
        lo, hi = M.breakpoints[i], M.breakpoints[i + 1]
        xs = lo + (hi - lo) * (np.arange(64) + 0.5) / 64
        d = p.derivs(xs, max_order)[1:]
        d[~np.isfinite(d)] = np.inf
        # a C-infinity connector is below any fixed threshold near its flat
        # ends, so only derivatives that vanish exactly count as flat
        vanish = np.max(np.abs(d), axis=0) == 0.0
        run = 0
        for k, v in enumerate(vanish):
            run = run + 1 if v else 0
            if run >= 3:
                raise HiddenFlatRegion(
                    f"piece {i} on [{lo}, {hi}] has vanishing derivatives near {xs[k]}")


def tangency_order(M: MapDescriptor, endpoint: float, side: str, max_order: int = 24) -> int:
    """Vanishing order of the junction piece on ``side`` of a flat endpoint."""
    y = endpoint - math.floor(endpoint)
    j = _breakpoint_index(M, y, tol=1e-12)
    if j is None:
        raise PreconditionError(f"{endpoint} is not a breakpoint")
    if side == "right":
        piece = M.pieces[j]
        declared = piece.tangency[0]
    else:
        piece = M.pieces[(j - 1) % M.n_pieces]
        declared = piece.tangency[1]
    top = max_order if declared in (None, INF) else max(declared + 1, 2)
    d = one_sided(M, M.breakpoints[j], side, top)
    measured = None
    for k in range(1, top + 1):
        if abs(d[k]) > 1e-8:
            measured = k
            break
    if declared == INF and measured is None:
        return INF
    if declared is not None and measured != declared:
        raise OrderMismatch(declared, measured, endpoint)
    if measured is None:
        raise OrderMismatch(declared, None, endpoint)
    return measured


# ----------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    margin: float
    location: float | None = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]


def validate(M: MapDescriptor, samples: int = 256) -> ValidationReport:
    checks = []
    n = M.n_pieces
    worst, where = 0.0, None
    for j in range(n):
        left = one_sided(M, M.breakpoints[j], "left", 0)[0]
        right = one_sided(M, M.breakpoints[j], "right", 0)[0]
        gap = abs(left - right)
        if gap >= worst:
            worst, where = gap, M.breakpoints[j]
    checks.append(Check("continuity", worst <= 1e-12, 1e-12 - worst, where))

    lowest, where = math.inf, None
    for i, p in enumerate(M.pieces):
        lo, hi = M.breakpoints[i], M.breakpoints[i + 1]
        xs = np.linspace(lo, hi, samples)
        d = p.derivs(xs, 1)
        rise = d[0][-1] - d[0][0]
        k = int(np.argmin(d[1]))
        if d[1][k] < lowest:
            lowest, where = float(d[1][k]), float(xs[k])
        if rise < -1e-12 and rise < lowest:
            lowest, where = rise, lo
    checks.append(Check("monotone", lowest >= -1e-12, lowest, where))

    worst, where = 0.0, None
    for j in range(n):
        cls = M.smoothness[j]
        top = int(min(cls, MAX_ORDER))
        if top < 1:
            continue
        left = one_sided(M, M.breakpoints[j], "left", top + 1)
        right = one_sided(M, M.breakpoints[j], "right", top + 1)
        err, _ = _mismatch(left, right, top)
        if err > worst:
            worst, where = err, M.breakpoints[j]
    checks.append(Check("smoothness", worst <= 1e-9, 1e-9 - worst, where))

    rng = np.random.default_rng(0)
    xs = rng.uniform(-2.0, 2.0, 64)
    err = float(np.max(np.abs(eval_many(M, xs + 1.0) - eval_many(M, xs) - 1.0)))
    checks.append(Check("degree_one", err < 1e-12, 1e-12 - err))

    f0 = eval_lift(M, 0.0)
    checks.append(Check("normalized", 0.0 <= f0 < 1.0, min(f0, 1.0 - f0), 0.0))
    return ValidationReport(tuple(checks))


# ----------------------------------------------------------------------------
# text form


def _cls_text(c):
    return "inf" if c == INF else str(int(c))


def _order_text(k):
    return "-" if k is None else str(k)


def to_text(M: MapDescriptor) -> str:
    lines = [MAGIC, f"breakpoints {len(M.breakpoints)}"]
    for j, x in enumerate(M.breakpoints):
        cls = _cls_text(M.smoothness[j]) if j < M.n_pieces else "-"
        lines.append(f"{x!r} {cls}")
    lines.append(f"pieces {M.n_pieces}")
    for p in M.pieces:
        if p.is_flat:
            lines.append(f"FLAT {float(p.value)!r}")
        else:
            kl, kr = p.tangency
            lines.append(f"SMOOTH {_order_text(kl)} {_order_text(kr)} {E.to_prefix(p.expr)}")
    lines.append(f"translation {M.translation!r}")
    return "\n".join(lines) + "\n"


def from_text(text: str) -> MapDescriptor:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].strip() != MAGIC:
        raise ValueError(f"missing '{MAGIC}' header")
    pos = 1
    nb = int(lines[pos].split()[1])
    pos += 1
    bps, cls = [], []
    for ln in lines[pos:pos + nb]:
        x, c = ln.split()
        bps.append(float(x))
        if c != "-":
            cls.append(INF if c == "inf" else int(c))
    pos += nb
    npieces = int(lines[pos].split()[1])
    pos += 1
    pieces = []
    for ln in lines[pos:pos + npieces]:
        kind, rest = ln.split(None, 1)
        if kind == "FLAT":
            pieces.append(flat(float(rest)))
        elif kind == "SMOOTH":
            kl, kr, body = rest.split(None, 2)
            tang = tuple(None if k == "-" else int(k) for k in (kl, kr))
            pieces.append(smooth(E.from_prefix(body), tang))
        else:
            raise ValueError(f"unknown piece kind {kind!r}")
    pos += npieces
    key, t = lines[pos].split()
    if key != "translation":
        raise ValueError("missing translation line")
    return MapDescriptor(tuple(bps), tuple(pieces), float(t), tuple(cls))
