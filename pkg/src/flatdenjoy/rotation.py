"""Rotation-number enclosures and translation tuning."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import vm
from .circle_core import MapDescriptor, flat_set
from .errors import NotBracketed, PreconditionError, RationalDetected


@dataclass(frozen=True)
class EnclosureResult:
    lower: float
    upper: float
    n: int
    x0: float

    @property
    def width(self) -> float:
        # the bracket is (d - 1)/n .. (d + 1)/n; subtracting the rounded ends
        # would add an ulp of noise to the exact 2/n
        return 2.0 / self.n

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def contains(self, rho: float) -> bool:
        return self.lower <= rho <= self.upper

    def intersects(self, other: "EnclosureResult") -> bool:
        return self.lower <= other.upper and other.lower <= self.upper


@dataclass(frozen=True)
class TuneResult:
    t0: float
    enclosure: EnclosureResult
    steps: int
    half_width: float


@dataclass(frozen=True)
class QuadraticIrrational:
    """A target rotation number with an eventually periodic expansion.

    ``head`` are the leading partial quotients after the integer part and
    ``period`` repeats forever.
    """

    name: str
    value: float
    head: tuple = ()
    period: tuple = (1,)

    def quotients(self, k: int):
        out = list(self.head)
        while len(out) < k:
            out.extend(self.period)
        return out[:k]

    def __float__(self):
        return self.value


GOLDEN = QuadraticIrrational("golden", (math.sqrt(5.0) - 1.0) / 2.0, (), (1,))
SILVER = QuadraticIrrational("silver", math.sqrt(2.0) - 1.0, (), (2,))
NAMED = {"golden": GOLDEN, "silver": SILVER}


def from_quotients(quotients, period=()) -> QuadraticIrrational:
    """Build ``[0; a1, a2, ...]`` from leading quotients and a repeating block."""
    head = tuple(int(a) for a in quotients)
    period = tuple(int(a) for a in period)
    if any(a < 1 for a in head + period):
        raise PreconditionError("partial quotients must be positive")
    # evaluate the periodic tail as a fixed point, then fold in the head
    tail = 0.0
    if period:
        y = 1.0
        for _ in range(200):
            for a in reversed(period):
                y = a + 1.0 / y
            # y now approximates [a1; a2, ...] of the periodic block
        tail = 1.0 / y
    x = tail
    for a in reversed(head):
        x = 1.0 / (a + x)
    name = "cf:" + ",".join(map(str, head)) + ("/" + ",".join(map(str, period)) if period else "")
    return QuadraticIrrational(name, x, head, period or (0,))


def rotation_enclosure(M: MapDescriptor, n: int, x0: float = 0.0) -> EnclosureResult:
    if n < 1:
        raise PreconditionError("n must be >= 1")
    y = M.program.orbit_end(x0, n)
    d = y - x0
    return EnclosureResult((d - 1.0) / n, (d + 1.0) / n, n, x0)


def _midpoint(M: MapDescriptor, t: float, n: int, x0: float) -> float:
    return (M.program.orbit_end(x0, n, t) - x0) / n


def _graded_midpoint(M: MapDescriptor, t: float, n: int, x0: float, rho: float):
    """Enclosure midpoint at the smallest of ``n/1000, n/100, ..., n`` whose
    enclosure excludes ``rho`` (each enclosure is rigorous, so that already
    decides the side); ``n`` itself otherwise."""
    k = max(1, n // 1000)
    while True:
        m = _midpoint(M, t, k, x0)
        if k >= n or abs(m - rho) > 1.0 / k:
            return m, k
        k = min(n, 10 * k)


def tune_translation(M: MapDescriptor, rho: float, tol: float, n: int,
                     x0: float = 0.0) -> TuneResult:
    """Bisection on ``t`` in ``[0, 1)`` using enclosure midpoints of ``F + t``.

    ``M.translation`` is ignored: the family is ``base + t``.
    """
    rho = float(rho)
    if tol * n < 1.0:
        raise PreconditionError(
            f"tol={tol} is finer than the enclosure half-width 1/n={1.0 / n}")
    if not 0.0 <= rho < 1.0:
        raise PreconditionError("target must lie in [0, 1)")
    # the base may start anywhere; shift the bracket so F_t(0) sweeps one period
    f0 = M.program.orbit_end(0.0, 1, 0.0)
    lo, hi = -f0, 1.0 - f0
    if not (_midpoint(M, lo, n, x0) - 1.0 / n <= rho <= _midpoint(M, hi, n, x0) + 1.0 / n):
        raise NotBracketed("rotation numbers of F and F+1 do not straddle the target")
    # the finite-n midpoint is continuous and monotone in t but very steep
    # near irrational targets, so a narrow t-bracket alone is not enough
    steps = 0
    t0 = None
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        m, k = _graded_midpoint(M, mid, n, x0, rho)
        if k == n and hi - lo < tol / 4 and abs(m - rho) <= 1.0 / n:
            t0 = mid
            break
        if m < rho:
            lo = mid
        else:
            hi = mid
        steps += 1
    if t0 is None:
        # double resolution reached; keep whichever end lands closest
        t0 = min((lo, hi), key=lambda t: abs(_midpoint(M, t, n, x0) - rho))
    tuned = M.with_translation(t0)
    enc = rotation_enclosure(tuned, n, x0)
    if not (enc.lower <= rho + tol and rho - tol <= enc.upper):
        raise NotBracketed(f"no translation brings the enclosure within {tol} of {rho}")
    return TuneResult(tuned.translation, enc, steps, 0.5 * (hi - lo))


def _flat_arrays(M: MapDescriptor):
    comps = flat_set(M, check_hidden=False)
    if not comps:
        return None
    # widest first: its value starts the orbit
    comps = sorted(comps, key=lambda c: -float(c.length))
    los = np.array([float(c.a) for c in comps])
    his = np.array([float(c.b) for c in comps])
    return los, his


def tune_flat_return(M: MapDescriptor, rho: float, t_lo: float, t_hi: float,
                     horizon: int = 200_000):
    """Sharp tuning for maps with a flat interval.

    Bisects the translation on the combinatorics of the flat values' orbit:
    a cycle through the flat components of length ``q`` with ``p`` turns
    pins the rotation number to ``p/q`` exactly.  Converges to double
    resolution.  Returns the final bracket ``(t_lo, t_hi)``.
    """
    arrays = _flat_arrays(M)
    if arrays is None:
        raise PreconditionError("map has no flat interval")
    args = M.program.args()[:-1]
    return vm.return_bisect(float(t_lo), float(t_hi), float(rho), *arrays, int(horizon), *args)


def lift_target(M: MapDescriptor, rho: float, t: float, horizon: int = 200_000) -> float:
    """``rho`` shifted by the integer that brings it nearest the rotation of
    the lift ``base + t`` (the lift's rotation is only fixed mod 1)."""
    args = M.program.args()[:-1]
    q, p, d = vm.flat_cycle(*_flat_arrays(M), int(horizon), *args, float(t))
    raw = p / q if q > 0 else d / horizon
    return float(rho) + round(raw - float(rho))


def flat_return_side(M: MapDescriptor, rho: float, t: float, horizon: int = 200_000) -> int:
    """-1 if ``base + t`` rotates slower than ``rho`` by the flat-cycle test, else +1."""
    args = M.program.args()[:-1]
    below = vm.cycle_below(float(rho), *_flat_arrays(M), int(horizon), *args, float(t))
    return -1 if below else 1


def return_times(rho, K: int):
    """First ``K`` continued-fraction denominators ``q_1 < q_2 < ...``."""
    if K < 1:
        raise PreconditionError("K must be >= 1")
    if isinstance(rho, QuadraticIrrational):
        quotients = rho.quotients(K + 1)
    else:
        x = float(rho)
        if not 0.0 < x < 1.0:
            raise PreconditionError("target must lie in (0, 1)")
        quotients = []
        # terminate on an (almost) exact rational: remainder vanishes
        y = x
        for _ in range(K + 1):
            if y < 1e-9:
                break
            inv = 1.0 / y
            a = math.floor(inv + 1e-9)
            quotients.append(a)
            y = inv - a
            if abs(y) < 1e-9 or abs(1 - y) < 1e-9:
                if abs(1 - y) < 1e-9:
                    quotients[-1] += 1
                y = 0.0
    qs = []
    q_prev, q = 0, 1
    for a in quotients:
        q_prev, q = q, a * q + q_prev
        if not qs or q > qs[-1]:
            qs.append(q)
        if len(qs) == K:
            break
    if len(qs) < K:
        raise RationalDetected(f"expansion of {float(rho)} terminates after {len(qs)} terms")
    return qs
