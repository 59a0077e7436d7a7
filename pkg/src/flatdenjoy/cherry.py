"""First-return view of the Cherry flow: sink-bound orbits, the gap cover of
the non-wandering set, attractor proxies and suspension traces."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .circle_core import IntervalOnCircle, MapDescriptor, eval_lift, flat_set
from .csvio import csv_text
from .errors import InverseBranchAmbiguous, PreconditionError

HAUSDORFF_TOL = 1e-3
MINIMALITY_TOL = 5e-3
TRACE_SAMPLES = 64
Z95 = 1.959963984540054


# ----------------------------------------------------------------------------
# orbit classification


@dataclass(frozen=True)
class OrbitClass:
    """``tag`` is ``"SinkBound"`` (with the entry step ``j``), ``"AttractorCandidate"``
    or ``"Unresolved"`` (with the budget ``N``)."""

    tag: str
    j: int | None = None
    N: int | None = None

    def __str__(self):
        if self.tag == "SinkBound":
            return f"SinkBound({self.j})"
        if self.tag == "Unresolved":
            return f"Unresolved({self.N})"
        return self.tag


def _flat_arcs(M: MapDescriptor):
    return [(float(c.a), float(c.b)) for c in flat_set(M, check_hidden=False)]


def _in_open(fr: np.ndarray, arcs) -> np.ndarray:
    """Mask of fractional parts lying in the open union of the arcs."""
    hit = np.zeros(fr.shape, dtype=bool)
    for a, b in arcs:
        d = (fr - a) % 1.0
        hit |= (d > 0.0) & (d < b - a)
    return hit


def _circle_gaps(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Distance on the circle from every point of ``u`` to the nearest point of ``v``."""
    v = np.sort(v % 1.0)
    u = u % 1.0
    idx = np.searchsorted(v, u)
    left = v[(idx - 1) % len(v)]
    right = v[idx % len(v)]
    dl = (u - left) % 1.0
    dr = (right - u) % 1.0
    return np.minimum(dl, dr)


def hausdorff(u, v) -> float:
    """Hausdorff distance between two finite point sets on the circle."""
    u, v = np.asarray(u, float), np.asarray(v, float)
    return float(max(_circle_gaps(u, v).max(), _circle_gaps(v, u).max()))


def _orbit(M: MapDescriptor, x: float, N: int) -> np.ndarray:
    return M.program.orbit_parts(float(x), int(N) - 1)[0]


def _classify_orbit(fr: np.ndarray, arcs, N: int) -> OrbitClass:
    """``fr`` holds the fractional parts of ``f^j(x)`` for ``j < N``."""
    inside = _in_open(fr, arcs)
    if inside.any():
        return OrbitClass("SinkBound", j=int(np.argmax(inside)))
    h1, h2, h3 = N // 2, (3 * N) // 4, N
    if h2 > h1 and h3 > h2:
        if hausdorff(fr[h1:h2], fr[h2:h3]) < HAUSDORFF_TOL:
            return OrbitClass("AttractorCandidate")
    return OrbitClass("Unresolved", N=N)


def classify_point(M: MapDescriptor, x: float, N: int) -> OrbitClass:
    """Sort ``x`` into sink-bound or attractor-bound from ``f^j(x)``, ``j < N``.

    Entering the open flat interval means the flow orbit falls into the sink;
    boundary points are never sink-bound.
    """
    if N < 1:
        raise PreconditionError("N must be >= 1")
    fr = _orbit(M, x, N)
    return _classify_orbit(fr, _flat_arcs(M), int(N))


# ----------------------------------------------------------------------------
# basin estimate


@dataclass(frozen=True)
class BasinReport:
    samples: int
    N: int
    sink: float
    attractor: float
    unresolved: float
    half_width: float
    grid_sink: float
    grid_attractor: float
    grid_unresolved: float
    seed: int
    I_probes: int = 0
    I_attractor: bool | None = None

    def rows(self):
        return [(k, getattr(self, k)) for k in (
            "samples", "N", "seed", "sink", "attractor", "unresolved", "half_width",
            "grid_sink", "grid_attractor", "grid_unresolved", "I_probes", "I_attractor")]


def _fractions(classes):
    n = len(classes)
    tags = [c.tag for c in classes]
    return (tags.count("SinkBound") / n, tags.count("AttractorCandidate") / n,
            tags.count("Unresolved") / n)


def probes(I: IntervalOnCircle, count: int = 5):
    """Endpoints and evenly spaced interior points of ``I``."""
    return [float(x) for x in np.linspace(float(I.a), float(I.b), count)]


def basin_estimate(M: MapDescriptor, samples: int, N: int, seed: int,
                   I: IntervalOnCircle | None = None) -> BasinReport:
    """Classify a seeded uniform sample and a regular grid of the circle.

    The half width is the 95% normal-approximation interval of the sample's
    sink-bound fraction.  With ``I`` given, its probes are classified too.
    """
    if samples < 100:
        raise PreconditionError("samples must be >= 100")
    arcs = _flat_arcs(M)
    rng = np.random.default_rng(seed)

    def classes(xs):
        return [_classify_orbit(_orbit(M, x, N), arcs, int(N))
                for x in xs]

    sink, attr, unres = _fractions(classes(rng.random(samples)))
    gs, ga, gu = _fractions(classes((np.arange(samples) + 0.5) / samples))
    hw = Z95 * math.sqrt(sink * (1.0 - sink) / samples)
    n_probe, i_ok = 0, None
    if I is not None:
        pr = probes(I)
        n_probe = len(pr)
        i_ok = all(c.tag == "AttractorCandidate" for c in classes(pr))
    return BasinReport(samples, int(N), sink, attr, unres, hw, gs, ga, gu, int(seed),
                       n_probe, i_ok)


# ----------------------------------------------------------------------------
# gap cover


@dataclass(frozen=True)
class GapCover:
    intervals: tuple  # (depth, a, b) before merging, a in [0, 1)
    merged: tuple  # disjoint (a, b) arcs, a in [0, 1)
    length: float
    ambiguous: tuple = ()  # (depth, endpoint) set to a flat boundary

    def complement(self):
        """Arcs of the circle not covered: the depth-N approximation of the non-wandering set."""
        arcs = sorted(self.merged)
        out = []
        for (a0, b0), (a1, _) in zip(arcs, arcs[1:] + [(arcs[0][0] + 1.0, None)]):
            if a1 > b0:
                out.append((b0 % 1.0, b0 % 1.0 + (a1 - b0)))
        return out


def _lift_solve(M: MapDescriptor, c: float, lo: float, hi: float, upper: bool) -> float:
    """Bisect the monotone lift on ``[lo, hi]``: the last ``x`` with ``F(x) <= c``
    (``upper=False``) or the first with ``F(x) >= c`` (``upper=True``)."""
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        v = eval_lift(M, mid)
        if (v >= c) if upper else (v > c):
            hi = mid
        else:
            lo = mid
    return hi if upper else lo


def preimage(M: MapDescriptor, a: float, b: float):
    """Open arc ``f^{-1}(pi(a, b))`` by bisection on the lift, plus the
    endpoints that landed on a flat value."""
    F0 = eval_lift(M, 0.0)
    ca = a + math.ceil(F0 - a)  # lift of a into [F0, F0 + 1)
    cb = ca + (b - a)
    x_a = _lift_solve(M, ca, 0.0, 1.0, upper=False)
    x_b = _lift_solve(M, cb, x_a, x_a + 1.0, upper=True)
    flagged = []
    for x, c in ((x_a, ca), (x_b, cb)):
        if _on_flat(M, x, c):
            flagged.append(x)
    return x_a, x_b, flagged


def _on_flat(M: MapDescriptor, x: float, c: float, tol: float = 1e-15) -> bool:
    y = x - math.floor(x)
    for arc in flat_set(M, check_hidden=False):
        lo, hi = float(arc.a), float(arc.b)
        d = (y - lo) % 1.0
        if d <= hi - lo + tol or d >= 1.0 - tol:
            v = eval_lift(M, lo + 0.5 * (hi - lo))
            if abs((v - c) - round(v - c)) <= tol:
                return True
    return False


def _merge(arcs):
    """Union of arcs ``(a, b)`` with ``a`` in [0, 1); arcs may run past 1."""
    pieces = []
    for a, b in arcs:
        if b - a >= 1.0:
            return [(0.0, 1.0)]
        if b <= 1.0:
            pieces.append((a, b))
        else:
            pieces.append((a, 1.0))
            pieces.append((0.0, b - 1.0))
    pieces.sort()
    out = []
    for a, b in pieces:
        if out and a <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    # rejoin the arc that wraps through 0
    if len(out) > 1 and out[0][0] == 0.0 and out[-1][1] == 1.0:
        first = out.pop(0)
        out[-1] = (out[-1][0], 1.0 + first[1])
    return out


def gap_cover(M: MapDescriptor, N: int, strict: bool = False) -> GapCover:
    """Union of ``f^{-j}(int U)`` for ``j = 0..N``.

    Preimage endpoints landing on a flat value are moved to the flat piece's
    boundary and listed in ``ambiguous``; ``strict=True`` raises instead.
    """
    comps = flat_set(M, check_hidden=False)
    if len(comps) != 1:
        raise PreconditionError(f"need a unique flat interval, found {len(comps)}")
    if N < 0:
        raise PreconditionError("N must be >= 0")
    U = comps[0]
    a, b = float(U.a), float(U.b)
    found = [(0, a, b)]
    ambiguous = []
    for j in range(1, N + 1):
        xa, xb, flagged = preimage(M, a, b)
        if flagged:
            if strict:
                raise InverseBranchAmbiguous(f"depth {j}: preimage endpoint on a flat piece")
            ambiguous += [(j, x) for x in flagged]
        k = math.floor(xa)
        a, b = xa - k, xb - k
        found.append((j, a, b))
    merged = _merge([(x, y) for _, x, y in found])
    length = min(1.0, sum(y - x for x, y in merged))
    return GapCover(tuple(found), tuple(merged), length, tuple(ambiguous))


# ----------------------------------------------------------------------------
# attractor proxies


@dataclass(frozen=True)
class AttractorReport:
    item1: bool
    item1_detail: str
    profile: tuple  # (depth, worst distance from the orbit to an omega component)
    h: float
    heuristic: bool = True

    @property
    def item2(self) -> bool:
        return bool(self.profile) and self.profile[-1][1] <= self.h


def _arc_distance(pts: np.ndarray, a: float, b: float) -> float:
    """Circle distance from the point set to the closed arc ``[a, b]``."""
    d = (pts - a) % 1.0
    L = b - a
    if np.any(d <= L):
        return 0.0
    return float(np.min(np.minimum(d - L, 1.0 - d)))


def attractor_check(M: MapDescriptor, I: IntervalOnCircle, N: int,
                    depths=(1, 2, 4, 8, 16, 32), samples: int = 200, seed: int = 0,
                    h: float = MINIMALITY_TOL) -> AttractorReport:
    """Heuristic proxies for the two attractor properties.

    Item 1: some sampled points and every probe of ``I`` are attractor-bound.
    Item 2: for each depth, the largest distance from the orbit of ``I``'s
    midpoint to a component of the depth-``d`` non-wandering approximation.
    """
    comps = flat_set(M, check_hidden=False)
    if not comps:
        return AttractorReport(False, "no flat interval", (), h)
    rep = basin_estimate(M, samples, N, seed, I)
    item1 = rep.attractor > 0.0 and bool(rep.I_attractor)
    detail = f"attractor fraction {rep.attractor:.4f}, I probes all attractor-bound: {rep.I_attractor}"
    profile = []
    if len(comps) == 1:
        fr = _orbit(M, I.mid, N)
        for d in depths:
            omega = gap_cover(M, d).complement()
            worst = max((_arc_distance(fr, a, b) for a, b in omega), default=0.0)
            profile.append((int(d), worst))
    return AttractorReport(item1, detail, tuple(profile), h)


# ----------------------------------------------------------------------------
# suspension


@dataclass(frozen=True)
class SuspensionTrace:
    x: np.ndarray = field(repr=False)  # positions on the circle, in [0, 1)
    s: np.ndarray = field(repr=False)  # time within the period, in [0, 1]
    period: np.ndarray = field(repr=False)
    x0: float = 0.0
    periods: int = 0

    @property
    def duration(self) -> float:
        return float(self.periods)


def suspension_trace(M: MapDescriptor, x0: float, periods: int,
                     samples: int = TRACE_SAMPLES) -> SuspensionTrace:
    """Trace of the suspension flow over ``periods`` returns.

    Within a period the lift moves linearly from ``x_k`` to ``F(x_k)``, so a
    rotation draws a straight torus line and a fixed point a vertical loop;
    at ``s = 1`` the trace restarts from ``f(x_k)`` at ``s = 0``.
    """
    if periods < 1:
        raise PreconditionError("periods must be >= 1")
    orb = M.program.orbit(float(x0), int(periods))
    s = np.linspace(0.0, 1.0, samples + 1)
    xs, ss, ks = [], [], []
    for k in range(periods):
        xs.append((orb[k] + s * (orb[k + 1] - orb[k])) % 1.0)
        ss.append(s)
        ks.append(np.full(s.shape, k))
    return SuspensionTrace(np.concatenate(xs), np.concatenate(ss), np.concatenate(ks),
                           float(x0), int(periods))


# ----------------------------------------------------------------------------
# export


def basin_csv(rep: BasinReport, config_hash=None) -> str:
    return csv_text(["key", "value"], rep.rows(), config_hash)


def gap_cover_csv(cover: GapCover, config_hash=None) -> str:
    return csv_text(["depth", "a", "b"], cover.intervals, config_hash)


def trace_csv(tr: SuspensionTrace, config_hash=None) -> str:
    rows = zip(tr.period, tr.s, tr.x)
    return csv_text(["period", "s", "x"], rows, config_hash)
