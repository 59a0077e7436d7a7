"""Lift-coordinate views of a descriptor window, and splicing them back.

A view is a list of ``Seg`` covering ``[lo, hi]`` in lift coordinates.  Each
segment carries a piece expressed in lift coordinates and the smoothness
class at its left end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import expr as E
from .circle_core import INF, MapDescriptor, Piece, normalize


@dataclass(frozen=True)
class Seg:
    lo: float
    hi: float
    piece: Piece
    cls: float = INF

    @property
    def is_flat(self) -> bool:
        return self.piece.is_flat


def shift_piece(p: Piece, k: float) -> Piece:
    """Piece for the graph translated by ``(k, k)``."""
    if k == 0:
        return p
    if p.is_flat:
        return replace(p, value=p.value + k)
    return replace(p, expr=E.shift(p.expr, k))


def reflect_piece(p: Piece, c: float) -> Piece:
    kl, kr = p.tangency
    if p.is_flat:
        return Piece(None, c - p.value, (kr, kl))
    return Piece(E.reflect(p.expr, c), 0.0, (kr, kl))


def view(M: MapDescriptor, lo: float, hi: float, with_translation: bool = False):
    """Segments of the base lift (translation excluded by default) over ``[lo, hi]``."""
    bps = M.breakpoints
    n = M.n_pieces
    k = math.floor(lo)
    i = M.piece_index(lo - k)
    out = []
    x = lo
    while True:
        seg_hi = bps[i + 1] + k
        end = min(seg_hi, hi)
        at_bp = (x == bps[i] + k)
        cls = M.smoothness[i] if at_bp else INF
        piece = shift_piece(M.pieces[i], k)
        if with_translation:
            piece = shift_piece_value(piece, M.translation)
        if end > x:
            out.append(Seg(x, end, piece, cls))
        if end >= hi:
            break
        x = end
        i += 1
        if i == n:
            i = 0
            k += 1
    return out


def shift_piece_value(p: Piece, t: float) -> Piece:
    if p.is_flat:
        return replace(p, value=p.value + t)
    return replace(p, expr=E.add(p.expr, E.Const(t)))


def reflect_view(segs, c: float):
    """Conjugate a view by ``x -> c - x`` (both domain and range)."""
    out = []
    for idx in range(len(segs) - 1, -1, -1):
        s = segs[idx]
        # class at the new left end is the class at the old right end
        cls = segs[idx + 1].cls if idx + 1 < len(segs) else INF
        out.append(Seg(c - s.hi, c - s.lo, reflect_piece(s.piece, c), cls))
    return out


def evaluate_view(segs, x: float) -> float:
    for s in segs:
        if s.lo <= x <= s.hi:
            if s.is_flat:
                return s.piece.value
            return float(E.evaluate(s.piece.expr, x))
    raise ValueError(f"{x} outside view")


def merge_segments(segs):
    """Join neighbours that carry the same piece across a C-infinity point."""
    out = []
    for s in segs:
        if out and s.cls == INF:
            prev = out[-1]
            same = prev.piece is s.piece or (
                prev.is_flat and s.is_flat and prev.piece.value == s.piece.value
                and prev.piece.tangency[1] is None and s.piece.tangency[0] is None)
            if same:
                p = prev.piece
                out[-1] = Seg(prev.lo, s.hi, Piece(p.expr, p.value, (p.tangency[0], s.piece.tangency[1])),
                              prev.cls)
                continue
        out.append(s)
    return out


def _to_base(segs):
    """Cut lift segments at integers and translate each part into [0, 1)."""
    parts = []
    for s in segs:
        lo, hi = s.lo, s.hi
        k = math.floor(lo)
        cls = s.cls
        while True:
            cut = min(hi, k + 1)
            piece = shift_piece(s.piece, -k) if k else s.piece
            if cut > lo:
                parts.append(Seg(lo - k, cut - k, piece, cls))
            if cut >= hi:
                break
            lo, k, cls = cut, k + 1, INF
    return parts


def from_segments(segs, translation: float = 0.0) -> MapDescriptor:
    """Descriptor from segments covering one period ``[x, x + 1]`` of the lift."""
    parts = _to_base(segs)
    parts.sort(key=lambda s: s.lo)
    # the part starting at 0 may carry a class from an interior cut
    bps = [p.lo for p in parts] + [1.0]
    bps[0] = 0.0
    for j in range(1, len(parts)):
        if abs(bps[j] - parts[j - 1].hi) > 1e-12:
            raise ValueError("segments do not tile the period")
    pieces = [p.piece for p in parts]
    cls = [p.cls for p in parts]
    # at 0 the class is whatever the segment ending at 1 and the one starting at 0 share
    M = MapDescriptor(tuple(bps), tuple(pieces), translation, tuple(cls))
    return normalize(M)


def splice(M: MapDescriptor, lo: float, hi: float, segs) -> MapDescriptor:
    """Replace the window ``[lo, hi]`` of ``M`` by ``segs``.

    Pieces outside the window keep their base coordinates and expressions
    unchanged; the window ends become C-infinity joins.
    """
    if not segs:
        raise ValueError("empty replacement")
    segs = list(segs)
    segs[0] = replace(segs[0], lo=lo, cls=INF)
    segs[-1] = replace(segs[-1], hi=hi)
    for a, b in zip(segs, segs[1:]):
        if a.hi != b.lo:
            raise ValueError(f"replacement segments do not abut at {a.hi} / {b.lo}")
    inner = _to_base(merge_segments(segs))
    # complement of the window, in base coordinates, copied verbatim
    outer = []
    k = math.floor(hi)
    start, stop = hi - k, lo + 1 - k  # arc [start, stop] with stop possibly > 1
    bps = M.breakpoints
    for i, p in enumerate(M.pieces):
        for shift in (0, 1):
            a, b = bps[i] + shift, bps[i + 1] + shift
            x0, x1 = max(a, start), min(b, stop)
            if x1 > x0:
                cls = M.smoothness[i] if x0 == a else INF
                if shift:
                    outer.append(Seg(bps[i] if x0 == a else x0 - 1,
                                     bps[i + 1] if x1 == b else x1 - 1, p, cls))
                else:
                    outer.append(Seg(x0, x1, p, cls))
    parts = _drop_slivers(sorted(inner + outer, key=lambda s: s.lo))
    # window ends: snap the complement's cut points to the replacement's ends
    bps_new = [0.0]
    pieces, classes = [], []
    for s in parts:
        pieces.append(s.piece)
        classes.append(s.cls)
        bps_new.append(s.hi)
    bps_new[-1] = 1.0
    for j in range(1, len(parts)):
        if abs(parts[j].lo - parts[j - 1].hi) > 1e-12:
            raise ValueError("spliced pieces do not tile the period")
    if parts[0].lo != 0.0:
        raise ValueError("spliced pieces do not start at 0")
    out = MapDescriptor(tuple(bps_new), tuple(pieces), M.translation, tuple(classes))
    return normalize(_merge_descriptor(out))


def _drop_slivers(parts, tol: float = 1e-12):
    """Absorb parts shorter than ``tol`` (window ends a rounding error away
    from an old breakpoint) into their right neighbour."""
    out = []
    carry = None
    for s in parts:
        if carry is not None:
            s = replace(s, lo=carry.lo, cls=carry.cls)
            carry = None
        if s.hi - s.lo < tol and s is not parts[-1]:
            carry = s
            continue
        out.append(s)
    if len(out) > 1 and out[-1].hi - out[-1].lo < tol:
        last = out.pop()
        out[-1] = replace(out[-1], hi=last.hi)
    return out


def _merge_descriptor(M: MapDescriptor) -> MapDescriptor:
    bps = list(M.breakpoints)
    pieces = list(M.pieces)
    cls = list(M.smoothness)
    j = 1
    while j < len(pieces):
        a, b = pieces[j - 1], pieces[j]
        same = a is b or (a.is_flat and b.is_flat and a.value == b.value
                          and a.tangency[1] is None and b.tangency[0] is None)
        if cls[j] == INF and same:
            pieces[j - 1] = Piece(a.expr, a.value, (a.tangency[0], b.tangency[1]))
            del pieces[j], bps[j], cls[j]
        else:
            j += 1
    return MapDescriptor(tuple(bps), tuple(pieces), M.translation, tuple(cls))
