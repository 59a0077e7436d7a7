"""The initial map: one flat interval with order-2 junctions."""

from __future__ import annotations

from . import expr as E
from .circle_core import INF, flat, smooth
from .segments import Seg, from_segments

# the arc's central rise happens on this part of the arc parameter
RISE_LO, RISE_HI = 0.05, 0.95


def blend_window(slope_end: float | None = None):
    """Where the profile switches from its left to its right model."""
    if slope_end is None or slope_end < 2.0:
        return RISE_LO, RISE_HI
    # keep the steep line above c s^2 while blending
    return 1.0 - 0.5 / slope_end, 1.0 - 0.1 / slope_end


def arc_profile(c: float, exact_at: str, slope_end: float | None = None) -> E.Expr:
    """Monotone ``P: [0,1] -> [0,1]`` with ``P ~ c s^2`` at 0.

    At 1 the profile is ``1 - c (1-s)^2`` (order-2 junction), or ends with
    slope ``slope_end`` when that is given (a quadratic below 2, a line above).
    """
    if slope_end is not None and slope_end <= 0.0:
        raise ValueError("end slope must be positive")
    chi = E.unit_step(E.affine_map(*blend_window(slope_end)), exact_at)
    low = E.scale(c, E.Mono(0.0, 2))
    if slope_end is None:
        high = E.add(E.Const(1.0), E.scale(-c, E.Mono(1.0, 2)))
    elif slope_end < 2.0:
        # monotone on [0, 1] for end slopes below 2
        u = E.Affine(-1.0, 1.0)
        high = E.add(E.Const(1.0), E.scale(-slope_end, u),
                     E.scale(slope_end - 1.0, E.mul(u, u)))
    else:
        high = E.Affine(slope_end, 1.0 - slope_end)
    return E.add(low, E.mul(chi, E.add(high, E.scale(-1.0, low))))


def base_segments(a0: float, l: float, value: float, c: float,
                  left_slope: float | None = None):
    """Lift segments over ``[a0, a0 + 1]``: flat on ``(a0, a0 + l)``, then the arc.

    With ``left_slope`` the arc ends at ``a0 + 1`` with that derivative
    (a half-critical point) instead of an order-2 junction.
    """
    b0 = a0 + l
    L = 1.0 - l
    s = E.affine_map(b0, b0 + L)
    slope_end = None if left_slope is None else left_slope * L
    mid = b0 + 0.5 * sum(blend_window(slope_end)) * L
    arc_lo = E.add(E.Const(value), E.compose(arc_profile(c, "lo", slope_end), s))
    arc_hi = E.add(E.Const(value), E.compose(arc_profile(c, "hi", slope_end), s))
    left_order = None if left_slope is not None else 2
    left_cls = 0 if left_slope is not None else 1
    return [
        Seg(a0, b0, flat(value), left_cls),
        Seg(b0, mid, smooth(arc_lo, (2, None)), 1),
        Seg(mid, a0 + 1.0, smooth(arc_hi, (None, left_order)), INF),
    ]


def stage0_map(a0: float, l: float, c: float = 1e-4, left_slope: float | None = None):
    segs = base_segments(a0, l, 0.5, c, left_slope)
    return from_segments(segs)
