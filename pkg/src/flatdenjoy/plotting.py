"""Matplotlib figures for certificates, gap covers and suspension traces.

Figures are written with the Agg backend.  SVG output is made reproducible
(fixed hash salt, no date) and gets the config hash as a leading comment.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .circle_core import MapDescriptor, eval_many, flat_set  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (4.5, 3.4),
    "svg.hashsalt": "flatdenjoy",
    "svg.fonttype": "none",
}
BAND = "#d9d9d9"


def _save(fig, path, config_hash=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if path.suffix == ".svg" else {}
    fig.savefig(path, metadata=meta)
    plt.close(fig)
    if path.suffix == ".svg" and config_hash:
        text = path.read_text()
        head, sep, rest = text.partition("?>\n")
        if sep:
            text = head + sep + f"<!-- config {config_hash} -->\n" + rest
        path.write_text(text)
    return path


def _shade_flat(ax, M: MapDescriptor, vertical: bool):
    for c in flat_set(M, check_hidden=False):
        a, b = float(c.a), float(c.b)
        for lo, hi in ((a, min(b, 1.0)), (0.0, b - 1.0)):
            if hi > lo:
                (ax.axvspan if vertical else ax.axhspan)(lo, hi, color=BAND, lw=0)


def plot_map(M: MapDescriptor, path, config_hash=None, samples: int = 2000):
    """Graph of the circle map on the unit square."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _shade_flat(ax, M, vertical=True)
        x = np.linspace(0.0, 1.0, samples, endpoint=False)
        y = eval_many(M, x) % 1.0
        ax.plot(x, y, ",", color="k")
        ax.set(xlim=(0, 1), ylim=(0, 1), xlabel="x", ylabel="f(x)")
        ax.set_aspect("equal")
        return _save(fig, path, config_hash)


def plot_decay(decay, path, config_hash=None):
    """Orbit lengths of the wandering interval against the staircase of bounds."""
    j = np.array([r[0] for r in decay])
    L = np.array([r[2] for r in decay])
    bound = np.array([r[3] for r in decay])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        ax.semilogy(j, np.where(L > 0, L, np.nan), ".", ms=2, color="k", label="|f^j(I)|")
        ax.step(j, bound, where="post", color="C3", lw=1, label="bound")
        ax.set(xlabel="j", ylabel="length")
        ax.legend(frameon=False)
        return _save(fig, path, config_hash)


def plot_gap_cover(cover, path, config_hash=None):
    """Covered arcs by depth, one row per depth."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for depth, a, b in cover.intervals:
            for lo, hi in ((a, min(b, 1.0)), (0.0, b - 1.0)):
                if hi > lo:
                    ax.plot([lo, hi], [depth, depth], color="k", lw=3, solid_capstyle="butt")
        ax.set(xlim=(0, 1), xlabel="x", ylabel="depth")
        ax.invert_yaxis()
        return _save(fig, path, config_hash)


def plot_trace(trace, M: MapDescriptor, path, config_hash=None):
    """Suspension trace on the torus square with the flat band shaded."""
    x, s = trace.x, trace.s
    # break the polyline wherever it wraps in x or restarts a period
    cut = np.abs(np.diff(x)) > 0.5
    cut |= np.diff(trace.period) != 0
    xs = np.insert(x.astype(float), np.nonzero(cut)[0] + 1, np.nan)
    ss = np.insert(s.astype(float), np.nonzero(cut)[0] + 1, np.nan)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        _shade_flat(ax, M, vertical=True)
        ax.plot(xs, ss, color="k", lw=0.6)
        ax.set(xlim=(0, 1), ylim=(0, 1), xlabel="x", ylabel="s")
        ax.set_aspect("equal")
        return _save(fig, path, config_hash)
