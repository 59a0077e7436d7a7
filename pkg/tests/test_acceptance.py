"""Acceptance criteria 1-10, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py`` (the lines are printed in the
terminal summary) or ``python -m tests.test_acceptance``.
"""

import sys
import time

import numpy as np
import pytest
from click.testing import CliRunner

from flatdenjoy import cherry as Ch
from flatdenjoy import construction as C
from flatdenjoy import perturbation as P
from flatdenjoy import rotation as R
from flatdenjoy.circle_core import derivative, flat_set, iterate_interval, rotation_map
from flatdenjoy.cli import cli
from flatdenjoy.stage0 import stage0_map

from .conftest import ACCEPTANCE, EPS, L0

G = float(R.GOLDEN)
ORDER_TOL = 1e-8


def record(k, ok, detail):
    ACCEPTANCE[k] = f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    assert ok, detail


def test_criterion_01_enclosure_law():
    t = time.perf_counter()
    rows = []
    for n in (100, 1000, 10_000):
        enc = R.rotation_enclosure(rotation_map(G), n)
        rows.append(enc.width == 2.0 / n and abs((enc.upper - enc.lower) - 2.0 / n) <= 1e-15
                    and enc.contains(G))
    dt = time.perf_counter() - t
    record(1, all(rows) and dt < 1.0, f"width 2/n and contains target for n=1e2,1e3,1e4 "
                                      f"({dt:.3f} s)")


def test_criterion_02_tuning():
    t = time.perf_counter()
    M = stage0_map(0.125, 0.75)
    res = R.tune_translation(M, G, 1e-5, 1_000_000)
    enc = R.rotation_enclosure(M.with_translation(res.t0), 1_000_000)
    ok = enc.lower - 1e-5 <= G <= enc.upper + 1e-5
    dt = time.perf_counter() - t
    record(2, ok and dt < 30.0, f"t0={res.t0:.12f}, enclosure [{enc.lower:.9f}, "
                                f"{enc.upper:.9f}] at n=1e6 ({dt:.1f} s)")


def test_criterion_03_telescoping(k4_run):
    worst = 0.0
    for S in k4_run["states"]:
        comps = flat_set(S.map)
        measured = float(comps[0].b) - float(comps[0].a) if len(comps) == 1 else np.nan
        worst = max(worst, abs(measured - C.telescoped_length(L0, EPS, S.n)))
    record(3, worst <= 1e-12, f"max |measured - closed form| = {worst:.2e} over stages 0..4")


def test_criterion_04_flat_set_geometry(k4_run):
    states = k4_run["states"]
    worst, counts = 0.0, []
    for S, T in zip(states, states[1:]):
        b = T.budgets[-1]
        spec = P.SplitSpec(S.orientation, S.eps, b.delta, S.U, S.n, norm_order=S.n + 1)
        split = flat_set(P.split_with_amplitude(S.map, spec, b.split_amplitude, b.split_side))
        after = flat_set(T.map)
        counts.append((len(split), len(after)))
        if len(split) == 2:
            gap = float(split[1].a) - float(split[0].b)
            worst = max(worst, abs(gap - S.gap))
    ok = all(c == (2, 1) for c in counts) and worst <= 1e-12
    record(4, ok, f"components split/reflatten {counts}, max gap error {worst:.2e}")


def test_criterion_05_tangency_orders(k4_run):
    bad = []
    for S in k4_run["states"]:
        left, right = C.table_orders(S.n)
        for x, side, k in ((float(S.U.a), "left", left), (float(S.U.b), "right", right)):
            d = [abs(derivative(S.map, m, x, side=side)) for m in range(1, k + 1)]
            if not (all(v <= ORDER_TOL for v in d[:-1]) and d[-1] > ORDER_TOL):
                bad.append((S.n, side))
    record(5, not bad, "orders match the parity table at stages 0..4" if not bad
           else f"mismatch at {bad}")


def test_criterion_06_cauchy(k4_run):
    cauchy = k4_run["cert"].cauchy
    ok = all(norm <= bound for _, norm, bound in cauchy)
    record(6, ok, "C^i distances " + ", ".join(f"{norm:.3g}<={bound:g}"
                                               for _, norm, bound in cauchy))


def test_criterion_07_wandering(k4_run):
    S, cert = k4_run["final"], k4_run["cert"]
    stair = all(0.0 < L < bound for _, _, L, bound in cert.decay)
    images = iterate_interval(S.map, S.I, S.r)
    avoid = not S.I.intersects(S.U) and not any(J.intersects(S.U) for J in images[:-1])
    dt = k4_run["seconds"]
    record(7, stair and avoid and dt < 300.0,
           f"staircase over j<{S.r}: {stair}, orbit avoids U_4: {avoid}, pipeline {dt:.0f} s")


def test_criterion_08_cherry_proxies(k4_run):
    S = k4_run["final"]
    N = S.r
    tags = [str(Ch.classify_point(S.map, x, N)) for x in Ch.probes(S.I)]
    part1 = all(t == "AttractorCandidate" for t in tags)
    rep = Ch.basin_estimate(S.map, 1000, N, seed=0)
    part2 = 0.0 < rep.sink < 1.0
    lengths = [Ch.gap_cover(S.map, d).length for d in range(6)]
    part3 = all(x < y for x, y in zip(lengths, lengths[1:]))
    record(8, part1 and part2 and part3,
           f"I probes at N={N}: {sorted(set(tags))} ({part1}); sink fraction "
           f"{rep.sink:.3f} ({part2}); gap cover increasing ({part3})")


def test_criterion_09_anchored():
    anchor = C.AnchorConfig(0.2, 0.5)
    states = []
    C.run(2, 0.05, R.GOLDEN, 0.3, anchor, on_stage=lambda S, rep: states.append(S))
    rows = []
    for S in states:
        comps = flat_set(S.map)
        a = float(comps[0].a)
        d = derivative(S.map, 1, a, side="left")
        rows.append((S.n, abs(a - anchor.p) <= 1e-12 and d > anchor.K, d))
    ok = len(rows) == 3 and all(r[1] for r in rows)
    record(9, ok, "left end at p, left derivative " +
           ", ".join(f"stage {n}: {d:.3g}>{anchor.K}" for n, _, d in rows))


def test_criterion_10_determinism(tmp_path):
    outs = []
    for name in ("a", "b"):
        res = CliRunner().invoke(cli, ["construct", "--stages", "2", "--out",
                                       str(tmp_path / name)])
        assert res.exit_code == 0, res.output
        outs.append(tmp_path / name / "certificate")
    names = sorted(p.name for p in outs[0].glob("*.csv"))
    same = names and all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
                         for n in names)
    record(10, bool(same), f"{len(names)} certificate CSVs byte-identical across two K=2 runs")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
