import numpy as np
import pytest

from flatdenjoy import vm
from flatdenjoy.circle_core import eval_lift, rotation_map
from flatdenjoy.rotation import GOLDEN


def test_orbit_parts_match_lift(stage0):
    M = stage0.map
    fr, ks = M.program.orbit_parts(0.123, 50)
    x = 0.123
    for j in range(51):
        assert fr[j] + ks[j] == pytest.approx(x, abs=1e-9)
        assert 0.0 <= fr[j] < 1.0
        x = eval_lift(M, x)


def test_reduced_orbit_keeps_precision():
    # a lift far from the origin loses digits; the reduced form does not
    M = rotation_map(float(GOLDEN))
    fr, ks = M.program.orbit_parts(0.1, 100_000)
    expect = (0.1 + 100_000 * float(GOLDEN)) % 1.0
    assert fr[-1] == pytest.approx(expect, abs=1e-9)
    assert ks[-1] == np.floor(0.1 + 100_000 * float(GOLDEN))


def test_iterate_equals_orbit_end(stage0):
    M = stage0.map
    assert M.program.orbit_end(0.3, 40) == pytest.approx(M.program.orbit(0.3, 40)[-1])


def test_flat_cycle_detects_rational(stage0):
    # shifting far off the tuned value locks the flat value on a short cycle
    M = stage0.map.shifted(0.1)
    los = np.array([float(stage0.U.a)])
    his = np.array([float(stage0.U.b)])
    q, p, _ = vm.flat_cycle(los, his, 10_000, *M.program.args())
    assert 1 <= q < 10_000
    assert p >= 0
