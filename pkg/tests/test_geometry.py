import math
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticeslice.errors import InvalidParameter
from latticeslice.geometry import (
    Box,
    ConeParams,
    LineParams,
    TubeParams,
    VerticalTube,
    broken_line_contains,
    cone_contains,
    line_to_tube,
    tube_contains,
    tube_to_line,
)

from oracles import tube_contains_exact


def test_tube_examples():
    t = TubeParams(1, 0)
    assert tube_contains(t, (0, 1))
    assert not tube_contains(t, (0, 0))
    assert t.contains_exact(0, Fraction(t.c))
    assert tube_contains(t, (0, math.sqrt(2)))


def test_tube_rejects_zero_u():
    with pytest.raises(InvalidParameter):
        TubeParams(0, 1)
    with pytest.raises(InvalidParameter):
        TubeParams(1, math.nan)


def test_line_to_tube_examples():
    t = line_to_tube(LineParams(1, 0, "x"))
    assert (t.u, t.v) == (-1.0, 0.0)
    t = line_to_tube(LineParams(-2, 0, "x"))
    assert t.u == 0.5 and t.v == 0.0
    t = line_to_tube(LineParams(1, 1, "x"))
    assert t.u == -1.0
    assert t.v == pytest.approx(-1 / math.sqrt(2), abs=1e-15)
    # three points of y = x - 1 sit on the lower edge
    for x in (-3.0, 1.0, 7.5):
        lo, _ = t.edges_at(x)
        assert lo == pytest.approx(x - 1, abs=1e-12)


def test_line_to_tube_rejects_horizontal():
    with pytest.raises(InvalidParameter):
        line_to_tube(LineParams(0, 1, "x"))


def test_broken_line_examples():
    assert broken_line_contains(LineParams(1, 0.5, "y"), (2, 2))
    assert not broken_line_contains(LineParams(1, 0.5, "y"), (0, 1))
    assert broken_line_contains(LineParams(0, 3, "y"), (100, 3))


def test_cone_examples():
    c = ConeParams(0.5)
    assert cone_contains(c, (0, 10))
    assert not cone_contains(c, (10, 0))
    assert cone_contains(c, (math.tan(0.25) * 100, 100))
    assert c.beta == pytest.approx(1 / math.tan(0.25))
    with pytest.raises(InvalidParameter):
        ConeParams(math.pi)


def test_vertical_tube_band():
    t = VerticalTube(2.5)
    assert t.contains(2.5, -1e9) and t.contains(3.4, 0)
    assert not t.contains(3.5, 0)
    assert list(t.lattice_mask(np.array([2, 3, 4]), np.zeros(3))) == [False, True, False]


def test_box_half_open():
    b = Box(0, 0, 2)
    xs = np.array([0, 1, 2, 1])
    ys = np.array([0, 1, 1, 2])
    assert list(b.mask(xs, ys)) == [True, True, False, False]
    assert b.int_range_x() == (0, 2)
    assert Box.centered(1).int_range_x() == (-1, 2)
    with pytest.raises(InvalidParameter):
        Box(0, 0, 0)


def _random_u(rng):
    return rng.choice([-1, 1]) * 10 ** rng.uniform(-2, 2)


def test_width_one_certificate():
    rng = random.Random(7)
    for _ in range(1000):
        t = TubeParams(_random_u(rng), rng.uniform(-50, 50))
        nx, ny, lo, _ = t.normal_form()
        norm = math.hypot(nx, ny)
        # foot of the lower edge at some x, then step along the unit inward normal
        x = rng.uniform(-100, 100)
        y = t.edges_at(x)[0]
        dx, dy = nx / norm, ny / norm
        assert t.contains(x + 0.5 * dx, y + 0.5 * dy)
        assert not t.contains(x - 0.001 * dx, y - 0.001 * dy)
        assert not t.contains(x + 1.001 * dx, y + 1.001 * dy)


def test_conversion_consistency():
    rng = random.Random(3)
    for _ in range(500):
        s = rng.choice([-1, 1]) * 10 ** rng.uniform(-2, 2)
        b = rng.uniform(-20, 20)
        t = line_to_tube(LineParams(s, b, "x"))
        for x in (rng.uniform(-100, 100) for _ in range(3)):
            lo, _ = t.edges_at(x)
            assert abs(lo - s * (x - b)) <= 1e-9 * max(1.0, abs(s * (x - b)))
        back = tube_to_line(t, "x")
        assert back.slope == pytest.approx(s, rel=1e-12)
        assert back.intercept == pytest.approx(b, rel=1e-9, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=0.01, max_value=100),
    st.floats(min_value=-10, max_value=10),
    st.integers(min_value=-100, max_value=100),
)
def test_broken_line_in_unit_vertical_band(s, b, x):
    y = math.floor(s * x + b)
    assert broken_line_contains(LineParams(s, b, "y"), (x, y))
    assert s * x + b - 1 < y <= s * x + b


@settings(max_examples=300, deadline=None)
@given(
    st.floats(min_value=0.01, max_value=100),
    st.booleans(),
    st.floats(min_value=-20, max_value=20),
    st.integers(min_value=-200, max_value=200),
    st.integers(min_value=-200, max_value=200),
)
def test_lattice_mask_is_exact(mag, neg, v, x, y):
    u = -mag if neg else mag
    t = TubeParams(u, v)
    got = bool(t.lattice_mask(np.array([x]), np.array([y]))[0])
    assert got == tube_contains_exact(u, v, x, y) == t.contains_exact(x, y)
