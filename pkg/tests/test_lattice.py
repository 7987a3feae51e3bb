import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from latticeslice.geometry import TubeParams, VerticalTube
from latticeslice.lattice import Clip, floor_sum, sum_floor_linear, tube_row_bounds, tube_rows_count

from oracles import in_clip, tube_contains_exact


@settings(max_examples=300, deadline=None)
@given(
    st.integers(0, 60),
    st.integers(1, 50),
    st.integers(-10**6, 10**6),
    st.integers(-10**6, 10**6),
)
def test_floor_sum(n, m, a, b):
    assert floor_sum(n, m, a, b) == sum((a * i + b) // m for i in range(n))


@settings(max_examples=100, deadline=None)
@given(st.fractions(), st.fractions(), st.integers(-500, 500), st.integers(0, 40))
def test_sum_floor_linear(alpha, beta, y0, n):
    want = sum(math.floor(alpha * y + beta) for y in range(y0, y0 + n))
    assert sum_floor_linear(y0, y0 + n, alpha, beta) == want


@settings(max_examples=150, deadline=None)
@given(
    st.floats(0.01, 3.0),
    st.floats(0.0, 1.5),
    st.integers(0, 400),
    st.integers(1, 40),
    st.integers(-150, 150),
    st.integers(1, 80),
)
def test_rows_count_matches_enumeration(t, pad, y0, h, x0, w):
    clip = Clip.from_floats(t, pad)
    want = sum(1 for y in range(y0, y0 + h) for x in range(x0, x0 + w) if in_clip(x, y, t, pad))
    assert clip.rows_count(y0, y0 + h, x0, x0 + w) == want


def test_rows_count_huge_heights():
    clip = Clip.from_floats(math.tan(0.25))
    y0 = 10**40
    # a box fully inside the cone counts every lattice point
    assert clip.rows_count(y0, y0 + 7, -5, 9) == 7 * 14
    f = clip.f(y0)
    assert clip.rows_count(y0, y0 + 1, f - 2, f + 5) == 3


def test_f_array_matches_scalar():
    clip = Clip.from_floats(math.tan(0.1), 0.5)
    ys = np.arange(0, 5000)
    assert list(clip.f_array(ys)) == [clip.f(int(y)) for y in ys]


@settings(max_examples=150, deadline=None)
@given(
    st.floats(0.05, 20),
    st.booleans(),
    st.floats(-30, 30),
    st.integers(-200, 200),
    st.integers(1, 30),
)
def test_tube_rows_count(mag, neg, v, y0, h):
    u = -mag if neg else mag
    t = TubeParams(u, v)
    want = 0
    for y in range(y0, y0 + h):
        b = tube_row_bounds(t, y)
        # candidate columns around the band's float position
        mid = -u * (y - (v + 0.5) * t.c)
        half = int(abs(u) * t.c) + 3
        lo_x = math.floor(mid) - half
        row = [x for x in range(lo_x, lo_x + 2 * half + 2) if tube_contains_exact(u, v, x, y)]
        if b is None:
            assert row == []
        else:
            assert row == list(range(*b))
        want += len(row)
    assert tube_rows_count(t, y0, y0 + h) == want


def test_vertical_tube_rows():
    t = VerticalTube(Fraction(3, 2))
    assert tube_row_bounds(t, 10) == (2, 3)
    assert tube_rows_count(t, 0, 17) == 17
