import math
import random

import numpy as np
import pytest

from latticeslice.constructions import (
    GrowthPolicy,
    PointSet,
    build_cone_set,
    build_fattened_cone_set,
    build_intro_cone,
    build_strip_set,
    chunk_count,
    km_estimate,
    level_count,
    materialize,
)
from latticeslice.errors import CapacityExceeded, InvalidParameter
from latticeslice.geometry import Box
from latticeslice.scalars import ls_make

import oracles

GEO = GrowthPolicy.geometric(10)
PE = GrowthPolicy.paper_exponential()


def same_points(a, b):
    return np.array_equal(np.unique(np.asarray(a), axis=0), np.unique(np.asarray(b), axis=0))


def test_first_level_chunk_count():
    cs = build_cone_set(0.5, 2, 2, 100, 1, GEO)
    K = cs.levels[0].K.exact
    assert 31 <= K <= 34
    assert K == oracles.cone_level(100, 2, 2, 0.5)[0] == 33


def test_two_chunks_for_narrow_cone():
    cs = build_cone_set(0.039, 2, 2, 100, 1, GEO)
    assert cs.levels[0].K.exact == 2


def test_first_chunk_left_edge():
    cs = build_cone_set(0.5, 2, 2, 100, 1, GEO)
    c0 = cs.levels[0].chunks[0]
    assert c0.x0 == -26 and c0.y0 == 100


def test_km_estimate():
    est = km_estimate(ls_make(100), 2, 2, 0.5)
    assert est.estimate.to_float() == pytest.approx(50 * math.expm1(0.5), rel=1e-12)
    assert est.estimate.to_float() == pytest.approx(32.44, abs=0.01)
    assert 31 <= est.exact <= 34 and abs(est.exact - 32.44) <= 2
    small = km_estimate(ls_make(100), 2, 2, 0.039)
    # first-order limit theta*h/w = 1.95; the full formula adds the e^x curvature
    assert small.estimate.to_float() == pytest.approx(0.039 * 100 / 2, rel=0.02)
    assert small.exact == 2


def test_strip_example():
    cs = build_strip_set(None, 3, 2, 2, 10, 1, GEO)
    ps = materialize(cs)
    assert len(ps) == 12
    assert [(c.x0, c.y0) for c in cs.levels[0].chunks] == [(0, 10), (2, 12), (4, 14)]
    assert same_points(ps.points, oracles.strip_level(10, 2, 2, 3))


def test_strip_single_chunk_ladder():
    cs = build_strip_set(None, 1, 2, 3, 10, 3, GEO)
    for lv in cs.levels:
        assert level_count(lv, cs).exact == 2 * lv.n


def test_strip_paper_growth_analytic_count():
    cs = build_strip_set(None, 3, 2, 2, 10, 3, PE)
    lv2, lv3 = cs.levels[1], cs.levels[2]
    assert lv2.h.depth == 1 and lv2.h.r == 16.0
    assert not lv3.exact
    assert level_count(lv3, cs).exact == 24


def test_intro_bands():
    cs = build_intro_cone(0.2, 1, 2)
    b1, b2 = cs.levels
    assert (b1.h.exact, b1.n) == (16, 4)
    assert (b2.h.exact, b2.n) == (256, 16)
    assert level_count(b2, cs).exact == len(oracles.intro_band(256, 16, 0.2))
    n1 = level_count(b1, cs).exact
    assert 4 * 3 <= n1 <= 4 * 5


def test_intro_narrow_cone_is_axis_column():
    cs = build_intro_cone(1e-6, 2, 2)
    assert level_count(cs.levels[0], cs).exact == 16


def test_fattened_widths_and_level_count():
    cs = build_fattened_cone_set(0.5, 0.5, 2, 2, 100, 1, GEO)
    chunks = cs.levels[0].chunks
    assert all(c.width == 3 for c in chunks[:-1])
    K, _, pts = oracles.cone_level(100, 2, 2, 0.5, 0.5)
    assert level_count(cs.levels[0], cs).exact == len(pts)
    steps = [b.x0 - a.x0 for a, b in zip(chunks, chunks[1:])]
    # left edges advance by about w; floor snapping can make a single step 1
    assert min(steps) >= 1


def test_fattened_small_eps_matches_cone_counts():
    a = build_cone_set(0.5, 2, 2, 100, 2, GEO)
    b = build_fattened_cone_set(0.5, 1e-9, 2, 2, 100, 2, GEO)
    # ceil(w + eps) adds one column to every chunk; the clip pads by eps only
    for la, lb in zip(a.levels, b.levels):
        assert la.K == lb.K
    box = Box(-10**6, 0, 2 * 10**6)
    cone_pts = materialize(a).points
    fat_pts = materialize(b).points
    assert chunk_count(a, box).exact == len(cone_pts)
    assert chunk_count(b, box).exact == len(fat_pts)


def test_parameter_errors():
    with pytest.raises(InvalidParameter):
        build_cone_set(0.0, 2, 2, 100, 1, GEO)
    with pytest.raises(InvalidParameter):
        build_strip_set(None, 0, 2, 2, 10, 1, GEO)
    with pytest.raises(InvalidParameter):
        build_fattened_cone_set(0.5, 2.0, 2, 2, 100, 1, GEO)
    with pytest.raises(InvalidParameter):
        build_intro_cone(0.2, 3, 2)
    with pytest.raises(InvalidParameter):
        GrowthPolicy.geometric(1.0)


def test_materialize_refuses_analytic_levels():
    cs = build_cone_set(0.5, 2, 2, 100, 2, PE)
    assert len(materialize(cs, [1])) == 129
    with pytest.raises(CapacityExceeded):
        materialize(cs, [2])
    assert len(materialize(cs, [])) == 0


@pytest.mark.parametrize("growth", [GEO, GrowthPolicy.power(1.5), PE])
@pytest.mark.parametrize("kind", ["cone", "strip", "fattened"])
def test_level_separation(kind, growth):
    if kind == "cone":
        cs = build_cone_set(0.5, 2, 2, 100, 4, growth)
    elif kind == "fattened":
        cs = build_fattened_cone_set(0.5, 0.5, 2, 2, 100, 4, growth)
    else:
        cs = build_strip_set(None, 5, 2, 2, 10, 4, growth)
    for a, b in zip(cs.levels, cs.levels[1:]):
        assert b.h > a.H
        assert b.n == a.n + 1


def test_cone_containment_and_right_edge():
    cs = build_cone_set(0.5, 2, 2, 100, 3, GEO)
    t = math.tan(0.25)
    for lv in cs.levels:
        pts = materialize(cs, [lv.m]).points
        assert all(oracles.in_clip(int(x), int(y), t) for x, y in pts[:: max(1, len(pts) // 3000)])
        last = lv.chunks[-1] if lv.chunks else None
        top = lv.H.exact - 1
        right = oracles.half_width(top, t)
        if last is not None:
            assert last.x0 + last.width >= right + 1
        assert pts[:, 0].max() == right


def test_diagonal_structure():
    cs = build_cone_set(0.5, 2, 2, 100, 2, GEO)
    for lv in cs.levels:
        ch = lv.chunks
        for a, b in zip(ch, ch[1:]):
            assert b.y0 == a.y0 + a.height
            assert b.x0 >= a.x0


def test_fattened_chunks_do_not_overlap_rows():
    cs = build_fattened_cone_set(0.5, 0.5, 2, 2, 100, 2, GEO)
    for lv in cs.levels:
        pts = materialize(cs, [lv.m])
        assert not pts.has_duplicates()
        assert pts.is_one_separated()


def test_chunk_count_examples():
    cs = build_strip_set(None, 3, 2, 2, 10, 1, GEO)
    assert chunk_count(cs, Box(0, 10, 2)).exact == 4
    assert chunk_count(cs, Box(100, 100, 5)).is_zero
    cone = build_cone_set(0.5, 2, 2, 100, 1, GEO)
    _, _, pts = oracles.cone_level(100, 2, 2, 0.5)
    assert chunk_count(cone, Box(-1000, 0, 2000)).exact == len(pts)


def test_chunk_count_matches_enumeration_small():
    rng = random.Random(1)
    cs = build_fattened_cone_set(0.5, 0.5, 2, 2, 100, 2, GEO)
    pts = np.concatenate([oracles.cone_level(lv.h.exact, lv.n, 2, 0.5, 0.5)[2] for lv in cs.levels])
    ps = PointSet(pts)
    for _ in range(200):
        side = rng.choice([1, 2, 3.5, 10, 40, 300])
        x0 = rng.uniform(-400, 400)
        y0 = rng.uniform(80, 1900)
        b = Box(x0, y0, side, closed=rng.random() < 0.3)
        assert chunk_count(cs, b).exact == ps.count_box(b)


def test_set_json_round_trip_fields():
    cs = build_cone_set(0.5, 2, 2, 100, 2, PE)
    obj = cs.to_json()
    assert obj["kind"] == "cone"
    assert obj["params"]["growth"] == {"policy": "paper_exponential"}
    assert obj["levels"][1]["h"]["depth"] >= 1
