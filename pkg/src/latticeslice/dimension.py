"""Mass, counting and slice dimension traces, box search and parameter sweeps."""

from __future__ import annotations

import math
import multiprocessing as mp
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .constructions import (
    ChunkSet,
    Level,
    PointSet,
    _StripLayout,
    chunk_count,
    level_count,
    level_tube_hits,
    level_x_halfwidth,
)
from .errors import CapacityExceeded, EmptyInput, InvalidParameter
from .geometry import Box, LineParams, TubeParams, VerticalTube, line_to_tube
from .kernels import max_count_box_arrays
from .scalars import (
    LogRatio,
    LogScalar,
    ZERO,
    from_real,
    log_ratio,
    ls_add,
    ls_make,
    ls_mul,
)

Scale = Union[int, Fraction, float, LogScalar]

EXACT = "exact"
ANALYTIC = "analytic"


@dataclass(frozen=True)
class DimRecord:
    level: int | None
    scale: LogScalar
    count_lo: LogScalar
    count_hi: LogScalar
    ratio_lo: LogRatio
    ratio_hi: LogRatio
    mode: str

    @property
    def is_interval(self) -> bool:
        return self.count_lo != self.count_hi


@dataclass
class DimensionTrace:
    kind: str
    records: list[DimRecord] = field(default_factory=list)

    def ratios(self, upper: bool = True) -> list[float]:
        return [(r.ratio_hi if upper else r.ratio_lo).value for r in self.records]


def _scalar(x: Scale) -> LogScalar:
    if isinstance(x, LogScalar):
        return x
    if isinstance(x, (int, np.integer)):
        return ls_make(int(x))
    q = Fraction(x)
    if q.denominator == 1:
        return ls_make(int(q))
    return from_real(float(q))


def _ratio(count: LogScalar, scale: LogScalar) -> LogRatio:
    if count.is_zero or count <= ls_make(1):
        return LogRatio(0.0, 0.0)
    return log_ratio(count, scale)


def _point_record(level, scale: LogScalar, count: LogScalar, mode: str) -> DimRecord:
    r = _ratio(count, scale)
    return DimRecord(level, scale, count, count, r, r, mode)


# ---------------------------------------------------------------- mass dimension

def _mass_count(cs: ChunkSet, l: Scale) -> tuple[LogScalar, str]:
    if not isinstance(l, LogScalar) or l.is_exact:
        lv = l.exact if isinstance(l, LogScalar) else l
        if any(not x.exact for x in cs.levels):
            return _mass_count_symbolic(cs, _scalar(lv))
        return chunk_count(cs, Box.centered(lv)), EXACT
    return _mass_count_symbolic(cs, l)


def _mass_count_symbolic(cs: ChunkSet, l: LogScalar) -> tuple[LogScalar, str]:
    total = ZERO
    mode = EXACT
    for lv in cs.levels:
        top = lv.H  # rows lie below H
        reach = level_x_halfwidth(lv, cs)
        if lv.h > l:
            continue
        if top <= ls_add(l, ls_make(1)) and reach <= l:
            total = ls_add(total, level_count(lv, cs))
            if not lv.exact:
                mode = ANALYTIC
            continue
        if lv.exact and l.is_exact:
            total = ls_add(total, chunk_count(_single(cs, lv), Box.centered(l.exact)))
            continue
        raise CapacityExceeded(f"mass box edge falls inside analytic level {lv.m}")
    return total, mode


def _single(cs: ChunkSet, lv: Level) -> ChunkSet:
    return ChunkSet(cs.kind, cs.params, (lv,), cs.clip)


def mass_dim_trace(
    pset: ChunkSet | PointSet, scales: Sequence[Scale], levels: Sequence[int | None] | None = None
) -> DimensionTrace:
    """Ratios log|E ∩ [-l, l]^2| / log(2l) over the given half-sides l (closed boxes)."""
    trace = DimensionTrace("mass")
    prev = None
    for i, l in enumerate(scales):
        ls = _scalar(l)
        two_l = ls_mul(ls_make(2), ls) if ls.is_exact else ls_add(ls, ls)
        if two_l <= ls_make(1):
            raise InvalidParameter("mass scales need l > 1/2")
        if prev is not None and not two_l > prev:
            raise InvalidParameter("mass scales must be strictly increasing")
        prev = two_l
        if isinstance(pset, PointSet):
            if isinstance(l, LogScalar):
                if not l.is_exact:
                    raise CapacityExceeded("point sets need exact scales")
                l = l.exact
            count, mode = ls_make(pset.count_box(Box.centered(l))), EXACT
        else:
            count, mode = _mass_count(pset, l)
        trace.records.append(_point_record(levels[i] if levels else None, two_l, count, mode))
    return trace


def level_end_scales(cs: ChunkSet) -> list[Scale]:
    """Half-sides l at which [-l, l]^2 just contains each level (top row H - 1)."""
    out = []
    for lv in cs.levels:
        if lv.exact:
            a, b = lv.layout.x_bounds()
            out.append(max(lv.H.exact - 1, -a, b - 1))
            continue
        reach = level_x_halfwidth(lv, cs)
        if lv.H.is_exact and reach.is_exact:
            out.append(max(lv.H.exact - 1, reach.exact))
        else:
            out.append(lv.H if lv.H >= reach else reach)
    return out


# ---------------------------------------------------------------- counting dimension

def designated_box(cs: ChunkSet, lv: Level) -> tuple[Box | None, LogScalar]:
    """The per-level witness box: side = level span, anchored at the level's left end.

    For the intro bands the witness is the centered filled square of side
    equal to the band thickness.  Returns (numeric box or None, side).
    """
    if cs.kind == "intro":
        s = lv.layout.s
        return Box(-(s // 2), lv.layout.b, s), ls_make(s)
    if cs.kind == "strip":
        side = lv.n * cs.params["k"]
        if lv.exact:
            return Box(0, lv.h.exact, side), ls_make(side)
        return None, ls_make(side)
    side = ls_mul(lv.K, ls_make(lv.n))
    if lv.exact:
        return Box(lv.layout.leftmost_x(), lv.layout.h, side.exact), side
    return None, side


def counting_dim_trace(cs: ChunkSet, schedule: str | Sequence[Box] = "designated") -> DimensionTrace:
    """Counting ratios log|E ∩ C| / log||C|| for designated or explicit boxes."""
    trace = DimensionTrace("counting")
    if isinstance(schedule, str):
        if schedule != "designated":
            raise InvalidParameter(f"unknown schedule {schedule!r}")
        for lv in cs.levels:
            box, side = designated_box(cs, lv)
            if side <= ls_make(1):
                raise InvalidParameter(f"designated box at level {lv.m} has side <= 1")
            if box is not None:
                count, mode = chunk_count(_single(cs, lv), box), EXACT
            elif cs.kind == "strip":
                rel = _StripLayout(0, lv.n, cs.params["w"], cs.params["k"])
                count, mode = ls_make(rel.count_box(0, side.exact, 0, side.exact)), ANALYTIC
            else:
                width = ls_add(level_x_halfwidth(lv, cs), level_x_halfwidth(lv, cs))
                if width > side:
                    raise CapacityExceeded(f"designated box does not cover analytic level {lv.m}")
                count, mode = level_count(lv, cs), ANALYTIC
            trace.records.append(_point_record(lv.m, side, count, mode))
        return trace
    for box in schedule:
        side = box.side if box.symbolic else _scalar(box.side)
        count = chunk_count(cs, box)
        mode = EXACT if count.is_exact else ANALYTIC
        trace.records.append(_point_record(None, side, count, mode))
    return trace


# ---------------------------------------------------------------- box search

def max_count_box(ps: PointSet, side: float, backend: str | None = None) -> tuple[Box, int]:
    """Half-open box of the given side holding the most points of ``ps``."""
    if len(ps) == 0:
        raise EmptyInput("point set is empty")
    if not side >= 1:
        raise InvalidParameter("side must be at least 1")
    count, x0, y0 = max_count_box_arrays(ps.xs, ps.ys, side, backend)
    if ps.points.dtype.kind in "iu":
        x0, y0 = int(x0), int(y0)
    return Box(x0, y0, side), count


# ---------------------------------------------------------------- slices

@dataclass(frozen=True)
class LevelSlice:
    m: int
    n: int
    count_lo: int
    count_hi: int
    extent: int | None
    points: np.ndarray | None
    mode: str


def _direction_inside(cs: ChunkSet, tube) -> bool:
    if isinstance(tube, VerticalTube):
        return True
    return abs(tube.u) < math.tan(cs.params["theta"] / 2)


def _tube_top_in_cone(cs: ChunkSet, tube) -> float:
    """Greatest height at which the tube meets the (widened) cone; inf if unbounded."""
    if _direction_inside(cs, tube):
        return math.inf
    nx, ny, lo, hi = tube.normal_form()
    t = math.tan(cs.params["theta"] / 2)
    M = cs.params.get("w", 1) + cs.pad + 4.0
    # edges x = (c - ny*y)/nx for c in {lo, hi}; meet |x| <= t*y + M
    best = -math.inf
    for c in (lo, hi):
        for sgn in (1.0, -1.0):
            # (c - ny*y)/nx = sgn*(t*y + M)  ->  y*( -ny/nx - sgn*t ) = sgn*M - c/nx
            a = -ny / nx - sgn * t
            if abs(a) > 1e-300:
                best = max(best, (sgn * M - c / nx) / a)
    return best


def _analytic_interval(cs: ChunkSet, lv: Level, tube) -> tuple[int, int]:
    if cs.kind == "strip":
        k, w = cs.params["k"], cs.params["w"]
        if isinstance(tube, VerticalTube):
            return (0, 0)
        nx, ny, lo, hi = tube.normal_form()
        if ny == 0:
            return (0, k * w * lv.n)
        ys = [(c - nx * x) / ny for c in (lo, hi) for x in (0.0, float(k * w))]
        if from_real(max(max(ys), 1.0)) < lv.h:
            return (0, 0)
        return (0, k * w * lv.n)
    if _direction_inside(cs, tube):
        return (max(lv.n - 1, 0), 2 * lv.n + 2)
    top = _tube_top_in_cone(cs, tube)
    if top < 1 or from_real(top) < lv.h:
        return (0, 0)
    return (0, 2 * lv.n + 2)


def slice_set(pset: ChunkSet | PointSet, tube, want_points: bool = False):
    """Points of the set inside the tube.

    A PointSet gives a PointSet.  A ChunkSet gives one :class:`LevelSlice`
    per level: exact counts where the level is exact, count intervals
    otherwise.
    """
    if isinstance(pset, PointSet):
        if pset.points.dtype.kind in "iu":
            mask = tube.lattice_mask(pset.xs, pset.ys)
        else:
            mask = tube.mask(pset.xs, pset.ys)
        return PointSet(pset.points[mask])
    out = []
    for lv in pset.levels:
        hits = level_tube_hits(pset, lv, tube, want_points)
        if hits is not None:
            out.append(LevelSlice(lv.m, lv.n, hits.count, hits.count, hits.extent, hits.points, EXACT))
        else:
            lo, hi = _analytic_interval(pset, lv, tube)
            out.append(LevelSlice(lv.m, lv.n, lo, hi, None, None, ANALYTIC))
    return out


def slice_dim_trace(cs: ChunkSet, tube, slices: list[LevelSlice] | None = None) -> DimensionTrace:
    """Per-level ratio log(count) / log(side of the box just covering the slice)."""
    trace = DimensionTrace("slice")
    for sl in slices if slices is not None else slice_set(cs, tube):
        if sl.mode == EXACT:
            scale = ls_make(max(sl.extent or 0, 1))
            count = ls_make(sl.count_lo)
            trace.records.append(_point_record(sl.m, scale, count, EXACT))
            continue
        lo, hi = ls_make(sl.count_lo), ls_make(sl.count_hi)
        scale_hi = ls_make(2 * sl.n + 3)
        scale_lo = ls_make(max(sl.count_lo, 2))
        r_lo = _ratio(lo, scale_hi)
        r_hi = LogRatio(0.0) if sl.count_hi <= 1 else _ratio(hi, scale_lo)
        trace.records.append(DimRecord(sl.m, scale_hi, lo, hi, r_lo, r_hi, ANALYTIC))
    return trace


def tube_mass_trace(cs: ChunkSet, tube, scales: Sequence[Scale], slices=None) -> DimensionTrace:
    """Mass ratios of a slice: cumulative per-level counts over [-l, l]^2 at level-end scales.

    Scales must be level-end scales (one per level, as from
    :func:`level_end_scales`); the upper count uses interval upper bounds.
    """
    slices = slices if slices is not None else slice_set(cs, tube)
    trace = DimensionTrace("tube_mass")
    lo_acc = hi_acc = 0
    for sl, l in zip(slices, scales):
        lo_acc += sl.count_lo
        hi_acc += sl.count_hi
        ls = _scalar(l)
        two_l = ls_mul(ls_make(2), ls) if ls.is_exact else ls_add(ls, ls)
        c_lo, c_hi = ls_make(lo_acc), ls_make(hi_acc)
        mode = EXACT if sl.mode == EXACT and lo_acc == hi_acc else ANALYTIC
        trace.records.append(DimRecord(sl.m, two_l, c_lo, c_hi, _ratio(c_lo, two_l), _ratio(c_hi, two_l), mode))
    return trace


# ---------------------------------------------------------------- limsup

@dataclass(frozen=True)
class LimsupEstimate:
    estimate: float
    trend: str
    error: float


def limsup_estimate(trace: DimensionTrace, tail: int) -> LimsupEstimate:
    """Tail maximum of the (upper) ratios, with the sign of the tail's fitted slope."""
    if not trace.records:
        raise EmptyInput("trace has no records")
    if tail < 1:
        raise InvalidParameter("tail must be >= 1")
    recs = trace.records[-tail:]
    vals = [r.ratio_hi.value for r in recs]
    est = max(vals)
    err = max(max(r.ratio_hi.error_bound, r.ratio_lo.error_bound) for r in recs)
    trend = "flat"
    if len(vals) >= 2:
        slope = np.polyfit(np.arange(len(vals), dtype=float), np.array(vals), 1)[0]
        if slope > 1e-3:
            trend = "increasing"
        elif slope < -1e-3:
            trend = "decreasing"
    return LimsupEstimate(est, trend, err)


# ---------------------------------------------------------------- sweeps

@dataclass(frozen=True)
class SweepRow:
    a: float
    b: float
    kind: str
    counts: tuple[tuple[int, int], ...]
    ns: tuple[int, ...]
    verdict: bool
    min_level_count: int
    levels_checked: int
    estimate: float


@dataclass
class SweepTable:
    kind: str
    region: tuple[tuple[float, float], tuple[float, float]]
    grid: tuple[int, int]
    rows: list[SweepRow]

    @property
    def verdicts(self) -> np.ndarray:
        return np.array([r.verdict for r in self.rows], dtype=bool)

    def params(self) -> np.ndarray:
        return np.array([(r.a, r.b) for r in self.rows], dtype=float)


def tube_for(kind: str, a: float, b: float):
    """Tube from grid parameters.

    ``line``: (slope, x-intercept) of the tube's right edge.  ``angle``:
    (direction angle from the y-axis, x-intercept) of that edge; angle 0 is
    the vertical band starting at the intercept.  ``tube``: raw (u, v).
    """
    if kind == "line":
        return line_to_tube(LineParams(a, b, "x"))
    if kind == "angle":
        if a == 0:
            return VerticalTube(b)
        return line_to_tube(LineParams(1 / math.tan(a), b, "x"))
    if kind == "tube":
        return TubeParams(a, b)
    raise InvalidParameter(f"unknown parameter kind {kind!r}")


def growth_verdict(counts: Sequence[tuple[int, int]], ns: Sequence[int]) -> bool:
    """Per-level lower bounds keep pace with n_m.

    The tube must meet the last level, and every level after the first one
    it meets must hold at least n_m - 1 points.  The first level met may be
    partial: a tube can enter the set in the middle of a level.
    """
    met = [i for i, (_, hi) in enumerate(counts) if hi > 0]
    if not met or met[-1] != len(counts) - 1:
        return False
    return all(counts[i][0] >= ns[i] - 1 for i in range(met[0] + 1, len(counts)))


def sweep_node(cs: ChunkSet, kind: str, a: float, b: float) -> SweepRow:
    ns = tuple(lv.n for lv in cs.levels)
    try:
        tube = tube_for(kind, a, b)
    except InvalidParameter:
        zeros = tuple((0, 0) for _ in ns)
        return SweepRow(a, b, kind, zeros, ns, False, 0, len(ns), 0.0)
    slices = slice_set(cs, tube)
    counts = tuple((s.count_lo, s.count_hi) for s in slices)
    est = limsup_estimate(slice_dim_trace(cs, tube, slices), max(1, len(slices) // 2)).estimate
    verdict = growth_verdict(counts, ns)
    return SweepRow(a, b, kind, counts, ns, verdict, min(c[0] for c in counts), len(counts), est)


def sweep_slices(
    cs: ChunkSet,
    region: tuple[tuple[float, float], tuple[float, float]],
    grid: tuple[int, int],
    kind: str = "line",
    workers: int = 1,
) -> SweepTable:
    """Evaluate the slice growth verdict at every node of a closed grid over ``region``.

    Rows come out in grid order (first parameter outer) whatever ``workers`` is.
    """
    nu, nv = grid
    if nu < 2 or nv < 2:
        raise InvalidParameter("grid must be at least 2 x 2")
    if kind not in ("line", "angle", "tube"):
        raise InvalidParameter(f"unknown parameter kind {kind!r}")
    (a0, a1), (b0, b1) = region
    nodes = [(float(a), float(b)) for a in np.linspace(a0, a1, nu) for b in np.linspace(b0, b1, nv)]
    if workers > 1 and "fork" in mp.get_all_start_methods():
        global _POOL_SET
        _POOL_SET = (cs, kind)
        try:
            with mp.get_context("fork").Pool(workers) as pool:
                rows = pool.map(_pool_node, nodes, chunksize=max(1, len(nodes) // (4 * workers)))
        finally:
            _POOL_SET = None
    else:
        rows = [sweep_node(cs, kind, a, b) for a, b in nodes]
    return SweepTable(kind, ((a0, a1), (b0, b1)), (nu, nv), rows)


_POOL_SET = None


def _pool_node(node: tuple[float, float]) -> SweepRow:
    cs, kind = _POOL_SET
    return sweep_node(cs, kind, *node)


def good_parameter_density(table: SweepTable, M: float) -> float:
    """Fraction of grid nodes with a positive verdict over [-M, M]^2."""
    (a0, a1), (b0, b1) = table.region
    if not all(math.isclose(x, y, abs_tol=1e-12) for x, y in ((a0, -M), (a1, M), (b0, -M), (b1, M))):
        raise InvalidParameter("table region is not [-M, M]^2")
    return float(table.verdicts.mean())


def analytic_good_mask(table: SweepTable, theta: float, reading: str = "aperture") -> np.ndarray:
    """Nodes predicted good by geometry.

    ``aperture``: the edge direction lies strictly inside the cone's angular
    range, i.e. |slope| > cot(theta/2); such lines eventually run inside the
    cone and cross every later level.  ``printed``: |slope| > cot(theta),
    the symmetrized form of the region as printed.
    """
    if table.kind != "line":
        raise InvalidParameter("analytic regions are stated for (slope, intercept) grids")
    slopes = np.abs(table.params()[:, 0])
    cut = 1 / math.tan(theta / 2) if reading == "aperture" else 1 / math.tan(theta)
    if reading not in ("aperture", "printed"):
        raise InvalidParameter(f"unknown reading {reading!r}")
    return slopes > cut


# ---------------------------------------------------------------- closed forms

def displayed_mass_ratio(H_prev: LogScalar, theta: float, w: int, n: int, corrected: bool = True) -> LogRatio:
    """Asymptotic mass ratio of a cone level as a closed form.

    With a = theta*n/w and L = H_prev + a the ratio is
    (log w + L + log(1 - e^{-a})) / L.  ``corrected=False`` flips the sign
    of the last log term, matching the form as printed.
    """
    if w < 1 or n < 1 or theta <= 0:
        raise InvalidParameter("need w >= 1, n >= 1, theta > 0")
    a = theta * n / w
    tail = math.log1p(-math.exp(-a))
    extra = math.log(w) + (tail if corrected else -tail)
    L = ls_add(H_prev, from_real(a)).to_float()
    delta = extra / L
    return LogRatio(1.0 + delta, abs(delta) * 1e-12 + 4 * 2.0**-52)


def strip_points_below(k: int, w: int, n1: int, m: int) -> int:
    """Points in the first m strip levels: k*w*(m*n1 + m(m-1)/2)."""
    return k * w * (m * n1 + m * (m - 1) // 2)
