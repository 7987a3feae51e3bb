"""Generators for the leveled lattice sets (strip, cone, fattened cone, intro bands).

Every set is a :class:`ChunkSet`: a list of levels, each made of rectangular
chunks of lattice points.  Levels whose start height is an exact integer carry
a *layout* that answers counting, box and tube queries exactly, even when the
level holds far too many points to list.  Levels with a non-integer start
height (``h = e^H`` under paper_exponential growth) are analytic only.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .errors import CapacityExceeded, InvalidParameter
from .geometry import Box, ConeParams, TubeParams, VerticalTube
from .lattice import Clip, tube_row_bounds, tube_rows_count
from .scalars import (
    LogScalar,
    ZERO,
    ls_add,
    ls_exp,
    ls_make,
    ls_mul,
    ls_scale,
)

DIRECT_MAX_CHUNKS = 2_000_000
MATERIALIZE_MAX_POINTS = 5_000_000
CHUNK_LIST_MAX = 10_000
ROW_LOOP_MAX = 1 << 20
WINDOW_ENUM_MAX = 4096
_MP_DPS = 40


# ---------------------------------------------------------------- growth

@dataclass(frozen=True)
class GrowthPolicy:
    """Rule producing the next start height h from the previous end height H."""

    kind: str
    param: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("paper_exponential", "geometric", "power"):
            raise InvalidParameter(f"unknown growth policy {self.kind!r}")
        if self.kind != "paper_exponential" and not (self.param and self.param > 1):
            raise InvalidParameter(f"{self.kind} growth needs a parameter > 1")

    @classmethod
    def paper_exponential(cls) -> GrowthPolicy:
        return cls("paper_exponential")

    @classmethod
    def geometric(cls, R: float) -> GrowthPolicy:
        return cls("geometric", float(R))

    @classmethod
    def power(cls, p: float) -> GrowthPolicy:
        return cls("power", float(p))

    def next_h(self, H: LogScalar) -> LogScalar:
        if self.kind == "paper_exponential":
            return ls_exp(H)
        if self.kind == "geometric":
            if H.is_exact:
                h = round(Fraction(self.param) * H.exact)
                return ls_make(max(h, H.exact + 1))
            return ls_scale(H, self.param)
        if H.is_exact:
            p = self.param
            if float(p).is_integer():
                h = H.exact ** int(p)
            else:
                with mpmath.workdps(max(_MP_DPS, 2 * H.exact.bit_length())):
                    h = int(mpmath.nint(mpmath.mpf(H.exact) ** p))
            return ls_make(max(h, H.exact + 1))
        return ls_exp(ls_scale(H.log_value(), self.param))

    def to_json(self) -> dict:
        out = {"policy": self.kind}
        if self.param is not None:
            out["param"] = self.param
        return out

    @classmethod
    def from_json(cls, obj: dict) -> GrowthPolicy:
        return cls(obj["policy"], obj.get("param"))


# ---------------------------------------------------------------- point sets

@dataclass(frozen=True, eq=False)
class PointSet:
    """Finite planar point set; integer lattice points unless rotated."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points)
        if pts.size == 0:
            pts = np.zeros((0, 2), dtype=np.int64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise InvalidParameter("points must have shape (n, 2)")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_iterable(cls, pts: Iterable[tuple[int, int]]) -> PointSet:
        arr = np.array(list(pts), dtype=np.int64).reshape(-1, 2)
        return cls(arr)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def xs(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def ys(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def bbox(self) -> tuple | None:
        if len(self) == 0:
            return None
        lo = self.points.min(axis=0)
        hi = self.points.max(axis=0)
        return lo[0], lo[1], hi[0], hi[1]

    def count_box(self, box: Box) -> int:
        if len(self) == 0:
            return 0
        x0, y0 = _as_float_or_int(box.x0), _as_float_or_int(box.y0)
        side = _as_float_or_int(box.side)
        return int(np.count_nonzero(Box(x0, y0, side, box.closed).mask(self.xs, self.ys)))

    def is_one_separated(self) -> bool:
        if len(self) < 2:
            return True
        from scipy.spatial import cKDTree

        tree = cKDTree(self.points.astype(float))
        return len(tree.query_pairs(1.0 - 1e-12)) == 0

    def has_duplicates(self) -> bool:
        return len(np.unique(self.points, axis=0)) != len(self)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y"])
            for x, y in self.points.tolist():
                writer.writerow([x, y])


def _as_float_or_int(x):
    if isinstance(x, LogScalar):
        if x.exact is None:
            raise CapacityExceeded("box coordinates must be exact for point counting")
        return x.exact
    if isinstance(x, Fraction):
        return float(x)
    return x


# ---------------------------------------------------------------- chunks & levels

@dataclass(frozen=True)
class Chunk:
    """Lattice points of [x0, x0+width) x [y0, y0+height), clipped to the ambient region."""

    x0: float | int
    y0: int | LogScalar
    width: float
    height: int

    def to_json(self) -> dict:
        y0 = self.y0.to_json() if isinstance(self.y0, LogScalar) else self.y0
        return {"x0": self.x0, "y0": y0, "w": self.width, "n": self.height}


@dataclass(frozen=True)
class TubeHits:
    """Exact tube query result for one level."""

    count: int
    points: np.ndarray | None
    extent: int  # side of the smallest half-open box covering the hits (0 if none)


def _extent(xs: np.ndarray, ys: np.ndarray) -> int:
    if len(xs) == 0:
        return 0
    return int(max(xs.max() - xs.min(), ys.max() - ys.min())) + 1


class _StripLayout:
    """k chunks of w x n climbing diagonally: chunk j at (j*w, h + j*n)."""

    def __init__(self, h: int, n: int, w: int, k: int):
        self.h, self.n, self.w, self.k = h, n, w, k
        self.K = k

    def chunk(self, j: int) -> Chunk:
        return Chunk(j * self.w, self.h + j * self.n, self.w, self.n)

    def count_total(self) -> int:
        return self.k * self.w * self.n

    def x_bounds(self) -> tuple[int, int]:
        return 0, self.k * self.w

    def count_box(self, xa: int, xb: int, ya: int, yb: int) -> int:
        total = 0
        for j in range(self.k):
            cy = min(yb, self.h + (j + 1) * self.n) - max(ya, self.h + j * self.n)
            cx = min(xb, (j + 1) * self.w) - max(xa, j * self.w)
            if cy > 0 and cx > 0:
                total += cy * cx
        return total

    def points(self) -> np.ndarray:
        blocks = []
        for j in range(self.k):
            xs, ys = np.meshgrid(
                np.arange(j * self.w, (j + 1) * self.w, dtype=np.int64),
                np.arange(self.h + j * self.n, self.h + (j + 1) * self.n, dtype=np.int64),
            )
            blocks.append(np.column_stack([xs.ravel(), ys.ravel()]))
        return np.concatenate(blocks) if blocks else np.zeros((0, 2), np.int64)

    def leftmost_x(self) -> int:
        return 0


class _IntroLayout:
    """All lattice points of the cone with b <= y < b + s (one band)."""

    def __init__(self, b: int, s: int, clip: Clip):
        self.b, self.s, self.clip = b, s, clip
        self.n = s
        self.K = 1
        self.top = b + s - 1

    def x_bounds(self) -> tuple[int, int]:
        f = self.clip.f(self.top)
        return -f, f + 1

    def chunk(self, j: int) -> Chunk:
        a, bx = self.x_bounds()
        return Chunk(a, self.b, bx - a, self.s)

    def count_total(self) -> int:
        a, bx = self.x_bounds()
        return self.clip.rows_count(self.b, self.b + self.s, a, bx)

    def count_box(self, xa: int, xb: int, ya: int, yb: int) -> int:
        a, bx = self.x_bounds()
        return self.clip.rows_count(max(ya, self.b), min(yb, self.b + self.s), max(xa, a), min(xb, bx))

    def leftmost_x(self) -> int:
        return self.x_bounds()[0]

    def points(self) -> np.ndarray:
        ys = np.arange(self.b, self.b + self.s, dtype=np.int64)
        f = self.clip.f_array(ys)
        widths = 2 * f + 1
        row_y = np.repeat(ys, widths)
        starts = np.repeat(-f, widths)
        offs = np.arange(int(widths.sum())) - np.repeat(np.cumsum(widths) - widths, widths)
        return np.column_stack([starts + offs, row_y])

    def tube_hits(self, tube, want_points: bool) -> TubeHits:
        b, s = self.b, self.s
        if s <= ROW_LOOP_MAX:
            count = 0
            xs, ys = [], []
            for y in range(b, b + s):
                r = tube_row_bounds(tube, y)
                if r is None:
                    continue
                f = self.clip.f(y)
                lo, hi = max(r[0], -f), min(r[1], f + 1)
                if hi > lo:
                    count += hi - lo
                    xs.append((lo, hi - 1))
                    ys.append(y)
            if count == 0:
                return TubeHits(0, np.zeros((0, 2), np.int64) if want_points else None, 0)
            xmin = min(a for a, _ in xs)
            xmax = max(c for _, c in xs)
            ext = max(xmax - xmin, ys[-1] - ys[0]) + 1
            pts = None
            if want_points:
                pts = np.array([(x, y) for (a, c), y in zip(xs, ys) for x in range(a, c + 1)], dtype=object)
                try:
                    pts = pts.astype(np.int64)
                except OverflowError:
                    pass
            return TubeHits(count, pts, ext)
        # large band: only valid when the tube stays inside the cone throughout
        for y in (b, b + s - 1):
            r = tube_row_bounds(tube, y)
            f = self.clip.f(y)
            if r is None or r[0] < -f + 1 or r[1] > f:
                raise CapacityExceeded("tube leaves the cone inside a band too tall to scan row by row")
        count = tube_rows_count(tube, b, b + s)
        r0 = tube_row_bounds(tube, b)
        r1 = tube_row_bounds(tube, b + s - 1)
        xmin = min(r0[0], r1[0])
        xmax = max(r0[1], r1[1]) - 1
        return TubeHits(count, None, max(xmax - xmin, s - 1) + 1)


class _HarmonicAngles:
    """Chunk angles alpha_j = -theta/2 + sum_{i<j} w / (h + i*n) for one cone level."""

    def __init__(self, h: int, n: int, w: int, theta: float):
        self.h, self.n, self.w, self.theta = h, n, w, theta
        self._x0 = None
        est = (h / n) * math.expm1(theta * n / w)
        self.direct = est <= DIRECT_MAX_CHUNKS
        if self.direct:
            kmax = int(est * 1.02) + 64
            while True:
                terms = w / (h + n * np.arange(kmax, dtype=float))
                acc = np.cumsum(terms)
                idx = int(np.searchsorted(acc, theta, side="left"))
                if idx < kmax:
                    break
                kmax *= 2
            self.K = idx + 1
            prefix = np.concatenate([[0.0], acc[: self.K - 1]])
            self.alpha = -theta / 2 + prefix
        else:
            self.K = self._solve_K(est)
            self.alpha = None

    def _A_mp(self, k: int):
        with mpmath.workdps(_MP_DPS):
            q = mpmath.mpf(self.h) / self.n
            return (mpmath.mpf(self.w) / self.n) * (mpmath.digamma(q + k) - mpmath.digamma(q))

    def _solve_K(self, est: float) -> int:
        theta = mpmath.mpf(self.theta)
        slack = int(est * 1e-6) + 1000
        lo = max(0, int(est) - slack)
        hi = int(est) + slack
        while lo > 0 and self._A_mp(lo) >= theta:
            lo = max(0, lo - 2 * slack)
        while self._A_mp(hi) < theta:
            hi += 2 * slack
        # invariant: A(lo) < theta <= A(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self._A_mp(mid) >= theta:
                hi = mid
            else:
                lo = mid
        return hi

    def angle(self, j: int) -> float:
        if self.direct:
            return float(self.alpha[j])
        return float(-mpmath.mpf(self.theta) / 2 + self._A_mp(j))

    def angle_approx(self, j: int) -> float:
        """Float angle, accurate enough to locate chunks (asymptotic digamma)."""
        if self.direct:
            return float(self.alpha[j])
        q = self.h / self.n

        def psi_tail(x: float) -> float:
            return -1 / (2 * x) - 1 / (12 * x * x)

        d = math.log1p(j / q) + psi_tail(q + j) - psi_tail(q)
        return -self.theta / 2 + (self.w / self.n) * d

    @lru_cache(maxsize=65536)
    def x0(self, j: int) -> int:
        y = self.h + j * self.n
        if self.direct:
            # one code path for scalar and vector lookups keeps them identical
            return int(self.x0_array()[j])
        with mpmath.workdps(_MP_DPS):
            a = -mpmath.mpf(self.theta) / 2 + self._A_mp(j)
            return int(mpmath.floor(y * mpmath.tan(a)))

    def x0_array(self) -> np.ndarray:
        if self._x0 is None:
            ys = self.h + self.n * np.arange(self.K, dtype=float)
            self._x0 = np.floor(ys * np.tan(self.alpha)).astype(np.int64)
            self._x0.setflags(write=False)
        return self._x0

    def index_at_angle(self, target: float) -> int:
        """Largest j in [0, K) with angle(j) <= target (0 if none)."""
        if self.direct:
            return max(0, min(self.K - 1, int(np.searchsorted(self.alpha, target, side="right")) - 1))
        a = target + self.theta / 2
        if a <= 0:
            return 0
        est = int((self.h / self.n) * math.expm1(a * self.n / self.w))
        lo, hi = max(0, est - 2000), min(self.K - 1, est + 2000)
        while lo > 0 and self.angle(lo) > target:
            lo = max(0, lo - 4000)
        while hi < self.K - 1 and self.angle(hi) <= target:
            hi = min(self.K - 1, hi + 4000)
        if self.angle(hi) <= target:
            return hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.angle(mid) <= target:
                lo = mid
            else:
                hi = mid
        return lo


class _ConeLayout:
    """Cone level: chunk j on rows [h + j*n, h + (j+1)*n) with left edge floor(y*tan(alpha_j)).

    Columns of chunk j are [x0_j + off_l, x0_j + off_r); the last chunk is
    stretched to reach the right edge.  Points are clipped by ``clip``.
    """

    def __init__(self, h: int, n: int, w: int, theta: float, pad: Fraction, clip: Clip):
        self.h, self.n, self.w, self.theta = h, n, w, theta
        self.pad = pad
        self.clip = clip
        self.off_l = math.ceil(-pad)
        self.off_r = math.ceil(w + pad)
        self.angles = _HarmonicAngles(h, n, w, theta)
        self.K = self.angles.K
        self.H = h + self.K * n
        self._last_b = max(
            self.angles.x0(self.K - 1) + self.off_r, self.clip.f(self.H - 1) + 1
        )
        self._arrays = None
        self._boundary = None

    # -- per-chunk geometry
    def cols(self, j: int) -> tuple[int, int]:
        x0 = self.angles.x0(j)
        b = self._last_b if j == self.K - 1 else x0 + self.off_r
        return x0 + self.off_l, b

    def chunk(self, j: int) -> Chunk:
        a, b = self.cols(j)
        return Chunk(a, self.h + j * self.n, b - a, self.n)

    def _interior(self, j: int) -> bool:
        if j == self.K - 1:
            return False
        a, b = self.cols(j)
        f = self.clip.f(self.h + j * self.n)
        return a >= -f and b - 1 <= f

    def _chunk_count(self, j: int, xa=None, xb=None, ya=None, yb=None) -> int:
        a, b = self.cols(j)
        y0 = self.h + j * self.n
        y1 = y0 + self.n
        if xa is not None:
            a, b = max(a, xa), min(b, xb)
            y0, y1 = max(y0, ya), min(y1, yb)
        if a >= b or y0 >= y1:
            return 0
        return self.clip.rows_count(y0, y1, a, b)

    def arrays(self):
        """Per-chunk arrays (direct levels only): a, b, interior flag, exact count."""
        if self._arrays is None:
            if not self.angles.direct:
                raise CapacityExceeded("level too large for per-chunk arrays")
            x0 = self.angles.x0_array()
            a = x0 + self.off_l
            b = x0 + self.off_r
            b[-1] = self._last_b
            ys = self.h + self.n * np.arange(self.K, dtype=np.int64)
            fb = self.clip.f_array(ys)
            interior = (a >= -fb) & (b - 1 <= fb)
            interior[-1] = False
            counts = np.where(interior, (b - a) * self.n, 0).astype(np.int64)
            for j in np.flatnonzero(~interior):
                counts[j] = self.clip.rows_count(int(ys[j]), int(ys[j]) + self.n, int(a[j]), int(b[j]))
            self._arrays = (a, b, interior, counts, ys)
        return self._arrays

    def boundary_indices(self) -> list[int]:
        """Chunks not entirely inside the clip (a prefix and a suffix of the level)."""
        if self._boundary is None:
            if self.angles.direct:
                self._boundary = np.flatnonzero(~self.arrays()[2]).tolist()
            else:
                out = []
                j = 0
                while j < self.K - 1 and not self._interior(j):
                    out.append(j)
                    j += 1
                first_interior = j
                j = self.K - 2
                tail = []
                while j >= first_interior and not self._interior(j):
                    tail.append(j)
                    j -= 1
                self._boundary = out + sorted(tail) + [self.K - 1]
        return self._boundary

    def count_total(self) -> int:
        if self.angles.direct:
            return int(self.arrays()[3].sum())
        bnd = self.boundary_indices()
        total = sum(self._chunk_count(j) for j in bnd)
        return total + (self.K - len(bnd)) * self.n * (self.off_r - self.off_l)

    def x_bounds(self) -> tuple[int, int]:
        """Half-open column range containing every point of the level."""
        f = self.clip.f(self.H - 1)
        return -f, f + 1

    def leftmost_x(self) -> int:
        if self.angles.direct:
            a, b, _, counts, ys = self.arrays()
            ftop = self.clip.f_array(ys + self.n - 1)
            left = np.maximum(a, -ftop)
            return int(left[counts > 0].min())
        return self.x_bounds()[0]

    def count_box(self, xa: int, xb: int, ya: int, yb: int) -> int:
        ya, yb = max(ya, self.h), min(yb, self.H)
        lo_x, hi_x = self.x_bounds()
        xa_c, xb_c = max(xa, lo_x), min(xb, hi_x)
        if ya >= yb or xa_c >= xb_c:
            return 0
        if ya == self.h and yb == self.H and xa_c == lo_x and xb_c == hi_x:
            return self.count_total()
        ja = (ya - self.h) // self.n
        jb = (yb - 1 - self.h) // self.n
        if self.angles.direct:
            a, b, interior, counts, ys = self.arrays()
            sl = slice(ja, jb + 1)
            ry = np.minimum(yb, ys[sl] + self.n) - np.maximum(ya, ys[sl])
            cx = np.minimum(xb, b[sl]) - np.maximum(xa, a[sl])
            ok = (ry > 0) & (cx > 0)
            inner = ok & interior[sl]
            total = int((ry[inner] * cx[inner]).sum())
            for off in np.flatnonzero(ok & ~interior[sl]):
                total += self._chunk_count(ja + int(off), xa, xb, ya, yb)
            return total
        if jb - ja > 100_000:
            raise CapacityExceeded("box crosses too many chunks of a huge level")
        return sum(self._chunk_count(j, xa, xb, ya, yb) for j in range(ja, jb + 1))

    def points(self) -> np.ndarray:
        a, b, _, counts, ys = self.arrays()
        total = int(counts.sum())
        if total > MATERIALIZE_MAX_POINTS:
            raise CapacityExceeded(f"level holds {total} points")
        n = self.n
        row_y = (ys[:, None] + np.arange(n)[None, :]).ravel()
        f = self.clip.f_array(row_y)
        lo = np.maximum(np.repeat(a, n), -f)
        hi = np.minimum(np.repeat(b, n) - 1, f)
        widths = np.maximum(hi - lo + 1, 0)
        rows = np.repeat(row_y, widths)
        starts = np.repeat(lo, widths)
        offs = np.arange(int(widths.sum())) - np.repeat(np.cumsum(widths) - widths, widths)
        return np.column_stack([starts + offs, rows])

    def chunk_points(self, js: Sequence[int]) -> np.ndarray:
        js = list(js)
        if not js:
            return np.zeros((0, 2), np.int64)
        ab = np.array([self.cols(j) for j in js], dtype=np.int64).reshape(-1, 2)
        y0 = self.h + self.n * np.asarray(js, dtype=np.int64)
        row_y = (y0[:, None] + np.arange(self.n, dtype=np.int64)[None, :]).ravel()
        f = self.clip.f_array(row_y)
        lo = np.maximum(np.repeat(ab[:, 0], self.n), -f)
        hi = np.minimum(np.repeat(ab[:, 1], self.n) - 1, f)
        widths = np.maximum(hi - lo + 1, 0)
        rows = np.repeat(row_y, widths)
        starts = np.repeat(lo, widths)
        offs = np.arange(int(widths.sum())) - np.repeat(np.cumsum(widths) - widths, widths)
        return np.column_stack([starts + offs, rows])

    # -- tube queries
    def _tube_rows(self, tube) -> tuple[int, int] | None:
        """Row range of the level where the tube can meet the (widened) cone."""
        nx, ny, lo, hi = tube.normal_form()
        t = float(self.clip.t)
        M = self.w + float(self.pad) + 4.0
        # x-range of the tube in row y: between p(y) and q(y), linear in y
        ends = [((lo) / nx, -ny / nx), ((hi) / nx, -ny / nx)]
        (p0, p1), (q0, q1) = ends
        if p0 > q0:
            (p0, p1), (q0, q1) = (q0, q1), (p0, p1)
        y_lo, y_hi = float(self.h), float(self.H - 1)
        # max(I) + y t + M >= 0  and  min(I) - y t - M <= 0
        for c0, c1 in ((q0 + M, q1 + t), (-p0 + M, -p1 + t)):
            if abs(c1) < 1e-300:
                if c0 < 0:
                    return None
                continue
            root = -c0 / c1
            if c1 > 0:
                y_lo = max(y_lo, root)
            else:
                y_hi = min(y_hi, root)
        slack = 2.0 + 1e-9 * (abs(y_lo) + abs(y_hi))
        a = max(self.h, math.floor(y_lo - slack))
        b = min(self.H - 1, math.ceil(y_hi + slack))
        if a > b:
            return None
        return a, b

    def tube_hits(self, tube, want_points: bool) -> TubeHits:
        rows = self._tube_rows(tube)
        if rows is None:
            return TubeHits(0, np.zeros((0, 2), np.int64) if want_points else None, 0)
        ja = (rows[0] - self.h) // self.n
        jb = (rows[1] - self.h) // self.n
        if jb - ja + 1 <= WINDOW_ENUM_MAX:
            pts = self.chunk_points(range(ja, jb + 1))
            hit = pts[tube.lattice_mask(pts[:, 0], pts[:, 1])]
        else:
            hit = self._window_hits(tube, ja, jb)
        ext = _extent(hit[:, 0], hit[:, 1])
        return TubeHits(len(hit), hit if want_points else None, ext)

    def _window_hits(self, tube, ja: int, jb: int) -> np.ndarray:
        """Hits of a tube crossing many chunks: search near the matching angle."""
        nx, ny, lo, hi = tube.normal_form()
        mid = 0.5 * (lo + hi)

        def g(j: int) -> float:
            y = self.h + j * self.n + 0.5 * self.n
            xc = (mid - ny * y) / nx
            return self.angles.angle_approx(j) - math.atan2(xc, y)

        a, b = ja, jb
        if g(a) >= 0:
            js = a
        elif g(b) < 0:
            js = b
        else:
            while b - a > 1:
                m = (a + b) // 2
                if g(m) >= 0:
                    b = m
                else:
                    a = m
            js = b
        t = float(self.clip.t)
        R = math.ceil((self.w + 4 + 2 * float(self.pad) + self.n * t) / self.w) + 4
        left, right = max(ja, js - R), min(jb, js + R)
        while True:
            pts = self.chunk_points(range(left, right + 1))
            hit = pts[tube.lattice_mask(pts[:, 0], pts[:, 1])]
            grow = False
            if len(hit):
                rows = (hit[:, 1] - self.h) // self.n
                if rows.min() <= left + 1 and left > ja:
                    left = max(ja, left - R)
                    grow = True
                if rows.max() >= right - 1 and right < jb:
                    right = min(jb, right + R)
                    grow = True
            if not grow:
                return hit


@dataclass(frozen=True, eq=False)
class Level:
    m: int
    h: LogScalar
    H: LogScalar
    n: int
    K: LogScalar
    layout: object = field(default=None, repr=False)

    @property
    def exact(self) -> bool:
        return self.layout is not None

    @property
    def chunks(self) -> list[Chunk] | None:
        if self.layout is None or self.layout.K > CHUNK_LIST_MAX:
            return None
        return [self.layout.chunk(j) for j in range(self.layout.K)]

    def to_json(self) -> dict:
        chunks = self.chunks
        return {
            "m": self.m,
            "h": self.h.to_json(),
            "H": self.H.to_json(),
            "n": self.n,
            "K": self.K.to_json(),
            "chunks": None if chunks is None else [c.to_json() for c in chunks],
        }


@dataclass(frozen=True, eq=False)
class ChunkSet:
    kind: str
    params: dict
    levels: tuple[Level, ...]
    clip: Clip | None = None

    def level(self, m: int) -> Level:
        for lv in self.levels:
            if lv.m == m:
                return lv
        raise InvalidParameter(f"no level {m}")

    @property
    def cone(self) -> ConeParams | None:
        if "theta" in self.params:
            return ConeParams(self.params["theta"])
        return None

    @property
    def pad(self) -> float:
        return float(self.params.get("eps", 0.0))

    def to_json(self) -> dict:
        params = dict(self.params)
        if "growth" in params:
            params["growth"] = params["growth"].to_json()
        return {"kind": self.kind, "params": params, "levels": [lv.to_json() for lv in self.levels]}


# ---------------------------------------------------------------- estimates

@dataclass(frozen=True)
class KmEstimate:
    estimate: LogScalar
    exact: int | None = None
    rel_dev: float | None = None


def km_estimate(h: LogScalar, n: int, w: int, theta: float) -> KmEstimate:
    """Asymptotic chunk count (h/n)(e^{theta n/w} - 1), plus the exact count when h is small."""
    if h < ls_make(1) or n < 1 or w < 1 or theta <= 0:
        raise InvalidParameter("km_estimate needs h >= 1, n >= 1, w >= 1, theta > 0")
    est = ls_scale(h, math.expm1(theta * n / w) / n)
    if h.is_exact and h.exact <= 10**8:
        K = _HarmonicAngles(h.exact, n, w, theta).K
        approx = est.to_float()
        return KmEstimate(est, K, abs(K - approx) / K)
    return KmEstimate(est)


# ---------------------------------------------------------------- builders

def _check_positive_ints(**vals) -> None:
    for name, val in vals.items():
        if isinstance(val, bool) or int(val) != val or val < 1:
            raise InvalidParameter(f"{name} must be a positive integer, got {val!r}")


def _check_theta(theta: float) -> None:
    if not (0 < theta < math.pi):
        raise InvalidParameter("theta must lie in (0, pi)")


def build_strip_set(
    u0: float | None, k: int, w: int, n1: int, h1: int, levels: int, growth: GrowthPolicy
) -> ChunkSet:
    """k diagonal chunks per level inside a strip of width k*w.

    Coordinates are strip-aligned: the strip is {0 <= x < k*w}.  ``u0``
    records the tube family the strip is aligned with (None: vertical);
    :func:`world_points` maps the native lattice onto that direction.
    """
    _check_positive_ints(k=k, w=w, n1=n1, h1=h1, levels=levels)
    if u0 is not None and (u0 == 0 or not math.isfinite(u0)):
        raise InvalidParameter("u0 must be nonzero and finite")
    out = []
    h = ls_make(h1)
    H_prev = None
    for m in range(1, levels + 1):
        if m > 1:
            h = growth.next_h(H_prev)
        n = n1 + m - 1
        H = ls_add(h, ls_make(k * n))
        layout = _StripLayout(h.exact, n, w, k) if h.is_exact else None
        out.append(Level(m, h, H, n, ls_make(k), layout))
        H_prev = H
    params = {"u0": u0, "k": k, "w": w, "n1": n1, "h1": h1, "levels": levels, "growth": growth}
    return ChunkSet("strip", params, tuple(out))


def _cone_levels(theta, w, n1, h1, levels, growth, pad: Fraction, clip: Clip) -> tuple[Level, ...]:
    out = []
    h = ls_make(h1)
    H_prev = None
    for m in range(1, levels + 1):
        if m > 1:
            h = growth.next_h(H_prev)
            if not h > H_prev:
                raise InvalidParameter("growth policy must move past the previous level")
        n = n1 + m - 1
        if h.is_exact:
            layout = _ConeLayout(h.exact, n, w, theta, pad, clip)
            K = ls_make(layout.K)
            H = ls_make(layout.H)
        else:
            layout = None
            K = km_estimate(h, n, w, theta).estimate
            H = ls_add(h, ls_scale(K, float(n)))
        out.append(Level(m, h, H, n, K, layout))
        H_prev = H
    return tuple(out)


def build_cone_set(theta: float, w: int, n1: int, h1: int, levels: int, growth: GrowthPolicy) -> ChunkSet:
    """Chunks sweeping the cone of total angle theta from the left edge to the right edge."""
    _check_theta(theta)
    _check_positive_ints(w=w, n1=n1, h1=h1, levels=levels)
    clip = Clip.from_floats(math.tan(theta / 2))
    lv = _cone_levels(theta, w, n1, h1, levels, growth, Fraction(0), clip)
    params = {"theta": theta, "w": w, "n1": n1, "h1": h1, "levels": levels, "growth": growth}
    return ChunkSet("cone", params, lv, clip)


def build_fattened_cone_set(
    theta: float, eps: float, w: int, n1: int, h1: int, levels: int, growth: GrowthPolicy
) -> ChunkSet:
    """Cone set with every chunk widened by eps on both sides.

    The ambient region becomes the union of the cones with vertices
    (v, 0), |v| < eps, i.e. |x| <= y*tan(theta/2) + eps.
    """
    _check_theta(theta)
    _check_positive_ints(w=w, n1=n1, h1=h1, levels=levels)
    if not (0 < eps < w):
        raise InvalidParameter("eps must satisfy 0 < eps < w")
    clip = Clip.from_floats(math.tan(theta / 2), eps)
    lv = _cone_levels(theta, w, n1, h1, levels, growth, Fraction(eps), clip)
    params = {"theta": theta, "eps": eps, "w": w, "n1": n1, "h1": h1, "levels": levels, "growth": growth}
    return ChunkSet("fattened", params, lv, clip)


def build_intro_cone(theta: float, k_lo: int, k_hi: int) -> ChunkSet:
    """Cone points in the bands 2^(2^(k+1)) <= y < 2^(2^(k+1)) + 2^(2^k)."""
    _check_theta(theta)
    _check_positive_ints(k_lo=k_lo, k_hi=k_hi)
    if k_hi < k_lo:
        raise InvalidParameter("k_hi must be >= k_lo")
    clip = Clip.from_floats(math.tan(theta / 2))
    out = []
    for k in range(k_lo, k_hi + 1):
        if 2 ** (k + 1) + 1 > 4096:
            raise CapacityExceeded(f"band {k} lies beyond the exact-integer threshold")
        b = 2 ** (2 ** (k + 1))
        s = 2 ** (2**k)
        out.append(Level(k, ls_make(b), ls_make(b + s), s, ls_make(1), _IntroLayout(b, s, clip)))
    params = {"theta": theta, "k_lo": k_lo, "k_hi": k_hi}
    return ChunkSet("intro", params, tuple(out), clip)


# ---------------------------------------------------------------- queries

def _select(cs: ChunkSet, level_range) -> list[Level]:
    if level_range is None:
        return list(cs.levels)
    wanted = set(level_range)
    return [lv for lv in cs.levels if lv.m in wanted]


def materialize(cs: ChunkSet, level_range=None) -> PointSet:
    """Explicit lattice points of the selected levels (strip-aligned frame for strips)."""
    blocks = []
    total = 0
    for lv in _select(cs, level_range):
        if not lv.exact:
            raise CapacityExceeded(f"level {lv.m} has a non-integer start height")
        est = lv.layout.count_total()
        total += est
        if total > MATERIALIZE_MAX_POINTS:
            raise CapacityExceeded(f"materialization needs {total} points")
        blocks.append(lv.layout.points())
    if not blocks:
        return PointSet(np.zeros((0, 2), np.int64))
    return PointSet(np.concatenate(blocks))


def level_count(lv: Level, cs: ChunkSet) -> LogScalar:
    """Number of points in a level (analytic when the level is not exact)."""
    if lv.exact:
        return ls_make(lv.layout.count_total())
    width = cs.params.get("w", 1)
    if cs.kind == "fattened":
        width = math.ceil(width + cs.pad) - math.ceil(-cs.pad)
    return ls_mul(ls_mul(lv.K, ls_make(lv.n)), ls_make(width))


def _as_scalar(x) -> LogScalar:
    if isinstance(x, LogScalar):
        return x
    if isinstance(x, (int, np.integer)):
        return ls_make(max(int(x), 0))
    return ls_make(max(math.floor(Fraction(x)), 0))


def level_x_halfwidth(lv: Level, cs: ChunkSet) -> LogScalar:
    """Bound on |x| over the level's points."""
    if cs.kind == "strip":
        return ls_make(cs.params["k"] * cs.params["w"])
    t = math.tan(cs.params["theta"] / 2)
    return ls_add(ls_scale(lv.H, t), ls_make(math.ceil(cs.pad) + cs.params.get("w", 1) + 2))


def chunk_count(cs: ChunkSet, b: Box) -> LogScalar:
    """Number of points of ``cs`` inside box ``b`` (exact where levels are exact)."""
    if b.symbolic:
        raise InvalidParameter("chunk_count needs a numeric box; use level_count for whole levels")
    xa, xb = b.int_range_x()
    ya, yb = b.int_range_y()
    total = ZERO
    exact_total = 0
    for lv in cs.levels:
        if lv.exact:
            exact_total += lv.layout.count_box(xa, xb, ya, yb)
            continue
        # analytic level: only whole-level cover or miss can be decided
        if yb <= 0 or _as_scalar(yb) <= lv.h or _as_scalar(max(ya, 0)) >= lv.H:
            continue
        reach = level_x_halfwidth(lv, cs)
        covers_y = ya <= 0 or _as_scalar(ya) <= lv.h
        covers_y = covers_y and _as_scalar(yb) >= lv.H
        covers_x = xa <= 0 and _as_scalar(-xa) >= reach and _as_scalar(max(xb, 0)) >= reach
        if covers_y and covers_x:
            total = ls_add(total, level_count(lv, cs))
        else:
            raise CapacityExceeded(f"box cuts through analytic level {lv.m}")
    return ls_add(total, ls_make(exact_total))


def world_points(cs: ChunkSet, ps: PointSet) -> np.ndarray:
    """Map strip-aligned points onto the world frame of the strip's tube family."""
    u0 = cs.params.get("u0")
    if cs.kind != "strip" or u0 is None:
        return ps.points.astype(float)
    nrm, dirn = _strip_frame(u0)
    pts = ps.points.astype(float)
    return pts[:, :1] * nrm[None, :] + pts[:, 1:] * dirn[None, :]


def _strip_frame(u0: float) -> tuple[np.ndarray, np.ndarray]:
    c = math.sqrt(1 + 1 / u0**2)
    nrm = np.array([1 / (u0 * c), 1 / c])
    r = math.hypot(u0, 1.0)
    dirn = np.array([-u0 / r, 1 / r])
    return nrm, dirn


def native_tube_mask(cs: ChunkSet, tube, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Tube membership for points given in the set's native frame."""
    u0 = cs.params.get("u0") if cs.kind == "strip" else None
    if u0 is None:
        return tube.lattice_mask(xs, ys)
    if isinstance(tube, TubeParams) and tube.u == u0:
        # aligned family: the tube is the native band v < x <= v + 1
        return (xs > tube.v) & (xs <= tube.v + 1)
    nrm, dirn = _strip_frame(u0)
    nx, ny, lo, hi = tube.normal_form()
    a = nx * nrm[0] + ny * nrm[1]
    b = nx * dirn[0] + ny * dirn[1]
    proj = a * xs.astype(float) + b * ys.astype(float)
    return (proj > lo) & (proj <= hi)


def level_tube_hits(cs: ChunkSet, lv: Level, tube, want_points: bool = False) -> TubeHits | None:
    """Exact tube hits for one level, or None when the level is analytic."""
    if cs.kind == "strip":
        layout = lv.layout
        if layout is None:
            u0 = cs.params.get("u0")
            aligned = isinstance(tube, VerticalTube) if u0 is None else (
                isinstance(tube, TubeParams) and tube.u == u0)
            if not aligned:
                return None
            # column queries do not depend on the start height
            layout = _StripLayout(0, lv.n, cs.params["w"], cs.params["k"])
            pts = layout.points()
            hit = pts[native_tube_mask(cs, tube, pts[:, 0], pts[:, 1])]
            return TubeHits(len(hit), None, _extent(hit[:, 0], hit[:, 1]))
        pts = layout.points()
        hit = pts[native_tube_mask(cs, tube, pts[:, 0], pts[:, 1])]
        return TubeHits(len(hit), hit if want_points else None, _extent(hit[:, 0], hit[:, 1]))
    if lv.layout is None:
        return None
    return lv.layout.tube_hits(tube, want_points)
