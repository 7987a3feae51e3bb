"""Tubes, lines, cones and boxes, with their membership predicates.

A tube ``t_{u,v}`` is the band

    -x/u + v*c < y <= -x/u + (v+1)*c,    c = sqrt(1 + 1/u**2)

of perpendicular width 1.  Its lower edge (the "right edge" for the cone
constructions) has slope ``-1/u``.  Points on the lower line are outside,
points on the upper line are inside.

Lattice counting at very large coordinates needs more than doubles can
give, so tubes and cones also offer exact rational forms of the same
predicates, built from the exact values of their float parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .errors import InvalidParameter
from .scalars import LogScalar

Number = Union[int, float, Fraction]

# float comparisons closer than this (relative to coordinate size) are re-decided exactly
_AMBIGUOUS = 1e-12


def _check_finite(**vals: float) -> None:
    for name, val in vals.items():
        if not math.isfinite(val):
            raise InvalidParameter(f"{name} must be finite, got {val}")


@dataclass(frozen=True)
class TubeParams:
    """Width-1 tube parametrized by projecting-line slope ``u`` and offset ``v``."""

    u: float
    v: float

    def __post_init__(self) -> None:
        if self.u == 0:
            raise InvalidParameter("u must be nonzero")
        _check_finite(u=self.u, v=self.v)

    @property
    def c(self) -> float:
        return math.sqrt(1.0 + 1.0 / (self.u * self.u))

    @property
    def slope(self) -> float:
        """Slope of the two boundary lines."""
        return -1.0 / self.u

    def edges_at(self, x: float) -> tuple[float, float]:
        """Open lower and closed upper y-bound at abscissa x."""
        c = self.c
        base = -x / self.u
        return base + self.v * c, base + (self.v + 1) * c

    def contains(self, x: float, y: float) -> bool:
        lo, hi = self.edges_at(x)
        return lo < y <= hi

    def mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`contains` (same float operations)."""
        c = self.c
        base = -np.asarray(xs, dtype=float) / self.u
        ys = np.asarray(ys, dtype=float)
        return (base + self.v * c < ys) & (ys <= base + (self.v + 1) * c)

    def _exact(self) -> tuple[Fraction, Fraction, Fraction]:
        u, v, c = Fraction(self.u), Fraction(self.v), Fraction(self.c)
        return u, v * c, (v + 1) * c

    def contains_exact(self, x: Number, y: Number) -> bool:
        u, lo, hi = self._exact()
        base = -Fraction(x) / u
        return base + lo < y <= base + hi

    def lattice_mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Membership of integer points, exact even at ties.

        Float margins decide most points; the few within rounding distance
        of an edge are re-decided with rational arithmetic.
        """
        xs = np.asarray(xs)
        ys = np.asarray(ys)
        if xs.size == 0:
            return np.zeros(0, dtype=bool)
        c = self.c
        xf = xs.astype(float)
        yf = ys.astype(float)
        base = -xf / self.u
        lo_m = yf - (base + self.v * c)
        hi_m = (base + (self.v + 1) * c) - yf
        out = (lo_m > 0) & (hi_m >= 0)
        tol = _AMBIGUOUS * (np.abs(xf) / abs(self.u) + np.abs(yf) + abs(self.v) * c + c + 1.0)
        amb = np.flatnonzero((np.abs(lo_m) <= tol) | (np.abs(hi_m) <= tol))
        if amb.size:
            u, lo, hi = self._exact()
            for i in amb:
                base_q = -Fraction(int(xs[i])) / u
                out[i] = base_q + lo < int(ys[i]) <= base_q + hi
        return out

    def normal_form(self) -> tuple[float, float, float, float]:
        """(nx, ny, lo, hi) with membership lo < nx*x + ny*y <= hi."""
        c = self.c
        return 1.0 / (self.u * c), 1.0 / c, self.v, self.v + 1.0

    def to_json(self) -> dict:
        return {"u": self.u, "v": self.v}


@dataclass(frozen=True)
class VerticalTube:
    """Band x0 <= x < x0 + 1, the u -> 0 limit that the (u, v) form cannot express."""

    x0: float

    def __post_init__(self) -> None:
        _check_finite(x0=self.x0)

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x < self.x0 + 1

    def mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        return (self.x0 <= xs) & (xs < self.x0 + 1)

    def contains_exact(self, x: Number, y: Number) -> bool:
        x0 = Fraction(self.x0)
        return x0 <= x < x0 + 1

    def lattice_mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        # exactly one lattice column, ceil(x0), lies in [x0, x0 + 1)
        return np.asarray(xs) == math.ceil(self.x0)

    def normal_form(self) -> tuple[float, float, float, float]:
        # x0 <= x < x0+1  <=>  -x0-1 < -x <= -x0
        return -1.0, 0.0, -self.x0 - 1.0, -self.x0

    def to_json(self) -> dict:
        return {"vertical_x0": self.x0}


Tube = Union[TubeParams, VerticalTube]


def tube_contains(t: TubeParams, p: tuple[float, float]) -> bool:
    return t.contains(p[0], p[1])


@dataclass(frozen=True)
class LineParams:
    """Line with slope ``slope``; ``intercept`` is on the axis named by ``axis``.

    ``axis="x"``: the line y = slope * (x - intercept).
    ``axis="y"``: the line y = slope * x + intercept.
    """

    slope: float
    intercept: float
    axis: str = "x"

    def __post_init__(self) -> None:
        if self.axis not in ("x", "y"):
            raise InvalidParameter(f"axis must be 'x' or 'y', got {self.axis!r}")
        _check_finite(slope=self.slope, intercept=self.intercept)

    def y_at(self, x: float) -> float:
        if self.axis == "x":
            return self.slope * (x - self.intercept)
        return self.slope * x + self.intercept

    def to_json(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "axis": self.axis}


def line_to_tube(l: LineParams) -> TubeParams:
    """Tube whose open lower edge is the line ``l``."""
    if l.slope == 0:
        raise InvalidParameter("a horizontal line is not the edge of a (u, v) tube")
    s = l.slope
    root = math.sqrt(1.0 + s * s)
    if l.axis == "x":
        v = -s * l.intercept / root
    else:
        v = l.intercept / root
    return TubeParams(u=-1.0 / s, v=v)


def tube_to_line(t: TubeParams, axis: str = "x") -> LineParams:
    """Lower edge of ``t`` as a line (inverse of :func:`line_to_tube`)."""
    s = t.slope
    b = t.v * t.c  # y-intercept of the lower edge
    if axis == "y":
        return LineParams(s, b, "y")
    return LineParams(s, -b / s, "x")


def broken_line_contains(l: LineParams, p: tuple[int, int]) -> bool:
    """True iff p[1] == floor(slope * p[0] + intercept)."""
    if l.axis != "y":
        raise InvalidParameter("broken lines use the y-intercept form")
    return p[1] == math.floor(l.slope * p[0] + l.intercept)


@dataclass(frozen=True)
class ConeParams:
    """Closed cone of total angle ``theta`` opening upward from ``vertex``."""

    theta: float
    vertex: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not (0 < self.theta < math.pi):
            raise InvalidParameter("theta must lie in (0, pi)")

    @property
    def half_tan(self) -> float:
        return math.tan(self.theta / 2)

    @property
    def beta(self) -> float:
        """cot(theta/2): the edge slopes are +-beta."""
        return 1.0 / self.half_tan

    def contains(self, x: float, y: float) -> bool:
        dx = x - self.vertex[0]
        dy = y - self.vertex[1]
        return dy >= 0 and abs(dx) <= dy * self.half_tan

    def to_json(self) -> dict:
        return {"theta": self.theta, "vertex": list(self.vertex)}


def cone_contains(c: ConeParams, p: tuple[float, float]) -> bool:
    return c.contains(p[0], p[1])


@dataclass(frozen=True)
class Box:
    """Axis-aligned square [x0, x0+side) x [y0, y0+side).

    Coordinates are plain Python numbers (ints, Fractions or floats).  A
    ``closed`` box includes its upper edges; mass-dimension boxes use it.
    A symbolic box has a LogScalar side and only covers whole levels.
    """

    x0: Number
    y0: Number
    side: Number | LogScalar
    closed: bool = False

    def __post_init__(self) -> None:
        if isinstance(self.side, LogScalar):
            if self.side.is_zero:
                raise InvalidParameter("box side must be positive")
        elif not self.side > 0:
            raise InvalidParameter("box side must be positive")

    @property
    def symbolic(self) -> bool:
        return isinstance(self.side, LogScalar)

    def int_range_x(self) -> tuple[int, int]:
        """Half-open integer range [a, b) of lattice columns inside the box."""
        return _int_range(self.x0, self.x0 + self.side, self.closed)

    def int_range_y(self) -> tuple[int, int]:
        return _int_range(self.y0, self.y0 + self.side, self.closed)

    def mask(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        x1 = self.x0 + self.side
        y1 = self.y0 + self.side
        if self.closed:
            return (xs >= self.x0) & (xs <= x1) & (ys >= self.y0) & (ys <= y1)
        return (xs >= self.x0) & (xs < x1) & (ys >= self.y0) & (ys < y1)

    @classmethod
    def centered(cls, l: Number) -> Box:
        """The closed box [-l, l]^2."""
        return cls(-l, -l, 2 * l, closed=True)

    def to_json(self) -> dict:
        side = self.side.to_json() if self.symbolic else _num_json(self.side)
        return {"x0": _num_json(self.x0), "y0": _num_json(self.y0), "side": side, "closed": self.closed}


def _num_json(x: Number):
    if isinstance(x, Fraction):
        return str(x)
    return x


def _ceil(x: Number) -> int:
    if isinstance(x, int):
        return x
    return math.ceil(Fraction(x))


def _floor(x: Number) -> int:
    if isinstance(x, int):
        return x
    return math.floor(Fraction(x))


def _int_range(a: Number, b: Number, closed: bool) -> tuple[int, int]:
    lo = _ceil(a)
    hi = _floor(b) + 1 if closed else _ceil(b)
    return lo, max(lo, hi)
