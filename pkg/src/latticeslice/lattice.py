"""Exact lattice-row arithmetic: floor sums and cone-clipped row counts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


def floor_sum(n: int, m: int, a: int, b: int) -> int:
    """Sum of floor((a*i + b) / m) for i in range(n), m > 0, any sign of a, b."""
    if n <= 0:
        return 0
    ans = 0
    if a < 0 or a >= m:
        ans += (n * (n - 1) // 2) * (a // m)
        a %= m
    if b < 0 or b >= m:
        ans += n * (b // m)
        b %= m
    while True:
        if a >= m:
            ans += (n * (n - 1) // 2) * (a // m)
            a %= m
        if b >= m:
            ans += n * (b // m)
            b %= m
        y_max = a * n + b
        if y_max < m:
            return ans
        n, b = divmod(y_max, m)
        m, a = a, m


def sum_floor_linear(y0: int, y1: int, alpha: Fraction, beta: Fraction) -> int:
    """Sum of floor(alpha*y + beta) for integer y in [y0, y1)."""
    if y1 <= y0:
        return 0
    d = alpha.denominator * beta.denominator
    a = alpha.numerator * beta.denominator
    b = beta.numerator * alpha.denominator
    return floor_sum(y1 - y0, d, a, a * y0 + b)


@dataclass(frozen=True)
class Clip:
    """Row half-widths f(y) = floor(y*t + pad) of a (possibly widened) upward cone.

    ``t`` and ``pad`` are exact rationals, so f is exact at any height.
    A lattice point (x, y) is inside iff -f(y) <= x <= f(y).
    """

    t: Fraction
    pad: Fraction = Fraction(0)

    @classmethod
    def from_floats(cls, tan_half: float, pad: float = 0.0) -> Clip:
        return cls(Fraction(tan_half), Fraction(pad))

    @property
    def _amb(self) -> tuple[int, int, int]:
        # f(y) = (y*A + B) // M
        A = self.t.numerator * self.pad.denominator
        B = self.pad.numerator * self.t.denominator
        M = self.t.denominator * self.pad.denominator
        return A, B, M

    def f(self, y: int) -> int:
        A, B, M = self._amb
        return (y * A + B) // M

    def f_array(self, ys: np.ndarray) -> np.ndarray:
        """Vectorized f for moderate y; float first, exact fix near integers."""
        ys = np.asarray(ys, dtype=np.int64)
        t = float(self.t)
        p = float(self.pad)
        raw = ys.astype(float) * t + p
        out = np.floor(raw).astype(np.int64)
        frac = raw - np.floor(raw)
        tol = 1e-12 * (np.abs(raw) + 1.0)
        amb = np.flatnonzero((frac <= tol) | (frac >= 1 - tol))
        for i in amb:
            out[i] = self.f(int(ys[i]))
        return out

    def first_y_with_f_at_least(self, target: int) -> int:
        """Smallest integer y with f(y) >= target (f nondecreasing, t > 0)."""
        A, B, M = self._amb
        # y*A + B >= target*M
        return -((B - target * M) // A)

    def sum_f(self, y0: int, y1: int) -> int:
        A, B, M = self._amb
        if y1 <= y0:
            return 0
        return floor_sum(y1 - y0, M, A, A * y0 + B)

    def row_count(self, y: int, x0: int, x1: int) -> int:
        """Lattice points in row y with x0 <= x < x1 inside the clip."""
        fy = self.f(y)
        return max(0, min(x1 - 1, fy) - max(x0, -fy) + 1)

    def rows_count(self, y0: int, y1: int, x0: int, x1: int) -> int:
        """Sum of row_count over y in [y0, y1), in O(log) big-int steps."""
        if y1 <= y0 or x1 <= x0:
            return 0
        X1 = x1 - 1

        def g(y: int) -> int:
            fy = self.f(y)
            return min(X1, fy) - max(x0, -fy) + 1

        if g(y1 - 1) <= 0:
            return 0
        # g is nondecreasing; find the first row where it is positive
        if g(y0) > 0:
            ys = y0
        else:
            lo, hi = y0, y1 - 1
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if g(mid) > 0:
                    hi = mid
                else:
                    lo = mid
            ys = hi
        # breakpoints: min switches to X1 at ya, max switches to x0 at yb
        ya = min(max(self.first_y_with_f_at_least(X1), ys), y1)
        yb = min(max(self.first_y_with_f_at_least(-x0), ys), y1)
        cuts = sorted({ys, ya, yb, y1})
        total = 0
        for a, b in zip(cuts, cuts[1:]):
            if b <= a:
                continue
            capped_hi = a >= ya  # min(X1, f) == X1 on [a, b)
            capped_lo = a >= yb  # max(x0, -f) == x0 on [a, b)
            length = b - a
            if capped_hi and capped_lo:
                total += (X1 - x0 + 1) * length
            elif capped_hi:
                total += (X1 + 1) * length + self.sum_f(a, b)
            elif capped_lo:
                total += (1 - x0) * length + self.sum_f(a, b)
            else:
                total += length + 2 * self.sum_f(a, b)
        return total


def tube_row_bounds(tube, y: int) -> tuple[int, int] | None:
    """Exact half-open integer x-range [a, b) of a tube in row y (None if empty)."""
    from .geometry import VerticalTube

    if isinstance(tube, VerticalTube):
        a = math.ceil(Fraction(tube.x0))
        return a, a + 1
    u, lo, hi = tube._exact()
    q = -1 / u  # slope of the edges; condition lo < q*x + ... handled below
    # lo + q*x < y <= hi + q*x
    if q > 0:
        a = math.ceil((y - hi) / q)
        b = math.ceil((y - lo) / q)
    else:
        a = math.floor((y - lo) / q) + 1
        b = math.floor((y - hi) / q) + 1
    return (a, b) if b > a else None


def tube_rows_count(tube, y0: int, y1: int) -> int:
    """Lattice points of an (unclipped) tube over rows [y0, y1), exactly."""
    from .geometry import VerticalTube

    if y1 <= y0:
        return 0
    if isinstance(tube, VerticalTube):
        return y1 - y0
    u, lo, hi = tube._exact()
    q = -1 / u
    inv = 1 / q
    if q > 0:
        # ceil((y-lo)/q) - ceil((y-hi)/q) with ceil(z) = -floor(-z)
        s_b = -sum_floor_linear(y0, y1, -inv, lo * inv)
        s_a = -sum_floor_linear(y0, y1, -inv, hi * inv)
        return s_b - s_a
    s_b = sum_floor_linear(y0, y1, inv, -hi * inv)
    s_a = sum_floor_linear(y0, y1, inv, -lo * inv)
    return s_b - s_a
