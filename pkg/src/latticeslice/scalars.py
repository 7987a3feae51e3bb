"""Nonnegative magnitudes from small exact integers up to short exponential towers.

A :class:`LogScalar` is either an exact integer (depth 0) or the number
``exp(exp(...exp(r)))`` with ``depth`` exponentiations applied to the float
``r``.  Arithmetic on deep values keeps only the dominant term; the absolute
error this introduces in ``r`` is tracked in ``err`` and surfaces in
:class:`LogRatio.error_bound`.

Internally most work happens on the natural log of a value, written as a
pair ``(k, s)`` meaning ``ln(value) = exp^k(s)``.  A pair is normal when
``k == 0`` or ``exp(s)`` overflows a double, which makes lexicographic
comparison of pairs agree with numeric order.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import CapacityExceeded, DomainError

EXACT_BITS = 4096
MAX_DEPTH = 4
LOG_FLOAT_MAX = math.log(sys.float_info.max)

_EPS = sys.float_info.epsilon
_INF = math.inf


def _safe_exp(x: float) -> float:
    return _INF if x > LOG_FLOAT_MAX else math.exp(x)


def _half_ulp(x: float) -> float:
    return 0.5 * math.ulp(x) if math.isfinite(x) else 0.0


@dataclass(frozen=True)
class LogScalar:
    """A nonnegative number, exact when small and a log tower when huge."""

    depth: int
    r: float
    exact: int | None = None
    err: float = field(default=0.0, compare=False)

    @property
    def is_zero(self) -> bool:
        return self.depth == 0 and self.exact == 0

    @property
    def is_exact(self) -> bool:
        return self.depth == 0

    def __lt__(self, other: LogScalar) -> bool:
        return _compare(self, other) < 0

    def __le__(self, other: LogScalar) -> bool:
        return _compare(self, other) <= 0

    def __gt__(self, other: LogScalar) -> bool:
        return _compare(self, other) > 0

    def __ge__(self, other: LogScalar) -> bool:
        return _compare(self, other) >= 0

    def __int__(self) -> int:
        if self.exact is None:
            raise DomainError("value is not held exactly")
        return self.exact

    def to_float(self) -> float:
        """Nearest double, or ``inf`` past the float range."""
        if self.depth == 0:
            try:
                return float(self.exact)
            except OverflowError:
                return _INF
        if self.depth == 1:
            return _safe_exp(self.r)
        return _INF

    def ln(self) -> float:
        """Natural log as a double (``inf`` once it no longer fits)."""
        if self.is_zero:
            return -_INF
        if self.depth <= 1:
            return self.r
        return _INF

    def log_value(self) -> LogScalar:
        """ln(value) as a LogScalar (value must be >= 1)."""
        if self.depth >= 2:
            return _canon(self.depth - 1, self.r, self.err)
        if self.r < 0 or self.is_zero:
            raise DomainError("log of a value below 1")
        return from_real(self.r, err=self.err if self.depth else _half_ulp(self.r))

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "r": None if self.is_zero else self.r,
            "exact": None if self.exact is None else str(self.exact),
        }

    @classmethod
    def from_json(cls, obj: dict) -> LogScalar:
        if obj.get("exact") is not None:
            return ls_make(int(obj["exact"]))
        return _canon(int(obj["depth"]), float(obj["r"]), 0.0)

    def __repr__(self) -> str:
        return f"LogScalar({format_scalar(self)})"


ZERO = LogScalar(0, -_INF, 0)
ONE = LogScalar(0, 0.0, 1)


def format_scalar(x: LogScalar, digits: int = 12) -> str:
    """Compact text form: a decimal integer, or ``exp^d(r)``."""
    if x.exact is not None:
        return str(x.exact)
    return f"exp^{x.depth}({x.r:.{digits}g})"


def parse_scalar(text: str) -> LogScalar:
    text = text.strip()
    if text.startswith("exp^"):
        head, _, rest = text[4:].partition("(")
        return _canon(int(head), float(rest.rstrip(")")), 0.0)
    return ls_make(int(text))


def ls_make(n: int) -> LogScalar:
    """Exact nonnegative integer; promoted to depth 1 past EXACT_BITS bits."""
    if isinstance(n, bool) or not isinstance(n, int):
        n = int(n)
    if n < 0:
        raise DomainError("negative values are not representable")
    if n == 0:
        return ZERO
    r = math.log(n)
    if n.bit_length() > EXACT_BITS:
        return LogScalar(1, r, None, _half_ulp(r))
    return LogScalar(0, r, n)


def from_real(x: float, err: float = 0.0) -> LogScalar:
    """Non-integer magnitude held as (depth 1, ln x).

    ``err`` is an absolute error on ``x`` itself.
    """
    if x < 0 or math.isnan(x):
        raise DomainError("negative values are not representable")
    if x == 0:
        return ZERO
    if math.isinf(x):
        raise DomainError("infinite value")
    r = math.log(x)
    rel = err / x if err else 0.0
    return LogScalar(1, r, None, (math.log1p(rel) if rel else 0.0) + _half_ulp(r))


def _canon(depth: int, r: float, err: float) -> LogScalar:
    while depth >= 2 and r <= LOG_FLOAT_MAX:
        e = math.exp(r)
        err = (e * math.expm1(err) if err else 0.0) + _half_ulp(e)
        r = e
        depth -= 1
    if depth > MAX_DEPTH:
        raise CapacityExceeded(f"depth {depth} exceeds cap {MAX_DEPTH}")
    if depth == 0:
        raise DomainError("depth 0 values must be exact")
    return LogScalar(depth, r, None, err)


# ---- tower helpers: (k, s) means ln(value) = exp^k(s) ----

def _level(x: LogScalar) -> tuple[int, float, float]:
    if x.depth == 0:
        return 0, x.r, _half_ulp(x.r)
    return x.depth - 1, x.r, x.err


def _from_level(k: int, s: float, err: float) -> LogScalar:
    return _canon(k + 1, s, err)


def _tnorm(k: int, s: float) -> tuple[int, float]:
    while k >= 1 and s <= LOG_FLOAT_MAX:
        s = math.exp(s)
        k -= 1
    return k, s


def _tcmp(a: tuple[int, float], b: tuple[int, float]) -> int:
    if a[0] == 0 and b[0] == 0:
        return (a[1] > b[1]) - (a[1] < b[1])
    if a[0] != b[0]:
        return 1 if a[0] > b[0] else -1
    return (a[1] > b[1]) - (a[1] < b[1])


def _tsub(a: tuple[int, float], b: tuple[int, float]) -> float:
    """a - b as a float (may be +-inf)."""
    if a[0] == 0 and b[0] == 0:
        return a[1] - b[1]
    if a[0] != b[0]:
        return _INF if a[0] > b[0] else -_INF
    if a[1] == b[1]:
        return 0.0
    if a[0] == 1:
        hi, lo = max(a[1], b[1]), min(a[1], b[1])
        mag = _safe_exp(hi + math.log(-math.expm1(lo - hi)))
        return mag if a[1] > b[1] else -mag
    return _INF if a[1] > b[1] else -_INF


def _tln(a: tuple[int, float]) -> tuple[int, float]:
    if a[0] >= 1:
        return a[0] - 1, a[1]
    if a[1] <= 0:
        raise DomainError("log of a non-positive tower")
    return 0, math.log(a[1])


def _tdiv(a: tuple[int, float], b: tuple[int, float]) -> float:
    """a / b for positive towers, as a float."""
    if a[0] == 0 and b[0] == 0:
        return a[1] / b[1]
    return _safe_exp(_tsub(_tln(a), _tln(b)))


def _tadd(a: tuple[int, float], b: tuple[int, float]) -> tuple[int, float, float]:
    """Sum of two towers; returns (k, s, absolute error on s)."""
    if a[0] == 0 and b[0] == 0:
        s = a[1] + b[1]
        if math.isfinite(s):
            return 0, s, abs(math.fsum([a[1], b[1], -s]))
        big, small = (a[1], b[1]) if a[1] >= b[1] else (b[1], a[1])
        s1 = math.log(big) + math.log1p(small / big)
        return 1, s1, 4 * math.ulp(s1)
    big, small = (a, b) if _tcmp(a, b) >= 0 else (b, a)
    if small[0] == 0:
        if small[1] == 0:
            q = 0.0
        else:
            q = math.copysign(_safe_exp(_tsub((0, math.log(abs(small[1]))), _tln(big))), small[1])
    else:
        q = _tdiv(small, big)
    k, s = big
    if k == 1:
        d = math.log1p(q)
        s_new = s + d
        return 1, s_new, abs(math.fsum([s, d, -s_new])) + 4 * math.ulp(d)
    return k, s, 0.0


def _compare(a: LogScalar, b: LogScalar) -> int:
    if a.exact is not None and b.exact is not None:
        return (a.exact > b.exact) - (a.exact < b.exact)
    if a.is_zero or b.is_zero:
        return (not a.is_zero) - (not b.is_zero)
    ka, sa, _ = _level(a)
    kb, sb, _ = _level(b)
    return _tcmp((ka, sa), (kb, sb))


# ---- public operations ----

def ls_exp(x: LogScalar) -> LogScalar:
    """e to the power x."""
    if x.is_zero:
        return ONE
    if x.depth == 0:
        n = x.exact
        if n.bit_length() <= 1023:
            r = float(n)
            if math.isfinite(r):
                return _canon(1, r, float(abs(n - int(r))))
        return _canon(2, x.r, _half_ulp(x.r))
    return _canon(x.depth + 1, x.r, x.err)


def ls_add(x: LogScalar, y: LogScalar) -> LogScalar:
    if x.is_zero:
        return y
    if y.is_zero:
        return x
    if x.exact is not None and y.exact is not None:
        return ls_make(x.exact + y.exact)
    kx, sx, ex = _level(x)
    ky, sy, ey = _level(y)
    if _tcmp((kx, sx), (ky, sy)) < 0:
        kx, sx, ex, ky, sy, ey = ky, sy, ey, kx, sx, ex
    diff = _tsub((ky, sy), (kx, sx))
    corr = math.log1p(_safe_exp(diff)) if diff > -_INF else 0.0
    k, s, e = _tadd((kx, sx), (0, corr))
    # the weaker operand's error enters scaled by its share (< 1)
    return _from_level(k, s, e + ex + ey + 4 * math.ulp(corr))


def ls_mul(x: LogScalar, y: LogScalar) -> LogScalar:
    if x.is_zero or y.is_zero:
        return ZERO
    if x.exact is not None and y.exact is not None:
        return ls_make(x.exact * y.exact)
    kx, sx, ex = _level(x)
    ky, sy, ey = _level(y)
    k, s, e = _tadd((kx, sx), (ky, sy))
    return _from_level(k, s, e + ex + ey)


def ls_scale(x: LogScalar, c: float) -> LogScalar:
    """x times a positive real factor (the result is never exact)."""
    if c <= 0 or not math.isfinite(c):
        raise DomainError("scale factor must be positive and finite")
    if x.is_zero:
        return ZERO
    kx, sx, ex = _level(x)
    lc = math.log(c)
    k, s, e = _tadd((kx, sx), (0, lc))
    return _from_level(k, s, e + ex + _half_ulp(lc))


def ls_max(x: LogScalar, y: LogScalar) -> LogScalar:
    return x if x >= y else y


def value_ratio(x: LogScalar, y: LogScalar) -> float:
    """x / y as a double (0, finite, or inf)."""
    if y.is_zero:
        raise DomainError("division by zero")
    if x.is_zero:
        return 0.0
    if x.exact is not None and y.exact is not None:
        return float(Fraction(x.exact, y.exact))
    kx, sx, _ = _level(x)
    ky, sy, _ = _level(y)
    return _safe_exp(_tsub((kx, sx), (ky, sy)))


@dataclass(frozen=True)
class LogRatio:
    value: float
    error_bound: float = 0.0

    def __float__(self) -> float:
        return self.value

    @property
    def lo(self) -> float:
        return self.value - self.error_bound

    @property
    def hi(self) -> float:
        return self.value + self.error_bound


def _rel_log_err(k: int, s: float, e: float) -> float:
    """Relative error of ln(value) induced by an absolute error e on s."""
    if e == 0:
        return 0.0
    if k == 0:
        return e / abs(s) if s else _INF
    if k == 1:
        return math.expm1(e)
    return math.expm1(min(e * _safe_exp(s), LOG_FLOAT_MAX))


def log_ratio(num: LogScalar, den: LogScalar, empty_slice_convention: bool = True) -> LogRatio:
    """ln(num) / ln(den).

    A zero numerator gives ratio 0 under the empty-slice convention and a
    DomainError otherwise.
    """
    if den.is_zero or den <= ONE:
        raise DomainError("denominator must exceed 1")
    if num.is_zero:
        if empty_slice_convention:
            return LogRatio(0.0, 0.0)
        raise DomainError("log of an empty count")
    if num < ONE:
        raise DomainError("numerator must be at least 1")
    ka, sa, ea = _level(num)
    kb, sb, eb = _level(den)
    if ka == 0 and sa == 0.0:
        return LogRatio(0.0, 0.0)
    value = _tdiv((ka, sa), (kb, sb))
    if not math.isfinite(value):
        raise CapacityExceeded("log ratio overflows the float range")
    rel = _rel_log_err(ka, sa, ea) + _rel_log_err(kb, sb, eb)
    return LogRatio(value, value * (rel + 4 * _EPS))
