import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latticeslice.errors import CapacityExceeded, DomainError
from latticeslice.scalars import (
    EXACT_BITS,
    LOG_FLOAT_MAX,
    ONE,
    ZERO,
    LogScalar,
    _canon,
    format_scalar,
    from_real,
    log_ratio,
    ls_add,
    ls_exp,
    ls_make,
    ls_mul,
    ls_scale,
    parse_scalar,
)

# frozen from mpmath at 50 digits
LN_2_POW_200 = 138.62943611198906
LN40401_OVER_LN200 = 2.0018826888485499


def deep(depth, r):
    return _canon(depth, r, 0.0)


def test_make_zero_and_small():
    assert ls_make(0) == ZERO and ZERO.is_zero
    x = ls_make(12)
    assert x.depth == 0 and x.exact == 12
    assert x.r == pytest.approx(math.log(12), abs=1e-15)


def test_make_big_integer():
    x = ls_make(2**200)
    assert x.depth == 0 and x.exact == 2**200
    assert x.r == pytest.approx(LN_2_POW_200, rel=1e-14)


def test_make_rejects_negative():
    with pytest.raises(DomainError):
        ls_make(-1)


def test_exact_field_dropped_past_threshold():
    x = ls_make(1 << (EXACT_BITS + 5))
    assert x.exact is None
    assert x.r == pytest.approx((EXACT_BITS + 5) * math.log(2), rel=1e-14)


def test_exp_of_zero_is_one():
    y = ls_exp(ZERO)
    assert y.exact == 1


def test_exp_of_162():
    y = ls_exp(ls_make(162))
    assert y.depth == 1 and y.r == 162.0 and y.exact is None


def test_exp_of_depth_one_canonicalizes():
    # e^162 is a double, so e^(e^162) is held as (depth 1, r = e^162)
    y = ls_exp(deep(1, 162.0))
    assert y.depth == 1
    assert y.r == pytest.approx(float(mpmath.e**162), rel=1e-14)


def test_exp_past_float_range_raises_depth():
    y = ls_exp(deep(1, 800.0))
    assert (y.depth, y.r) == (2, 800.0)


def test_add_exact():
    z = ls_add(ls_make(5), ls_make(7))
    assert z.exact == 12 and z.err == 0


def test_add_dominant_term():
    z = ls_add(deep(1, 100.0), ls_make(50))
    assert z.depth == 1
    assert z.r == pytest.approx(100.0, abs=1e-30)


def test_add_equal_terms():
    z = ls_add(deep(1, 10.0), deep(1, 10.0))
    # e^10 fits a double, so canonical form is exact-free depth 1
    assert z.ln() == pytest.approx(10 + math.log(2), abs=1e-12)


def test_add_commutes():
    a, b = deep(2, 5.0), deep(1, 1e4)
    assert ls_add(a, b) == ls_add(b, a)


def test_mul_exact():
    assert ls_mul(ls_make(6), ls_make(7)).exact == 42


def test_mul_log_additive():
    z = ls_mul(deep(1, 50.0), deep(1, 70.0))
    assert z.ln() == pytest.approx(120.0, abs=1e-12)


def test_mul_absorption_recorded():
    x = deep(1, 1e70)
    z = ls_mul(x, ls_make(4))
    assert z.depth >= 1 and z.ln() == 1e70
    # the dropped ln 4 is covered by the error bound
    assert z.err >= math.log(4) * 0.999


def test_mul_zero_absorbs():
    assert ls_mul(ZERO, deep(3, 5.0)).is_zero


def test_log_ratio_examples():
    assert log_ratio(deep(1, 30.0), deep(1, 20.0)).value == pytest.approx(1.5, abs=1e-12)
    assert log_ratio(ls_make(40401), ls_make(200)).value == pytest.approx(LN40401_OVER_LN200, abs=1e-12)
    assert log_ratio(ls_make(1), ls_make(10)).value == 0.0


def test_log_ratio_domain():
    with pytest.raises(DomainError):
        log_ratio(ls_make(5), ONE)
    with pytest.raises(DomainError):
        log_ratio(ZERO, ls_make(10), empty_slice_convention=False)
    assert log_ratio(ZERO, ls_make(10)).value == 0.0


def test_log_ratio_error_covers_absorption():
    x = ls_mul(deep(1, 1e70), ls_make(4))
    rat = log_ratio(x, deep(1, 1e70))
    assert rat.lo <= 1.0 <= rat.hi


def test_depth_cap():
    x = deep(4, 800.0)
    with pytest.raises(CapacityExceeded):
        ls_exp(x)


def test_scale_and_text_round_trip():
    x = ls_scale(deep(2, 7.5), 3.0)
    assert parse_scalar(format_scalar(x, 17)) == x
    assert parse_scalar("40401").exact == 40401
    assert LogScalar.from_json(ls_make(2**300).to_json()).exact == 2**300


def test_from_real():
    x = from_real(1e300)
    assert x.depth == 1 and x.ln() == pytest.approx(math.log(1e300), rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=2, max_value=10**6))
def test_square_round_trip(n):
    x = ls_make(n)
    assert abs(log_ratio(ls_mul(x, x), x).value - 2) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=0, max_value=2**EXACT_BITS - 1), st.integers(min_value=0, max_value=2**EXACT_BITS - 1))
def test_order_matches_integers(a, b):
    x, y = ls_make(a), ls_make(b)
    assert (x < y) == (a < b)
    assert (x <= y) == (a <= b)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=1.0, max_value=690.0),
    st.floats(min_value=1.0, max_value=690.0),
)
def test_add_within_error_bound(p, q):
    z = ls_add(deep(1, p), deep(1, q))
    with mpmath.workdps(60):
        true = mpmath.log(mpmath.e**p + mpmath.e**q)
    assert abs(z.ln() - float(true)) <= z.err + 1e-12 * float(true)


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.floats(min_value=-50.0, max_value=1e300))
def test_canonical_form(depth, r):
    x = deep(depth, r)
    # exp^(d-1)(r) must not fit a double
    assert x.depth == 1 or x.r > LOG_FLOAT_MAX
    assert _canon(x.depth, x.r, 0.0) == x
