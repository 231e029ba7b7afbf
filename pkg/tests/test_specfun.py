import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glrmf.errors import DomainNonPositive, DomainZero, Overflow
from glrmf.specfun import EULER_GAMMA, e1, ei, expi, expi_scaled

mpmath.mp.dps = 40


def series_oracle(x):
    """gamma + ln|x| + sum x^k / (k k!) in 40-digit arithmetic."""
    x = mpmath.mpf(x)
    s, term, k = mpmath.mpf(0), mpmath.mpf(1), 0
    while True:
        k += 1
        term *= x / k
        add = term / k
        s += add
        if abs(add) < mpmath.mpf(10) ** -45 * max(1, abs(s)):
            break
    return mpmath.euler + mpmath.log(abs(x)) + s


def cf_oracle_e1(t):
    """E1(t) by a long continued fraction in 40-digit arithmetic (t > 0)."""
    t = mpmath.mpf(t)
    # backward evaluation of e^{-t} / (t + 1/(1 + 1/(t + 2/(1 + 2/(t + ...)))))
    frac = mpmath.mpf(0)
    for k in range(4000, 0, -1):
        frac = k / (1 + k / (t + frac))
    return mpmath.exp(-t) / (t + frac)


def test_known_values():
    assert ei(1.0).value == pytest.approx(1.895117816355937, rel=1e-14)
    assert ei(-1.0).value == pytest.approx(-0.219383934395520, rel=1e-14)
    assert e1(1.0).value == pytest.approx(0.219383934395520, rel=1e-14)


def test_series_oracle_small_and_moderate():
    for x in (1e-6, 0.01, 0.3725, 1.0, 3.0, 6.0, 20.0, -0.5, -2.0, -6.0):
        ref = float(series_oracle(x))
        assert ei(x).value == pytest.approx(ref, rel=1e-12, abs=0)


def test_cf_oracle_large_negative():
    for t in (3.0, 10.0, 50.0, 200.0, 600.0):
        ref = float(cf_oracle_e1(t))
        assert e1(t).value == pytest.approx(ref, rel=1e-12)


def test_log_singularity_limit():
    for x in (1e-8, -1e-8):
        assert abs(ei(x).value - math.log(abs(x)) - EULER_GAMMA) < 1e-7


def test_large_argument_asymptote():
    x = 500.0
    v = e1(x).value * x * math.exp(x)
    assert abs(v - 1 / (1 + 1 / x)) < 1e-2


def test_reflection_exact():
    assert ei(-2.0).value == -e1(2.0).value


def test_root_neighbourhood():
    x0 = 0.37250741078136663
    assert abs(ei(x0).value) < 1e-15
    for x in (x0 - 1e-9, x0 + 1e-9, x0 + 1e-4):
        ref = float(mpmath.ei(x))
        assert abs(ei(x).value - ref) <= 1e-12 * max(1e-3, abs(ref)) + 1e-24


def test_errors():
    with pytest.raises(DomainZero):
        ei(0.0)
    with pytest.raises(Overflow):
        ei(701.0)
    with pytest.raises(Overflow):
        ei(-701.0)
    with pytest.raises(DomainNonPositive):
        e1(0.0)
    with pytest.raises(DomainNonPositive):
        e1(-1.0)


def test_error_estimate_bounds_true_error():
    grid = np.concatenate([-np.geomspace(1e-6, 600, 100), np.geomspace(1e-6, 600, 100)])
    for x in grid:
        res = ei(float(x))
        ref = float(mpmath.ei(float(x)))
        assert abs(res.value - ref) <= res.est_abs_error + 1e-300
        assert res.est_abs_error <= 1e-12 * max(1.0, abs(res.value))


def test_vectorized_matches_scalar():
    xs = np.array([-30.0, -1.5, 0.2, 2.0, 45.0])
    np.testing.assert_array_equal(expi(xs), [ei(float(x)).value for x in xs])
    np.testing.assert_allclose(expi_scaled(xs), expi(xs) * np.exp(-xs), rtol=1e-14)
    # scaled variant stays finite beyond the overflow guard
    assert np.isfinite(expi_scaled(1e4))


@pytest.mark.parametrize("x", [-5.0, -1.0, 0.5, 1.0, 5.0])
def test_derivative(x):
    h = 1e-5
    d = (ei(x + h).value - ei(x - h).value) / (2 * h)
    assert d == pytest.approx(math.exp(x) / x, rel=1e-6)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 600), st.floats(1e-6, 600))
def test_monotone_on_each_half_line(x, y):
    # Ei' = e^x / x: increasing for x > 0, decreasing for x < 0
    if x == y:
        return
    lo, hi = min(x, y), max(x, y)
    assert ei(lo).value < ei(hi).value
    assert ei(-hi).value > ei(-lo).value


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 600))
def test_reflection_identity(x):
    assert abs(ei(-x).value + e1(x).value) <= 1e-13 * abs(e1(x).value)
