"""Exponential integrals Ei and E1 in double precision.

Region split (real arguments only):

* ``x < 0``: ``Ei(x) = -E1(-x)``; E1 by its power series for ``-x <= 2`` and by
  a modified-Lentz continued fraction beyond.
* ``0 < x <= 40``: Maclaurin series ``gamma + ln x + sum x^k / (k k!)``, except
  on ``[0.2, 0.7]`` where a series centred on the positive root of Ei is used so
  the relative error stays bounded across the zero crossing.
* ``x > 40``: asymptotic series ``e^x / x * sum k! / x^k``.

Every evaluator also returns an absolute error estimate. The ``*_scaled``
variants return ``exp(-x) * Ei(x)`` and never overflow, which is what the rate
formulas need when ``|w / a|`` is large.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainNonPositive, DomainZero, Overflow

EULER_GAMMA = 0.57721566490153286061
# positive zero of Ei as a double-double
EI_ROOT_HI = 0.3725074107813666
EI_ROOT_LO = 1.3140183414386028e-17

OVERFLOW_GUARD = 700.0
_EPS = np.finfo(float).eps
_SERIES_MAX = 40.0
_NEG_SERIES_MAX = 2.0
_ROOT_LO, _ROOT_HI = 0.2, 0.7


@dataclass(frozen=True)
class EiResult:
    value: float
    est_abs_error: float


def _series_pos(x):
    """Maclaurin series for 0 < x <= 40, returns (value, abs error)."""
    term = np.ones_like(x)
    total = np.zeros_like(x)
    k = 0
    active = np.ones(x.shape, dtype=bool)
    while active.any():
        k += 1
        term = term * x / k
        contrib = term / k
        total = total + contrib
        active = contrib > _EPS * 0.1 * total
        if k > 400:
            break
    logx = np.log(x)
    value = EULER_GAMMA + logx + total
    err = 4 * _EPS * (EULER_GAMMA + np.abs(logx) + total + np.abs(value))
    return value, err


def _series_root(x):
    """Series about the root x0 of Ei, exact cancellation of Ei(x0) = 0.

    Ei(x) = ln(x / x0) + sum_k (x^k - x0^k) / (k k!), and x^k - x0^k is
    carried as d * P_k with d = x - x0 and P_{k+1} = x P_k + x0^k.
    """
    d = (x - EI_ROOT_HI) - EI_ROOT_LO
    p = np.ones_like(x)
    x0k = EI_ROOT_HI
    fact = 1.0
    total = np.zeros_like(x)
    for k in range(1, 40):
        fact *= k
        total = total + p / (k * fact)
        p = x * p + x0k
        x0k *= EI_ROOT_HI
    value = np.log1p(d / EI_ROOT_HI) + d * total
    err = 4 * _EPS * np.abs(value)
    return value, err


def _asymptotic_scaled(x):
    """exp(-x) Ei(x) for x > 40 via the divergent asymptotic series."""
    term = 1.0 / x
    total = term.copy()
    last = term.copy()
    active = np.ones(x.shape, dtype=bool)
    k = 0
    while active.any() and k < 200:
        k += 1
        new = term * k / x
        active = active & (new < term) & (new > _EPS * 0.1 * total)
        total = np.where(active, total + new, total)
        last = np.where(active, new, last)
        term = new
    err = last + 4 * _EPS * total
    return total, err


def _e1_series(t):
    """E1(t) for 0 < t <= 2."""
    term = -np.ones_like(t)
    total = np.zeros_like(t)
    mag = np.zeros_like(t)
    for k in range(1, 50):
        term = -term * t / k
        total = total + term / k
        mag = mag + np.abs(term) / k
    logt = np.log(t)
    value = -EULER_GAMMA - logt + total
    err = 4 * _EPS * (EULER_GAMMA + np.abs(logt) + mag + np.abs(value))
    return value, err


def _e1_cf_scaled(t):
    """exp(t) E1(t) for t > 2 by the modified Lentz algorithm."""
    tiny = 1e-300
    b = t + 1.0
    c = np.full_like(t, 1.0 / tiny)
    d = 1.0 / b
    h = d.copy()
    n_iter = 0
    for i in range(1, 1000):
        n_iter = i
        an = -float(i * i)
        b = b + 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h = h * delta
        if np.all(np.abs(delta - 1.0) < _EPS):
            break
    # rounding grows roughly linearly with the number of convergents
    err = (8 + n_iter) * _EPS * np.abs(h)
    return h, err


def _ei_scaled_core(x):
    """exp(-x) Ei(x) with abs error estimate, for nonzero finite arrays."""
    value = np.empty_like(x)
    err = np.empty_like(x)

    neg_small = (x < 0) & (x >= -_NEG_SERIES_MAX)
    if neg_small.any():
        t = -x[neg_small]
        v, e = _e1_series(t)
        scale = np.exp(t)
        value[neg_small] = -v * scale
        err[neg_small] = e * scale

    neg_big = x < -_NEG_SERIES_MAX
    if neg_big.any():
        v, e = _e1_cf_scaled(-x[neg_big])
        value[neg_big] = -v
        err[neg_big] = e

    root = (x >= _ROOT_LO) & (x <= _ROOT_HI)
    pos_series = (x > 0) & (x <= _SERIES_MAX) & ~root
    for mask, fn in ((root, _series_root), (pos_series, _series_pos)):
        if mask.any():
            v, e = fn(x[mask])
            scale = np.exp(-x[mask])
            value[mask] = v * scale
            err[mask] = e * scale

    big = x > _SERIES_MAX
    if big.any():
        v, e = _asymptotic_scaled(x[big])
        value[big] = v
        err[big] = e
    return value, err


def _as_checked_array(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr == 0):
        raise DomainZero("Ei has a logarithmic singularity at x = 0")
    return arr


def expi_scaled(x, *, with_error=False):
    """Return ``exp(-x) * Ei(x)`` elementwise; no overflow guard needed."""
    arr = _as_checked_array(x)
    flat = np.atleast_1d(arr).ravel()
    v, e = _ei_scaled_core(flat)
    v, e = v.reshape(arr.shape), e.reshape(arr.shape)
    if arr.ndim == 0:
        v, e = float(v), float(e)
    return (v, e) if with_error else v


def expi(x, *, with_error=False):
    """Vectorized principal-value Ei(x).

    Raises:
        DomainZero: any element equals zero.
        Overflow: any element has ``|x| > 700``.
    """
    arr = _as_checked_array(x)
    if np.any(np.abs(arr) > OVERFLOW_GUARD):
        raise Overflow(f"|x| > {OVERFLOW_GUARD:g} is outside the supported domain")
    v, e = expi_scaled(arr, with_error=True)
    scale = np.exp(arr)
    v, e = v * scale, e * scale
    if arr.ndim == 0:
        v, e = float(v), float(e)
    return (v, e) if with_error else v


def ei(x: float) -> EiResult:
    """Exponential integral Ei at a nonzero real ``x`` with ``|x| <= 700``."""
    v, e = expi(float(x), with_error=True)
    return EiResult(v, e)


def e1(x: float) -> EiResult:
    """E1(x) = integral of exp(-t)/t over (x, inf), for ``x > 0``."""
    x = float(x)
    if not x > 0:
        raise DomainNonPositive(f"E1 requires x > 0, got {x!r}")
    v, e = expi_scaled(-x, with_error=True)
    scale = np.exp(-x)
    return EiResult(float(-v * scale), float(e * scale))
