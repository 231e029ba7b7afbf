"""Replica-mean-field stationary rates for strict-feedforward networks.

For neuron ``i`` with drift ``a``, effective reset ``rho`` and effective
incoming weights ``W_ji`` from rates ``beta_j`` (``j < i``)::

    1 / beta_i = int_{-inf}^0 exp(l(u) - sum_j beta_j h(u; W_ji, a)) du
    l(u)       = rho * (exp(a u) - 1) / a                      (rho * u at a = 0)
    h(u; w, a) = (1/a) exp(-w/a) (Ei(w/a e^{a u}) - Ei(w/a)) - u
               = (exp(w u) - 1) / w - u                        at a = 0

Linear interaction uses ``rho = r_i`` and ``W = w``; the r-norm interaction
uses ``rho = r_i**p`` and ``W = sign(w) |w|**p``. The integrand decays like
``exp(slope * u)`` where ``slope = sum_j (1 - exp(-W_ji / a)) beta_j`` for
``a > 0`` (``rho + sum_j beta_j`` at ``a = 0`` with no inhibitory input); a
nonpositive slope means the integral diverges and the rate is zero.

``h`` without the leading ``1/a`` is available through ``printed_h=True``;
it only agrees with the limit above when ``a = 1``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import DomainError, MissingPrefix, NonFeedforward, QuadratureFailure, ZeroWeight
from .network import Interaction, NetworkSpec, ValidatedSpec, validate_spec
from .quadrature import gauss_kronrod
from .specfun import EULER_GAMMA, expi_scaled

# |y| below which Ei(y) = gamma + ln|y| + y to double precision
_SMALL_EI_ARG = 1e-8
_MAX_TAIL_DOUBLINGS = 60


class AnalyticOffsetWarning(UserWarning):
    """The analytic rate ignores the intensity offset z > 0."""


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 2000
    tail_log_cut: float = 46.0

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 8:
            raise ValueError("max_subdivisions must be >= 8")
        if not self.tail_log_cut > 0:
            raise ValueError("tail_log_cut must be positive")


@dataclass(frozen=True)
class RateResult:
    beta: float
    u_min: float
    quad_error: float
    degenerate: bool
    condition: float


@dataclass
class RateSolution:
    beta: np.ndarray
    condition_value: np.ndarray
    u_min: np.ndarray
    quad_error: np.ndarray
    degenerate: np.ndarray
    warnings: list[str] = field(default_factory=list)

    _FIELDS = ("beta", "condition", "u_min", "quad_error", "degenerate")

    def rows(self):
        for i in range(len(self.beta)):
            yield (i + 1, float(self.beta[i]), float(self.condition_value[i]),
                   float(self.u_min[i]), float(self.quad_error[i]), bool(self.degenerate[i]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("neuron",) + self._FIELDS)
        for neuron, beta, cond, umin, qerr, deg in self.rows():
            writer.writerow((neuron, repr(beta), repr(cond), repr(umin), repr(qerr), int(deg)))
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "neurons": [dict(zip(("neuron",) + self._FIELDS, row)) for row in self.rows()],
            "warnings": list(self.warnings),
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RateSolution":
        doc = json.loads(text)
        rows = doc["neurons"]
        get = lambda key, dtype=float: np.array([r[key] for r in rows], dtype=dtype)
        return cls(get("beta"), get("condition"), get("u_min"), get("quad_error"),
                   get("degenerate", bool), list(doc.get("warnings", [])))


@dataclass(frozen=True)
class MgfPoint:
    u: float
    value: float


# --- effective parameters ----------------------------------------------------

def _validated(spec) -> ValidatedSpec:
    return spec if isinstance(spec, ValidatedSpec) else validate_spec(spec)


def effective_weight(w, p):
    """Odd extension ``sign(w) |w|**p``; identity at ``p = 1``."""
    return w if p == 1.0 else math.copysign(abs(w) ** p, w)


def _neuron(spec: ValidatedSpec, i: int):
    """(drift, rho, [(j, W_ji)]) for neuron i under the spec's interaction."""
    p = spec.params[i]
    if spec.interaction is Interaction.RNORM:
        ex = p.intensity_exponent_r
        rho = p.reset_r ** ex
        inputs = [(j, effective_weight(w, ex)) for j, w in spec.fan_in[i]]
    else:
        rho = p.reset_r
        inputs = list(spec.fan_in[i])
    return p.drift_a, rho, inputs


def _prefix_inputs(spec: ValidatedSpec, i: int, beta_prefix):
    a, rho, inputs = _neuron(spec, i)
    later = [j for j, _ in inputs if j >= i]
    if later:
        raise NonFeedforward(
            f"neuron {i + 1} receives input from neuron {later[0] + 1}; "
            "the analytic solver needs strict feedforward structure")
    need = max((j for j, _ in inputs), default=-1) + 1
    if len(beta_prefix) < need:
        raise MissingPrefix(f"neuron {i + 1} needs rates of neurons 1..{need}, got {len(beta_prefix)}")
    weights = np.array([w for _, w in inputs], dtype=float)
    betas = np.array([float(beta_prefix[j]) for j, _ in inputs], dtype=float)
    return a, rho, weights, betas


# --- l and h -----------------------------------------------------------------

def _l(u, rho, a):
    u = np.asarray(u, dtype=float)
    if a == 0.0:
        return rho * u
    return rho * np.expm1(a * u) / a


def little_l(u, i: int, spec) -> np.ndarray | float:
    """Reset contribution ``rho_i (e^{a_i u} - 1) / a_i`` (``rho_i u`` at zero drift)."""
    a, rho, _ = _neuron(_validated(spec), i)
    out = _l(u, rho, a)
    return float(out) if np.ndim(out) == 0 else out


def _h_zero_drift(u, w):
    return np.expm1(w * u) / w - u


def _h_drift(u, w, a):
    """(1/a) e^{-w/a} (Ei((w/a) e^{a u}) - Ei(w/a)) - u via scaled Ei."""
    c = w / a
    s = a * u
    y1 = c * np.exp(s)
    small = np.abs(y1) < _SMALL_EI_ARG
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        first = np.empty_like(s)
        if (~small).any():
            ys = y1[~small]
            first[~small] = np.exp(c * np.expm1(s[~small])) * expi_scaled(ys)
        if small.any():
            # e^{-c} Ei(y1) with ln|y1| = ln|c| + s kept exact
            ei_small = EULER_GAMMA + math.log(abs(c)) + s[small] + y1[small]
            first[small] = np.exp(-c) * ei_small
        return (first - expi_scaled(c)) / a - u


def little_h(u, w: float, a: float, *, printed: bool = False):
    """Interaction kernel ``h(u; w, a)`` for one incoming weight.

    With ``printed=True`` the leading ``1/a`` factor is dropped.

    Raises:
        ZeroWeight: ``w == 0`` (absent edges must be skipped by the caller).
    """
    if w == 0.0:
        raise ZeroWeight("h is only defined for nonzero weights")
    if a < 0:
        raise DomainError("drift must be nonnegative")
    arr = np.atleast_1d(np.asarray(u, dtype=float))
    if a == 0.0:
        out = _h_zero_drift(arr, w)
    else:
        out = _h_drift(arr, w, a)
        if printed:
            out = a * (out + arr) - arr
    return float(out[0]) if np.ndim(u) == 0 else out


# --- rate condition, integrand, solver ---------------------------------------

def _slope(a, rho, weights, betas):
    """Asymptotic decay rate of the log-integrand as u -> -inf."""
    if a > 0:
        return float(np.sum(-np.expm1(-weights / a) * betas))
    if np.any((weights < 0) & (betas > 0)):
        return -math.inf
    return float(rho + betas.sum())


def check_rate_condition(i: int, beta_prefix, spec) -> tuple[bool, float]:
    """Return ``(passes, value)`` for the integrability condition of neuron ``i``.

    For ``a_i > 0`` the value is ``sum_j (1 - exp(-W_ji / a_i)) beta_j``. At
    zero drift it is the decay slope ``rho_i + sum_j beta_j``, or ``-inf`` when
    an active inhibitory input makes the integral diverge.
    """
    a, rho, weights, betas = _prefix_inputs(_validated(spec), i, beta_prefix)
    value = _slope(a, rho, weights, betas)
    return value > 0, value


def _log_integrand(u, a, rho, weights, betas, printed):
    u = np.asarray(u, dtype=float)
    out = _l(u, rho, a)
    for w, b in zip(weights, betas):
        if b != 0.0:
            out = out - b * little_h(u, w, a, printed=printed)
    return out


def rate_integrand(u, i: int, beta_prefix, spec, *, printed_h: bool = False):
    """``exp(l_i(u) - sum_j beta_j h_ij(u))``; the log is formed first."""
    a, rho, weights, betas = _prefix_inputs(_validated(spec), i, beta_prefix)
    with np.errstate(over="ignore"):
        out = np.exp(_log_integrand(u, a, rho, weights, betas, printed_h))
    return float(out) if np.ndim(out) == 0 else out


def _offset_warning(spec: ValidatedSpec, i: int):
    z = spec.params[i].intensity_offset_z
    if z > 0:
        return (f"neuron {i + 1}: offset z = {z:g} > 0 is not represented in the "
                "analytic rate; treat the result as approximate")
    return None


def solve_rate(i: int, beta_prefix, spec, quad: QuadratureConfig | None = None, *,
               printed_h: bool = False) -> RateResult:
    """Stationary rate of neuron ``i`` given the rates of its presynaptic prefix.

    The integral is truncated at ``u_min`` where the exponential tail, bounded
    by ``f(u_min) / local slope``, is below tolerance; ``u_min`` starts at
    ``-tail_log_cut / slope`` and doubles until that holds.

    Raises:
        QuadratureFailure: subdivision budget exhausted above tolerance.
    """
    quad = quad or QuadratureConfig()
    spec = _validated(spec)
    a, rho, weights, betas = _prefix_inputs(spec, i, beta_prefix)
    msg = _offset_warning(spec, i)
    if msg:
        warnings.warn(msg, AnalyticOffsetWarning, stacklevel=2)
    slope = _slope(a, rho, weights, betas)
    if not slope > 0:
        return RateResult(0.0, -math.inf, 0.0, True, slope)

    def log_f(u):
        return _log_integrand(u, a, rho, weights, betas, printed_h)

    def f(u):
        with np.errstate(over="ignore"):
            return np.exp(log_f(u))

    u_min = -quad.tail_log_cut / slope
    for _ in range(_MAX_TAIL_DOUBLINGS):
        try:
            res = gauss_kronrod(f, u_min, 0.0, rel_tol=quad.rel_tol, abs_tol=quad.abs_tol,
                                max_subdivisions=quad.max_subdivisions)
        except QuadratureFailure as exc:
            if not np.all(np.isfinite(f(np.linspace(u_min, 0.0, 257)))):
                return RateResult(0.0, u_min, 0.0, True, slope)
            raise QuadratureFailure(f"neuron {i + 1}: {exc}") from exc
        step = 1e-6 * max(1.0, abs(u_min))
        lf = log_f(np.array([u_min - step, u_min, u_min + step]))
        local = (lf[2] - lf[0]) / (2 * step)
        tail = math.exp(lf[1]) / local if local > 0 else math.inf
        if local > 0 and tail <= 0.1 * max(quad.abs_tol, quad.rel_tol * res.value):
            total = res.value + tail
            beta = 1.0 / total
            return RateResult(beta, u_min, beta * (res.abs_error + tail) / total, False, slope)
        u_min *= 2.0
    # the integrand never became negligible: treat as divergent
    return RateResult(0.0, u_min, 0.0, True, slope)


def solve_all_rates(spec, quad: QuadratureConfig | None = None, *,
                    printed_h: bool = False) -> RateSolution:
    """Sweep neurons in index order; each rate depends only on earlier ones."""
    spec = _validated(spec)
    if not spec.strict_feedforward:
        i, j = spec.back_edges[0]
        raise NonFeedforward(
            f"back-edge {i + 1}->{j + 1} is supported by the simulator only")
    quad = quad or QuadratureConfig()
    n = spec.n
    out = RateSolution(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n, bool))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AnalyticOffsetWarning)
        for i in range(n):
            res = solve_rate(i, out.beta[:i], spec, quad, printed_h=printed_h)
            out.beta[i] = res.beta
            out.condition_value[i] = res.condition
            out.u_min[i] = res.u_min
            out.quad_error[i] = res.quad_error
            out.degenerate[i] = res.degenerate
            msg = _offset_warning(spec, i)
            if msg:
                out.warnings.append(msg)
    for msg in out.warnings:
        warnings.warn(msg, AnalyticOffsetWarning, stacklevel=2)
    return out


# --- moment generating function ----------------------------------------------

def _mgf_setup(i, u, beta_prefix, spec, quad, beta_i, printed_h):
    spec = _validated(spec)
    a, rho, weights, betas = _prefix_inputs(spec, i, beta_prefix)
    if a > 0 and not u > -1.0 / a:
        raise DomainError(f"MGF of neuron {i + 1} is defined for u > -1/a = {-1.0 / a:g}")
    if beta_i is None:
        res = solve_rate(i, beta_prefix, spec, quad, printed_h=printed_h)
        if res.degenerate:
            raise DomainError(f"neuron {i + 1} has a degenerate rate")
        beta_i = res.beta
    elif not beta_i > 0:
        raise DomainError("MGF requires a non-degenerate rate")
    return spec, a, rho, weights, betas, float(beta_i)


def mgf(i: int, u: float, beta_prefix, spec, quad: QuadratureConfig | None = None, *,
        beta_i: float | None = None, printed_h: bool = False) -> MgfPoint:
    """MGF ``E[exp(u x_i)]`` of the stationary potential in the replica limit.

    Uses the time change ``t = log(1 + a u) / a`` under which the inner
    integral of the solution formula is ``sum_j beta_j (h_j(t) - h_j(T))``::

        Lambda(u) = beta_i exp(sum_j beta_j h_j(T)) int_{-inf}^T f(t) dt

    with ``f`` the rate integrand; ``Lambda(0) = 1`` when ``beta_i`` is the
    solver's rate. ``u`` may be slightly positive (moment checks).
    """
    quad = quad or QuadratureConfig()
    spec, a, rho, weights, betas, beta_i = _mgf_setup(i, u, beta_prefix, spec, quad,
                                                      beta_i, printed_h)
    top = math.log1p(a * u) / a if a > 0 else float(u)
    slope = _slope(a, rho, weights, betas)

    def log_f(t):
        return _log_integrand(t, a, rho, weights, betas, printed_h)

    def f(t):
        with np.errstate(over="ignore"):
            return np.exp(log_f(t))

    lo = top - quad.tail_log_cut / slope
    for _ in range(_MAX_TAIL_DOUBLINGS):
        res = gauss_kronrod(f, lo, top, rel_tol=quad.rel_tol, abs_tol=quad.abs_tol * 1e-3,
                            max_subdivisions=quad.max_subdivisions)
        if f(np.array([lo]))[0] / slope <= 0.1 * quad.rel_tol * res.value:
            break
        lo = top + 2.0 * (lo - top)
    h_top = float(np.sum([b * little_h(top, w, a, printed=printed_h)
                          for w, b in zip(weights, betas) if b != 0.0]))
    return MgfPoint(float(u), beta_i * math.exp(h_top) * res.value)


def mgf_direct(i: int, u: float, beta_prefix, spec, *, beta_i: float | None = None,
               quad: QuadratureConfig | None = None) -> MgfPoint:
    """MGF from the integrating-factor solution of its first-order ODE.

    Nested adaptive quadrature of::

        Lambda(u) = int_{-1/a}^u exp(int_v^u F(s) / (1 + a s) ds) beta_i e^{rho v} / (1 + a v) dv
        F(s)      = sum_j (e^{s W_ji} - 1) beta_j

    (lower limit ``-inf`` at zero drift). Independent of ``h`` and Ei.
    """
    quad = quad or QuadratureConfig()
    spec, a, rho, weights, betas, beta_i = _mgf_setup(i, u, beta_prefix, spec, quad,
                                                      beta_i, False)

    def big_f(s):
        return float(np.sum(np.expm1(s * weights) * betas)) / (1.0 + a * s)

    def outer(v):
        inner, _ = integrate.quad(big_f, v, u, epsabs=1e-13, epsrel=1e-12, limit=200)
        return math.exp(inner + rho * v) * beta_i / (1.0 + a * v)

    lo = -1.0 / a if a > 0 else -np.inf
    val, _ = integrate.quad(outer, lo, u, epsabs=1e-12, epsrel=1e-11, limit=400)
    return MgfPoint(float(u), val)


def mgf_ode_residual(i: int, u: float, beta_prefix, spec, quad: QuadratureConfig | None = None,
                     *, beta_i: float | None = None, printed_h: bool = False,
                     step: float = 1e-4) -> float:
    """Residual ``(1 + a u) L'(u) - sum_j (e^{u W_ji} - 1) beta_j L(u) - beta_i e^{u rho}``.

    ``L`` comes from :func:`mgf` and ``L'`` from a central difference.
    """
    quad = quad or QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16)
    spec, a, rho, weights, betas, beta_i = _mgf_setup(i, u, beta_prefix, spec, quad,
                                                      beta_i, printed_h)
    lam = lambda x: mgf(i, x, beta_prefix, spec, quad, beta_i=beta_i, printed_h=printed_h).value
    deriv = (lam(u + step) - lam(u - step)) / (2 * step)
    coupling = float(np.sum(np.expm1(u * weights) * betas))
    return (1 + a * u) * deriv - coupling * lam(u) - beta_i * math.exp(u * rho)
