import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from glrmf.errors import DomainError, MissingPrefix, NonFeedforward, ZeroWeight
from glrmf.network import NetworkSpec, NeuronParams
from glrmf.rmf import (AnalyticOffsetWarning, QuadratureConfig, RateSolution,
                       check_rate_condition, little_h, little_l, mgf, mgf_direct,
                       mgf_ode_residual, rate_integrand, solve_all_rates, solve_rate)

from conftest import chain2, isolated


def simpson_chain_beta2(step=1e-4, lo=-200.0):
    """Fixed-step composite Simpson for the zero-drift 2-chain integral."""
    u = np.linspace(lo, 0.0, int(round(-lo / step)) + 1)
    f = np.exp((0.2 + 1.0) * u - np.expm1(0.5 * u) / 0.5)
    return 1.0 / integrate.simpson(f, x=u)


def h_by_quadrature(u, w, a):
    val, _ = integrate.quad(lambda t: math.expm1((w / a) * math.expm1(a * t)), u, 0.0,
                            epsabs=1e-15, epsrel=1e-13)
    return -val


# --- l and h ------------------------------------------------------------------

def test_little_l():
    spec = NetworkSpec.from_edges([NeuronParams(1.0, 2.0)], [])
    assert little_l(0.0, 0, spec) == 0.0
    assert little_l(-math.log(2), 0, spec) == pytest.approx(-1.0, rel=1e-15)
    small = NetworkSpec.from_edges([NeuronParams(1e-8, 2.0)], [])
    u = np.linspace(-10, 0, 41)
    assert np.max(np.abs(little_l(u, 0, small) - 2.0 * u)) <= 1e-6


def test_little_h_values():
    for w, a in [(1.0, 1.0), (-0.5, 2.0), (3.0, 0.0)]:
        assert little_h(0.0, w, a) == 0.0
    # (e^{wu} - 1)/w - u at w=1, u=-1 is e^{-1}
    assert little_h(-1.0, 1.0, 0.0) == pytest.approx(math.exp(-1.0), rel=1e-14)
    # quoted to four places as 0.2961; the integral-form test pins it to 1e-11
    assert little_h(-1.0, 1.0, 1.0) == pytest.approx(0.2961, abs=1e-4)


@pytest.mark.parametrize("w,a", [(1.0, 1.0), (0.5, 2.0), (-0.7, 0.3), (3.0, 0.1), (-2.0, 5.0)])
def test_little_h_matches_integral_form(w, a):
    for u in (-0.1, -1.0, -4.0, -20.0):
        assert little_h(u, w, a) == pytest.approx(h_by_quadrature(u, w, a), rel=1e-11, abs=1e-13)


def test_printed_h_coincides_at_unit_drift():
    u = np.linspace(-5, 0, 11)
    np.testing.assert_allclose(little_h(u, 0.7, 1.0, printed=True), little_h(u, 0.7, 1.0),
                               rtol=1e-15)
    assert not np.allclose(little_h(u, 0.7, 2.0, printed=True), little_h(u, 0.7, 2.0))


def test_zero_weight_rejected():
    with pytest.raises(ZeroWeight):
        little_h(-1.0, 0.0, 1.0)


@pytest.mark.parametrize("w", [-0.5, 0.5, 1.0])
def test_h_zero_drift_continuity(w):
    u = np.linspace(-5, 0, 101)
    assert np.max(np.abs(little_h(u, w, 1e-6) - little_h(u, w, 0.0))) <= 1e-4


def test_h_stable_far_left():
    u = -np.geomspace(1e-3, 1e3, 50)
    for w, a in [(1.0, 1.0), (-1.0, 0.5), (5.0, 0.2)]:
        assert np.all(np.isfinite(little_h(u, w, a)))


# --- condition and integrand --------------------------------------------------

def _fan_in(weights, a=1.0):
    params = [NeuronParams(0, 1)] * len(weights) + [NeuronParams(a, 1.0)]
    k = len(weights)
    return NetworkSpec.from_edges(params, [(j, k, w) for j, w in enumerate(weights)])


def test_condition_values():
    spec = NetworkSpec.from_edges([NeuronParams(1.0, 1.0)], [])
    assert check_rate_condition(0, [], spec) == (False, 0.0)
    ok, v = check_rate_condition(2, [1.0, 1.0], _fan_in([1.0, -1.0]))
    assert not ok and v == pytest.approx(-1.086161269630488, rel=1e-14)
    ok, v = check_rate_condition(1, [1.0], _fan_in([1.0]))
    assert ok and v == pytest.approx(0.632120558828558, rel=1e-14)


def test_condition_zero_drift():
    ok, v = check_rate_condition(1, [1.0], chain2())
    assert ok and v == pytest.approx(1.2)
    ok, v = check_rate_condition(1, [1.0], chain2(w=-0.5))
    assert not ok and v == -math.inf


def test_missing_prefix_and_back_edge():
    with pytest.raises(MissingPrefix):
        check_rate_condition(1, [], chain2())
    spec = NetworkSpec.from_edges([NeuronParams(0, 1), NeuronParams(0, 1)], [(1, 0, 0.5)])
    with pytest.raises(NonFeedforward):
        solve_all_rates(spec)


def test_integrand_values():
    assert rate_integrand(0.0, 1, [1.0], chain2(a2=0.7)) == 1.0
    assert rate_integrand(-1.0, 0, [], isolated()) == pytest.approx(math.exp(-2.0), rel=1e-15)


@pytest.mark.parametrize("weights,beta", [([1.0], [1.0]), ([1.0, -0.3], [1.0, 0.5])])
def test_integrand_asymptotic_slope(weights, beta):
    spec = _fan_in(weights, a=1.0)
    i = len(weights)
    _, v = check_rate_condition(i, beta, spec)
    log_f = lambda u: math.log(rate_integrand(u, i, beta, spec))
    # local slope at u = -50
    d = 1e-3
    assert (log_f(-50 + d) - log_f(-50 - d)) / (2 * d) == pytest.approx(v, rel=1e-2)
    # the ratio log f / u carries an O(1/u) intercept term
    assert log_f(-1000.0) / -1000.0 == pytest.approx(v, rel=1e-2)


def test_integrand_positive_and_stable():
    spec = _fan_in([1.0, -0.3], a=1.0)
    u = -np.geomspace(1e-3, 1e3, 200)
    f = rate_integrand(u, 2, [1.0, 0.5], spec)
    assert np.all(f > 0) or np.all(f >= 0)
    assert np.all(np.isfinite(f))


# --- solver -------------------------------------------------------------------

def test_isolated_rates():
    assert solve_rate(0, [], isolated()).beta == pytest.approx(2.0, abs=1e-10)
    res = solve_rate(0, [], isolated(a=1.0, r=1.0))
    assert res.degenerate and res.beta == 0.0


def test_chain_against_simpson():
    sol = solve_all_rates(chain2())
    assert sol.beta[0] == pytest.approx(1.0, abs=1e-12)
    assert sol.beta[1] == pytest.approx(simpson_chain_beta2(), rel=1e-8)


def test_all_isolated_zero_drift():
    r = [0.3, 1.0, 2.5]
    spec = NetworkSpec.from_edges([NeuronParams(0, x) for x in r], [])
    np.testing.assert_allclose(solve_all_rates(spec).beta, r, rtol=1e-10)


def test_rnorm_exponent_one_reduces():
    params = [NeuronParams(0, 1.0), NeuronParams(0.5, 0.2), NeuronParams(1.0, 0.4)]
    edges = [(0, 1, 0.5), (0, 2, 0.8), (1, 2, -0.1)]
    lin = solve_all_rates(NetworkSpec.from_edges(params, edges))
    rn = solve_all_rates(NetworkSpec.from_edges(params, edges, hypothesis="H3",
                                                interaction="rnorm"))
    np.testing.assert_allclose(rn.beta, lin.beta, rtol=1e-12)


def test_monotone_in_excitatory_weight():
    betas = [solve_all_rates(chain2(w=w)).beta[1] for w in np.linspace(0.1, 2.0, 8)]
    assert np.all(np.diff(betas) >= 0)


def test_drift_continuity_of_beta():
    b0 = solve_all_rates(chain2(a2=0.0)).beta[1]
    b1 = solve_all_rates(chain2(a2=1e-6)).beta[1]
    assert abs(b1 - b0) <= 1e-4 * b0


def test_degenerate_iff_condition_fails():
    for w in (-1.0, -0.2, 0.3, 1.5):
        spec = chain2(a2=1.0, w=w)
        res = solve_rate(1, [1.0], spec)
        ok, _ = check_rate_condition(1, [1.0], spec)
        assert res.degenerate == (not ok)
        if ok:
            assert res.beta > 0 and res.condition > 0


def test_offset_warning():
    spec = NetworkSpec.from_edges([NeuronParams(0, 1.0, 0.5)], [], hypothesis="H2")
    with pytest.warns(AnalyticOffsetWarning):
        solve_all_rates(spec)


def test_solution_serialization():
    sol = solve_all_rates(chain2(a2=1.0))
    lines = sol.to_csv().splitlines()
    assert lines[0] == "neuron,beta,condition,u_min,quad_error,degenerate"
    assert lines[1].startswith("1,")
    back = RateSolution.from_json(sol.to_json())
    np.testing.assert_array_equal(back.beta, sol.beta)
    np.testing.assert_array_equal(back.degenerate, sol.degenerate)


# --- MGF ----------------------------------------------------------------------

def test_mgf_normalized():
    spec = chain2(a2=1.0)
    beta = solve_all_rates(spec).beta
    assert mgf(1, 0.0, beta[:1], spec, beta_i=beta[1]).value == pytest.approx(1.0, abs=1e-9)


def test_mgf_matches_direct_oracle():
    spec = chain2(a2=1.0)
    beta = solve_all_rates(spec).beta
    for u in (-0.8, -0.3, -0.05):
        a = mgf(1, u, beta[:1], spec, beta_i=beta[1]).value
        b = mgf_direct(1, u, beta[:1], spec, beta_i=beta[1]).value
        assert a == pytest.approx(b, rel=1e-9)


def test_mgf_first_moment_is_rate():
    spec = chain2(a2=1.0)
    beta = solve_all_rates(spec, QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16)).beta
    q = QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16)
    h = 1e-5
    lam = lambda u: mgf(1, u, beta[:1], spec, q, beta_i=beta[1]).value
    assert (lam(h) - lam(-h)) / (2 * h) == pytest.approx(beta[1], rel=1e-5)


def test_mgf_ode_residual_small():
    spec = chain2(a2=1.0)
    beta = solve_all_rates(spec, QuadratureConfig(rel_tol=1e-13, abs_tol=1e-16)).beta
    for u in (-0.5, -0.1):
        assert abs(mgf_ode_residual(1, u, beta[:1], spec, beta_i=beta[1])) <= 1e-6


def test_mgf_domain():
    spec = chain2(a2=1.0)
    with pytest.raises(DomainError):
        mgf(1, -1.0, [1.0], spec)
    with pytest.raises(DomainError):
        mgf(0, -0.1, [], isolated(a=1.0, r=1.0))
