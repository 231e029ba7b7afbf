import math

import numpy as np
import pytest

from glrmf.errors import QuadratureFailure
from glrmf.quadrature import gauss_kronrod


def test_polynomial_exact():
    res = gauss_kronrod(lambda x: 3 * x ** 2 + 1, 0.0, 2.0)
    assert res.value == pytest.approx(10.0, rel=1e-15)
    assert res.n_intervals == 1


def test_exponential_tail():
    res = gauss_kronrod(lambda x: np.exp(2 * x), -40.0, 0.0)
    assert res.value == pytest.approx(0.5 * (1 - math.exp(-80)), rel=1e-12)


def test_reversed_and_empty():
    assert gauss_kronrod(np.sin, 1.0, 1.0).value == 0.0
    fwd = gauss_kronrod(np.cos, 0.0, 1.0).value
    assert gauss_kronrod(np.cos, 1.0, 0.0).value == pytest.approx(-fwd, rel=1e-14)


def test_sharp_peak_refines():
    f = lambda x: 1.0 / (1e-4 + x ** 2)
    res = gauss_kronrod(f, -1.0, 1.0, rel_tol=1e-12)
    assert res.value == pytest.approx(2 * math.atan(1 / 1e-2) / 1e-2, rel=1e-11)
    assert res.n_intervals > 10


def test_budget_and_nonfinite():
    with pytest.raises(QuadratureFailure):
        gauss_kronrod(lambda x: np.abs(x - 0.1) ** -0.9, -1.0, 1.0, max_subdivisions=8)
    with pytest.raises(QuadratureFailure):
        gauss_kronrod(lambda x: np.where(x > 0.5, np.inf, 1.0), 0.0, 1.0)
