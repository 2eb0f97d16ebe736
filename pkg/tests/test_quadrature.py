import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad

from metricgraph.quadrature import adaptive_gauss, gauss_legendre


@pytest.mark.parametrize("n", [1, 2, 5, 12])
def test_rule_exact_for_polynomials(n):
    x, w = gauss_legendre(n)
    for deg in range(2 * n):
        exact = 0.0 if deg % 2 else 2.0 / (deg + 1)
        assert_allclose(w @ x ** deg, exact, atol=1e-14)


def test_rule_read_only():
    x, _ = gauss_legendre(4)
    with pytest.raises(ValueError):
        x[0] = 0.0


def test_smooth_integral():
    val, ok = adaptive_gauss(np.exp, 0.0, 2.0)
    assert ok
    assert_allclose(val, math.e ** 2 - 1.0, rtol=1e-14)


def test_narrow_peak_against_quad():
    f = lambda x: np.exp(-((x - 0.731) / 2e-2) ** 2)
    val, ok = adaptive_gauss(f, 0.0, 3.0)
    ref, _ = quad(f, 0.0, 3.0, points=[0.731], epsabs=1e-15, epsrel=1e-14, limit=200)
    assert ok
    assert_allclose(val, ref, rtol=1e-11)


def test_vector_valued_and_reversed():
    f = lambda x: np.vstack([np.sin(x), np.cos(x), x ** 3])
    val, ok = adaptive_gauss(f, 0.0, 1.0)
    assert val.shape == (3,)
    assert_allclose(val, [1 - math.cos(1), math.sin(1), 0.25], rtol=1e-14)
    back, _ = adaptive_gauss(f, 1.0, 0.0)
    assert_allclose(back, -val)
    zero, ok = adaptive_gauss(f, 0.5, 0.5)
    assert ok and np.all(zero == 0)


def test_reports_nonconvergence():
    _, ok = adaptive_gauss(lambda x: np.sign(x - 1 / 3), 0.0, 1.0, max_depth=3)
    assert not ok
