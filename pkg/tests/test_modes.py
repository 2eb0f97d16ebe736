import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.integrate import simpson

from metricgraph import HarmonicMode, constant_mode, gram_matrix, mode_pair_inner
from metricgraph.modes import arc_inner, mode_residuals
from metricgraph import pumpkin_graph


def single(A, B, k, l=1.0):
    return HarmonicMode(k, np.array([A]), np.array([B]), np.array([l]))


def test_inner_sine_and_cosine():
    assert_allclose(mode_pair_inner(single(1, 0, math.pi), single(1, 0, math.pi)), 0.5, atol=1e-15)
    assert_allclose(mode_pair_inner(single(0, 1, math.pi), single(0, 1, math.pi)), 0.5, atol=1e-15)


def test_inner_mixed_matches_simpson():
    m = single(1, 1, math.pi / 2)
    x = np.linspace(0.0, 1.0, 2001)
    oracle = simpson(m.value(1, x) ** 2, x=x)
    assert_allclose(oracle, 1.0 + 2.0 / math.pi, rtol=1e-12)
    assert_allclose(mode_pair_inner(m, m), 1.0 + 2.0 / math.pi, rtol=1e-14)
    assert_allclose(m.norm, math.sqrt(1.0 + 2.0 / math.pi), rtol=1e-14)


@settings(max_examples=80, deadline=None)
@given(
    st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 20),
    st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 20), st.floats(0.1, 3),
)
def test_arc_inner_matches_quadrature(a1, b1, k1, a2, b2, k2, l):
    x = np.linspace(0.0, l, 4001)
    f = (a1 * np.sin(k1 * x) + b1 * np.cos(k1 * x)) * (a2 * np.sin(k2 * x) + b2 * np.cos(k2 * x))
    assert_allclose(arc_inner(a1, b1, k1, a2, b2, k2, l), simpson(f, x=x), atol=1e-9)


def test_near_equal_frequencies_continuous():
    # sinc forms: no jump between k1 == k2 and k1 = k2 + tiny
    same = arc_inner(0.3, 0.7, 2.0, 0.3, 0.7, 2.0, 1.3)
    near = arc_inner(0.3, 0.7, 2.0 + 1e-12, 0.3, 0.7, 2.0, 1.3)
    assert_allclose(near, same, rtol=1e-11)


def test_constant_mode_normalized():
    g = pumpkin_graph()
    c = constant_mode(g.lengths)
    assert_allclose(c.norm, 1.0, rtol=1e-15)
    assert_allclose(c.value(2, 0.3), 1.0 / math.sqrt(g.total_length))
    assert mode_residuals(g, c) == (0.0, 0.0)


def test_gram_matrix_symmetric():
    modes = [single(1, 0.5, 1.0), single(0.2, -1, 2.5), single(0, 1, 0.0)]
    G = gram_matrix(modes)
    assert_allclose(G, G.T, atol=1e-15)
    for i, m in enumerate(modes):
        assert_allclose(G[i, i], mode_pair_inner(m, m), rtol=1e-14)


def test_derivative_and_scaling():
    m = single(0.4, -0.9, 3.0, 2.0)
    x = np.linspace(0, 2, 7)
    h = 1e-6
    assert_allclose(m.derivative(1, x), (m.value(1, x + h) - m.value(1, x - h)) / (2 * h), atol=1e-7)
    assert_allclose(m.scaled(2.0).value(1, x), 2.0 * m.value(1, x))
    assert_allclose(m.eigenvalue, -9.0)
    assert_allclose(m.amplitudes, [0.4, -0.9])
