import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from metricgraph import parse_rhs, pumpkin_exact, pumpkin_rhs
from metricgraph.problems import RhsSpec, constant_fit, fitted_error, loglog_slope


@pytest.mark.parametrize(
    "text, spec",
    [
        ("gaussian(1.0,0.5,2)", RhsSpec("gaussian", 1.0, 0.5, 2)),
        (" dgaussian( 0.865 , 0.15 , 2 ) ", RhsSpec("dgaussian", 0.865, 0.15, 2)),
        ("mode(4)", RhsSpec("mode", q=4)),
        ("constant", RhsSpec("constant", c=1.0)),
        ("constant(2.5)", RhsSpec("constant", c=2.5)),
    ],
)
def test_parse(text, spec):
    assert parse_rhs(text) == spec
    assert parse_rhs(str(spec)) == spec


@pytest.mark.parametrize("text", ["gaussian(1,2)", "mode(1.5)", "sine(1)", "constant(1,2)", "gaussian(a,b,c)", "(("])
def test_parse_errors(text):
    with pytest.raises(ValueError):
        parse_rhs(text)


def test_validate(pumpkin):
    with pytest.raises(ValueError):
        RhsSpec("gaussian", 0.5, 0.1, 4).validate(pumpkin)
    with pytest.raises(ValueError):
        RhsSpec("gaussian", 5.0, 0.1, 1).validate(pumpkin)
    with pytest.raises(ValueError):
        RhsSpec("gaussian", 0.5, 0.0, 1).validate(pumpkin)
    with pytest.raises(ValueError):
        RhsSpec("mode", q=2).function(pumpkin)


def test_rhs_functions(pumpkin):
    f = pumpkin_rhs().function(pumpkin)
    x = np.linspace(0, 1.7, 11)
    assert np.all(f(1, x) == 0)
    z = (x - 0.865) / 0.15
    assert_allclose(f(2, x), -2 * z / 0.15 * np.exp(-z * z))
    assert_allclose(RhsSpec("constant", c=3.0).function(pumpkin)(3, x), 3.0)


def test_exact_solution_solves_problem(pumpkin):
    # u'' = f on each arc, continuity and Kirchhoff at both vertices
    f = pumpkin_rhs().function(pumpkin)
    h = 1e-4
    for arc in (1, 2, 3):
        x = np.linspace(0.1, pumpkin.lengths[arc - 1] - 0.1, 9)
        d2 = (pumpkin_exact(arc, x + h) - 2 * pumpkin_exact(arc, x) + pumpkin_exact(arc, x - h)) / h ** 2
        assert_allclose(d2, f(arc, x), atol=1e-5)
    ls = pumpkin.lengths
    tails = [pumpkin_exact(a, 0.0) for a in (1, 2, 3)]
    heads = [pumpkin_exact(a, ls[a - 1]) for a in (1, 2, 3)]
    assert np.ptp(tails) < 1e-14 and np.ptp(heads) < 1e-14
    d = lambda a, x: (pumpkin_exact(a, x + h) - pumpkin_exact(a, x - h)) / (2 * h)
    assert abs(sum(d(a, 0.0) for a in (1, 2, 3))) < 1e-8
    assert abs(sum(d(a, ls[a - 1]) for a in (1, 2, 3))) < 1e-8
    with pytest.raises(ValueError):
        pumpkin_exact(4, 0.0)


def test_fits():
    x = np.linspace(0, 1, 50)
    assert_allclose(constant_fit(x + 3.0, x), 3.0)
    assert fitted_error(x + 3.0, x) < 1e-15
    slope, icpt = loglog_slope([1, 10, 100], [2, 200, 20000])
    assert_allclose([slope, icpt], [2.0, math.log10(2)])
