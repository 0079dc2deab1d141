import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial.hermite import hermgauss
from scipy.special import eval_hermite, factorial

from parosc import hermite

# mpmath, 40 digits: hermite(k, x) exp(-x^2/2) / sqrt(2^k k! sqrt(pi))
FROZEN_H = [
    (0, 0.7, 0.58790937244210464),
    (1, 0.7, 0.58200058556771563),
    (5, 0.7, 0.32729676349851073),
    (40, 3.0, 0.057369581235740706),
    (40, 8.5, 0.44956094958537919),
]


@pytest.mark.parametrize("k,x,expected", FROZEN_H)
def test_hermite_frozen_values(k, x, expected):
    assert hermite.eval_hermite_1d(k, x) == pytest.approx(expected, rel=1e-13)


def test_hermite_matches_scipy_polynomials():
    x = np.linspace(-4, 4, 41)
    table = hermite.hermite_table(12, x)
    for k in range(13):
        ref = eval_hermite(k, x) * np.exp(-x * x / 2) / math.sqrt(2.0 ** k * factorial(k) * math.sqrt(math.pi))
        np.testing.assert_allclose(table[k], ref, atol=1e-13)


def test_orthonormality_by_gauss_rule():
    # h_j h_k e^{x^2} is a polynomial of degree j+k times e^{-x^2}
    nodes, weights = hermgauss(80)
    table = hermite.hermite_table(30, nodes) * np.exp(nodes ** 2 / 2)
    gram = (table * weights) @ table.T
    np.testing.assert_allclose(gram, np.eye(31), atol=1e-12)


def test_no_overflow_at_high_degree():
    x = np.linspace(-60, 60, 1201)
    table = hermite.hermite_table(1500, x)
    assert np.all(np.isfinite(table))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        hermite.eval_hermite_1d(-1, 0.0)
    with pytest.raises(ValueError):
        hermite.hermite_table(3, [0.0, float("nan")])
    with pytest.raises(ValueError):
        hermite.eval_hermite_nd((1, 2), [0.0])
    with pytest.raises(ValueError):
        hermite.mehler_closed_form(1.0, 0.0, 0.0)


def test_shell_enumeration_and_budget():
    assert hermite.shell(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(hermite.shell(3, 4)) == math.comb(6, 2)
    assert len(hermite.multi_indices(2, 3)) == 10
    with pytest.raises(hermite.ShellBudgetError):
        hermite.shell(6, 40, budget=100)


def test_creation_operator_raises_index():
    out = hermite.creation_apply(2, {(1, 0): 1.0, (0, 0): 2.0})
    assert out == {(1, 1): pytest.approx(math.sqrt(2.0)), (0, 1): pytest.approx(2 * math.sqrt(2.0))}


def test_creation_operator_against_derivative():
    # A h_k = -h_k' + x h_k = sqrt(2(k+1)) h_{k+1}
    x = np.linspace(-3, 3, 13)
    k, step = 4, 1e-5
    deriv = (hermite.eval_hermite_1d(k, x + step) - hermite.eval_hermite_1d(k, x - step)) / (2 * step)
    lhs = -deriv + x * hermite.eval_hermite_1d(k, x)
    coeff = hermite.creation_apply(1, {(k,): 1.0})[(k + 1,)]
    np.testing.assert_allclose(lhs, coeff * hermite.eval_hermite_1d(k + 1, x), atol=1e-8)


def test_mehler_frozen_value():
    # mpmath closed form at r=1/2, x=0.7, x'=0.3
    assert hermite.mehler_closed_form(0.5, 0.7, 0.3) == pytest.approx(0.53160356817013139, rel=1e-14)


def test_projection_kernels_match_shell_sums():
    x, xp = np.array([0.3, -0.8]), np.array([1.1, 0.4])
    vec = hermite.projection_kernels(6, x, xp[None, :])[:, 0]
    for k in range(7):
        assert vec[k] == pytest.approx(hermite.projection_kernel(k, x, xp), abs=1e-15)


def test_diagonal_heat_trace_identity():
    # integral over x of sum_mu e^{-t(2|mu|+d)} Phi_mu^2 = (2 sinh t)^{-d}
    x = np.linspace(-12, 12, 2401)
    h = x[1] - x[0]
    t = 0.4
    diag = np.array([hermite.weighted_diagonal_sum(2 * t, xi) for xi in x]) * math.exp(-t)
    assert h * diag.sum() == pytest.approx(hermite.diagonal_heat_trace(t, 1), rel=1e-10)
    assert hermite.heat_trace_constant(1) * math.sinh(t) ** -1 == pytest.approx(
        hermite.diagonal_heat_trace(t, 1), rel=1e-14)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.05, 0.5), x=st.floats(-2, 2), xp=st.floats(-2, 2))
def test_mehler_series_converges(r, x, xp):
    series = hermite.mehler_series(r, x, xp, 60)
    closed = hermite.mehler_closed_form(r, x, xp)
    assert abs(series - closed) <= 1e-12 * max(1.0, abs(closed))


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-6, 6), k=st.integers(0, 60))
def test_hermite_functions_bounded(x, k):
    # |h_k(x)| <= pi^{-1/4}
    assert abs(hermite.eval_hermite_1d(k, x)) <= hermite.PI_QUARTER + 1e-12
