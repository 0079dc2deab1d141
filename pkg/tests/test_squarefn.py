import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parosc import squarefn
from parosc.families import eigenfunction, random_band_limited, wave_packets
from parosc.grids import GridSpec
from parosc.symbols import imaginary_power_symbol, one_symbol
from parosc.transform import GridFunction, analyze

SPEC = GridSpec(rho_halfwidth=8.0, rho_points=64, x_halfwidth=10.0, x_points=64)
PACKET_SPEC = GridSpec(rho_halfwidth=16.0, rho_points=128, x_halfwidth=10.0, x_points=80)


def test_gamma_constants():
    assert squarefn.gamma_constant(1) == 0.25
    assert squarefn.gamma_constant(2) == 0.375
    assert squarefn.gamma_constant(3) == 1.875


@settings(max_examples=30, deadline=None)
@given(order=st.integers(1, 4), lam_min=st.floats(0.5, 10), ratio=st.floats(1, 1e4))
def test_banded_quadrature_calibrates(order, lam_min, ratio):
    q = squarefn.TimeQuadrature.for_band(lam_min, lam_min * ratio, order)
    assert q.calibration_error(order, lam_min, lam_min * ratio) < 1e-6


def test_default_quadrature_range_too_short_for_large_spectrum():
    q = squarefn.TimeQuadrature()
    with pytest.raises(squarefn.CalibrationError):
        q.require(1, 1.0, 1e6)
    with pytest.raises(ValueError):
        squarefn.TimeQuadrature(t_min=2.0, t_max=1.0)


def test_quadrature_weights_integrate_log_measure():
    q = squarefn.TimeQuadrature(1e-3, 10.0, 400)
    # int_{a}^{b} dt = b - a
    assert np.sum(q.weights) == pytest.approx(10.0 - 1e-3, rel=1e-4)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_g_function_on_eigenfunction_is_pointwise_exact(order):
    f = eigenfunction(SPEC, 1, (2,))
    g = squarefn.g_function(order, f, max_degree=8)
    expected = math.sqrt(squarefn.gamma_constant(order)) * np.abs(f.values)
    np.testing.assert_allclose(g.values, expected, rtol=1e-7, atol=1e-14)


def test_g_identity_on_random_input():
    s = random_band_limited(SPEC, 1, seed=4, tau_band=4, degree_band=6, max_degree=10)[0]
    for order in (1, 2):
        g = squarefn.g_function(order, s)
        assert g.l2_norm() ** 2 / s.norm() ** 2 == pytest.approx(squarefn.gamma_constant(order), rel=1e-6)


def test_g_function_rejects_bad_inputs():
    f = eigenfunction(SPEC, 1, (0,))
    with pytest.raises(ValueError):
        squarefn.g_function(0, f)
    with pytest.raises(squarefn.CalibrationError):
        squarefn.g_function(1, f, q=squarefn.TimeQuadrature(1.0, 2.0, 20), max_degree=4)


def test_g_star_monotone_in_order():
    f = wave_packets(PACKET_SPEC, 1, seed=2)[0]
    g1 = squarefn.g_star_function(1, f, max_degree=30).values
    g2 = squarefn.g_star_function(2, f, max_degree=30).values
    assert np.all(g2 <= g1 * (1 + 1e-12) + 1e-300)
    assert np.all(g1 >= 0)


def test_g_star_detects_boundary_mass():
    spec = GridSpec(rho_halfwidth=4.0, rho_points=32, x_halfwidth=6.0, x_points=32)
    f = GridFunction.from_callable(spec, lambda r, x: np.exp(-((r - 3.9) ** 2) - x * x))
    with pytest.raises(squarefn.SpatialTailError):
        squarefn.g_star_function(1, f, max_degree=12)


def test_g_star_needs_uniform_grid():
    spec = GridSpec(rho_halfwidth=4.0, rho_points=16, x_rule="gauss-hermite", x_points=16)
    with pytest.raises(ValueError):
        squarefn.g_star_function(1, eigenfunction(spec, 0, (0,)), max_degree=4)


def test_profile_csv():
    f = eigenfunction(SPEC, 1, (1,))
    text = squarefn.g_function(1, f, max_degree=4).to_csv()
    lines = text.splitlines()
    assert lines[0] == "rho,x1,value"
    assert len(lines) == 1 + SPEC.rho_points * SPEC.x_points


def test_domination_for_identity_symbol():
    # g_2(f) <= C g*_1(f) with T_m = identity
    f = wave_packets(PACKET_SPEC, 1, seed=1)[0]
    ratio = squarefn.domination_ratio(1, one_symbol(), f, max_degree=30)
    assert 0 < ratio < 10


def test_domination_probe_report_is_deterministic():
    family = wave_packets(PACKET_SPEC, 2, seed=3)
    sym = imaginary_power_symbol(1.0)
    a = squarefn.pointwise_domination_probe(2, sym, family, 3, max_degree=30)
    b = squarefn.pointwise_domination_probe(2, sym, family, 3, max_degree=30)
    assert a.to_json() == b.to_json()
    assert math.isfinite(a.results["constant"])


def test_lp_square_function_p2_exact():
    fam = random_band_limited(SPEC, 2, seed=8, tau_band=5, degree_band=8, max_degree=16)
    for s in fam:
        assert squarefn.lp_ratio(s, 2.0) == pytest.approx(1.0, abs=1e-10)


def test_lp_probe_report():
    fam = random_band_limited(SPEC, 4, seed=1, tau_band=5, degree_band=8, max_degree=16)
    rep = squarefn.lp_equivalence_probe(fam, (1.5, 2.0, 3.0), seed=1)
    assert rep.passed
    assert rep.results["2.0"]["c1"] == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(ValueError):
        squarefn.lp_equivalence_probe(fam[:1])


def test_spectral_band():
    s = analyze(eigenfunction(SPEC, 2, (3,)), 6)
    lam = (math.pi * 2 / SPEC.rho_halfwidth) ** 2 + 7
    lo, hi = squarefn.spectral_band(s, rtol=1e-8)
    assert lo == pytest.approx(lam) and hi == pytest.approx(lam)


def test_zero_input_gives_zero_profiles():
    f = GridFunction(PACKET_SPEC, np.zeros(PACKET_SPEC.shape))
    assert np.all(squarefn.g_function(1, f, max_degree=6).values == 0)
    assert np.all(squarefn.g_star_function(1, f, max_degree=6).values == 0)


def test_g_function_scales_with_modulus():
    s = random_band_limited(SPEC, 1, seed=6, tau_band=3, degree_band=4, max_degree=8)[0]
    a = 2.5 - 1.5j
    q = squarefn.TimeQuadrature.for_band(*squarefn.spectral_band(s), 2)
    np.testing.assert_allclose(squarefn.g_function(2, a * s, q).values,
                               abs(a) * squarefn.g_function(2, s, q).values, rtol=1e-13)


def test_time_derivative_field_against_differences():
    from parosc.numdiff import richardson_derivative

    s = random_band_limited(SPEC, 1, seed=2, tau_band=3, degree_band=4, max_degree=8)[0]
    exact = squarefn.heat_time_derivative_coeffs(1, 0.3, s)[0]
    fd = richardson_derivative(lambda t: squarefn.heat_time_derivative_coeffs(0, t, s)[0], 0.3, 1,
                               0.02, levels=4)
    assert np.max(np.abs(fd - exact)) < 1e-7 * np.max(np.abs(exact))
    f1 = squarefn.heat_time_derivative_field(1, 0.3, s)
    assert f1.lp_norm(2) == pytest.approx(np.linalg.norm(exact), rel=1e-12)
    with pytest.raises(ValueError):
        squarefn.heat_time_derivative_field(1, 0.0, s)


def test_heat_commutes_with_symbol_on_spectra():
    from parosc.symbols import apply_symbol, heat_symbol

    s = random_band_limited(SPEC, 1, seed=9, tau_band=4, degree_band=5, max_degree=8)[0]
    sym = imaginary_power_symbol(1.0)
    t, u = 0.2, 0.3
    a = apply_symbol(apply_symbol(apply_symbol(s, heat_symbol(t)), sym), heat_symbol(u))
    b = apply_symbol(apply_symbol(s, sym), heat_symbol(t + u))
    assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-12 * np.max(np.abs(b.coeffs))


def test_single_block_input_has_unit_ratio_at_every_p():
    from parosc.symbols import lp_block
    from parosc.transform import MixedSpectrum

    s = MixedSpectrum.zeros(SPEC, 6)
    coeffs = s.coeffs.copy()
    coeffs[s.bin_index(0), s.index_of((2,))] = 1.0  # lambda = 5, sqrt = 2.236
    s = s.with_coeffs(coeffs)
    block = [lp_block(2, 1)]  # raw block 2 has support (1.5, 3); its value at 2.236 is b
    value = abs(block[0](0.0, 2)[()])
    for p in (1.5, 2.0, 3.0):
        assert squarefn.lp_ratio(s, p, block) == pytest.approx(value, rel=1e-12)
