import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from parosc.families import eigenfunction, random_band_limited, wave_packets
from parosc.grids import GridSpec
from parosc.transform import (GridFunction, MixedSpectrum, analyze, apply_hpar,
                              default_max_degree, plancherel_defect, synthesize)

SMALL = GridSpec(rho_halfwidth=8.0, rho_points=32, x_halfwidth=10.0, x_points=64)
SMALL_2D = GridSpec(rho_halfwidth=8.0, rho_points=16, x_rule="gauss-hermite", x_points=24, dim=2)


def test_default_degrees():
    assert default_max_degree(1) == 40
    assert default_max_degree(2) == 24


@pytest.mark.parametrize("spec", [SMALL, SMALL_2D])
def test_eigenfunction_has_single_coefficient(spec):
    mu = (3,) * spec.dim
    s = analyze(eigenfunction(spec, 2, mu), 10)
    k = s.index_of(mu)
    assert abs(s.coeffs[s.bin_index(2), k]) == pytest.approx(1.0, abs=1e-12)
    rest = s.coeffs.copy()
    rest[s.bin_index(2), k] = 0
    assert np.max(np.abs(rest)) < 1e-12


@pytest.mark.parametrize("spec", [SMALL, SMALL_2D])
def test_round_trip_and_plancherel(spec):
    s = random_band_limited(spec, 1, seed=7, tau_band=4, degree_band=6, max_degree=12)[0]
    f = synthesize(s)
    assert f.lp_norm(2) == pytest.approx(s.norm(), rel=1e-12)
    back = analyze(f, 12)
    assert np.max(np.abs(back.coeffs - s.coeffs)) < 1e-10
    assert plancherel_defect(f, 12) < 1e-8


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), a=st.complex_numbers(max_magnitude=10))
def test_transform_is_linear(seed, a):
    s1, s2 = random_band_limited(SMALL, 2, seed, tau_band=3, degree_band=4, max_degree=8)
    f1, f2 = synthesize(s1), synthesize(s2)
    lhs = analyze(a * f1 + f2, 8).coeffs
    rhs = a * analyze(f1, 8).coeffs + analyze(f2, 8).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + abs(a)) * np.max(np.abs(rhs) + 1)


def test_inner_product_preserved():
    s1, s2 = random_band_limited(SMALL, 2, seed=3, tau_band=4, degree_band=5, max_degree=10)
    f1, f2 = synthesize(s1), synthesize(s2)
    grid_inner = np.sum(SMALL.volume_weights() * f1.values * np.conj(f2.values))
    assert grid_inner == pytest.approx(s1.inner(s2), rel=1e-12)


def test_apply_hpar_eigenvalues():
    s = analyze(eigenfunction(SMALL, -3, (2,)), 6)
    h = apply_hpar(s)
    lam = (math.pi * 3 / SMALL.rho_halfwidth) ** 2 + 2 * 2 + 1
    assert h.norm() == pytest.approx(lam, rel=1e-12)


def test_budget_and_shape_errors():
    with pytest.raises(ValueError):
        GridFunction(SMALL, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        GridFunction(SMALL, np.full(SMALL.shape, np.nan))
    with pytest.raises(ValueError):
        plancherel_defect(GridFunction(SMALL, np.zeros(SMALL.shape)))


def test_csv_round_trip_and_header():
    spec = GridSpec(rho_halfwidth=2.0, rho_points=4, x_halfwidth=2.0, x_points=5, dim=2)
    f = GridFunction.from_callable(spec, lambda r, x1, x2: r + 1j * x1 * x2)
    text = f.to_csv()
    assert text.splitlines()[0] == "rho,x1,x2,re,im"
    assert "\r" not in text
    g = GridFunction.from_csv(spec, text)
    np.testing.assert_array_equal(g.values, f.values)
    with pytest.raises(ValueError):
        GridFunction.from_csv(GridSpec(rho_halfwidth=3.0, rho_points=4, x_halfwidth=2.0,
                                       x_points=5, dim=2), text)


def test_lp_norm_rules():
    f = GridFunction.from_callable(SMALL, lambda r, x: np.exp(-(r * r + x * x) / 2))
    assert f.lp_norm(2) == pytest.approx(math.sqrt(math.pi), rel=1e-10)
    assert f.lp_norm(1) == pytest.approx(2 * math.pi, rel=1e-10)
    with pytest.raises(ValueError):
        f.lp_norm(0.5)
    g = GridFunction(SMALL_2D, np.ones(SMALL_2D.shape))
    with pytest.raises(ValueError):
        g.lp_norm(3)


def test_families_are_prefix_stable():
    a = wave_packets(SMALL, 2, seed=11)
    b = wave_packets(SMALL, 4, seed=11)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.values, y.values)
    r1 = random_band_limited(SMALL, 1, seed=5)
    r2 = random_band_limited(SMALL, 3, seed=5)
    np.testing.assert_array_equal(r1[0].coeffs, r2[0].coeffs)


def test_mixed_spectrum_arithmetic():
    s = MixedSpectrum.zeros(SMALL, 4)
    assert s.norm() == 0
    t = random_band_limited(SMALL, 1, seed=1, tau_band=2, degree_band=3, max_degree=4)[0]
    assert (2 * t - t).norm() == pytest.approx(t.norm())
