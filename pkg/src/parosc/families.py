"""Reproducible input families for probes and tests.

Member ``i`` of a family built from ``seed`` draws from
``np.random.default_rng([seed, i])``, so a family of size ``2n`` extends the
family of size ``n`` with the same first members.
"""

from __future__ import annotations

import math

import numpy as np

from .grids import GridSpec
from .hermite import hermite_table
from .transform import GridFunction, MixedSpectrum, synthesize


def _rng(seed: int, member: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(member)])


def eigenfunction(spec: GridSpec, tau_bin: int, mu) -> GridFunction:
    """``e_i(rho) Phi_mu(x)`` with ``e_i = exp(i tau_i rho) / sqrt(2 L)``."""
    mu = tuple(int(m) for m in mu)
    if len(mu) != spec.dim:
        raise ValueError(f"multi-index {mu} does not match dimension {spec.dim}")
    tau = math.pi * tau_bin / spec.rho_halfwidth
    coords = spec.coordinates()
    values = np.exp(1j * tau * coords[0]) / math.sqrt(2.0 * spec.rho_halfwidth)
    for m, xj in zip(mu, coords[1:]):
        values = values * hermite_table(m, xj)[m]
    return GridFunction(spec, values)


def random_band_limited(spec: GridSpec, count: int, seed: int = 0, tau_band: int = 6,
                        degree_band: int = 8, max_degree: int | None = None) -> list[MixedSpectrum]:
    """Spectra with i.i.d. complex Gaussian coefficients on ``|i| <= tau_band``,
    ``|mu| <= degree_band`` and zeros elsewhere."""
    max_degree = degree_band if max_degree is None else max_degree
    if degree_band > max_degree:
        raise ValueError("degree band exceeds the truncation")
    if tau_band >= spec.rho_points // 2:
        raise ValueError("tau band exceeds the rho grid")
    out = []
    for i in range(count):
        s = MixedSpectrum.zeros(spec, max_degree)
        rng = _rng(seed, i)
        rows = slice(s.bin_index(-tau_band), s.bin_index(tau_band) + 1)
        cols = s.degrees <= degree_band
        shape = (rows.stop - rows.start, int(cols.sum()))
        coeffs = s.coeffs.copy()
        coeffs[rows, cols] = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        out.append(s.with_coeffs(coeffs))
    return out


def random_band_limited_functions(spec: GridSpec, count: int, seed: int = 0,
                                  **kwargs) -> list[GridFunction]:
    return [synthesize(s) for s in random_band_limited(spec, count, seed, **kwargs)]


def wave_packets(spec: GridSpec, count: int, seed: int = 0, width_range=(1.0, 2.0),
                 center_range=(-3.0, 3.0), freq_range=(-2.0, 2.0), degree_band: int = 6
                 ) -> list[GridFunction]:
    """rho-localized packets ``exp(-(rho-c)^2/(2 s^2) + i xi rho) sum_mu a_mu Phi_mu(x)``.

    Widths of at least one keep the rho-spectrum essentially band-limited;
    the Hermite part is a random combination through ``degree_band``.
    """
    coords = spec.coordinates()
    table = hermite_table(degree_band, spec.x)
    out = []
    for i in range(count):
        rng = _rng(seed, i)
        width = rng.uniform(*width_range)
        center = rng.uniform(*center_range)
        freq = rng.uniform(*freq_range)
        envelope = np.exp(-((coords[0] - center) ** 2) / (2.0 * width ** 2) + 1j * freq * coords[0])
        per_axis = rng.uniform(size=(spec.dim, degree_band + 1)) ** 2
        weights = rng.standard_normal((spec.dim, degree_band + 1)) + 1j * rng.standard_normal(
            (spec.dim, degree_band + 1))
        # tensor product of random 1D Hermite combinations
        x_part = np.ones(spec.shape[1:], dtype=complex)
        for axis in range(spec.dim):
            profile = (per_axis[axis] * weights[axis]) @ table
            shape = [1] * spec.dim
            shape[axis] = len(spec.x)
            x_part = x_part * profile.reshape(shape)
        out.append(GridFunction(spec, envelope * x_part[None, ...]))
    return out


FAMILIES = ("eigenfunction", "random", "packet")
