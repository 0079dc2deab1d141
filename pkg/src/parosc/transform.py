"""Mixed Fourier (rho) x Hermite (x) analysis and synthesis.

Coefficients are the inner products ``c(i, mu) = <f, e_i (x) Phi_mu>`` with the
periodic Fourier modes ``e_i(rho) = exp(i tau_i rho) / sqrt(2 L_rho)``, so the
transform is an isometry: ``sum |c|^2 = ||f||_2^2`` on the resolved band.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grids import GAUSS_HERMITE, GridSpec, dft_rho
from .hermite import hermite_table, multi_indices


class BudgetError(ValueError):
    """Raised when a requested Hermite truncation exceeds the table budget."""


#: Largest number of multi-indices a spectrum may carry.
SPECTRUM_BUDGET = 20_000


def default_max_degree(dim: int) -> int:
    return 40 if dim == 1 else 24


@lru_cache(maxsize=32)
def _index_array(dim: int, max_degree: int) -> np.ndarray:
    mus = multi_indices(dim, max_degree)
    if len(mus) > SPECTRUM_BUDGET:
        raise BudgetError(f"{len(mus)} multi-indices exceed the budget {SPECTRUM_BUDGET}")
    arr = np.array(mus, dtype=int).reshape(len(mus), dim)
    arr.setflags(write=False)
    return arr


@lru_cache(maxsize=32)
def _basis(spec: GridSpec, max_degree: int) -> np.ndarray:
    table = hermite_table(max_degree, spec.x)
    table.setflags(write=False)
    return table


@dataclass
class GridFunction:
    """Samples of ``f(rho, x)`` on the tensor grid of ``spec``."""

    spec: GridSpec
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.spec.shape:
            raise ValueError(f"values have shape {self.values.shape}, grid expects {self.spec.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function has non-finite values")

    @classmethod
    def from_callable(cls, spec: GridSpec, func) -> "GridFunction":
        """Sample ``func(rho, x1, ..., xd)`` on the grid (broadcast coordinates)."""
        return cls(spec, func(*spec.coordinates()))

    def __add__(self, other):
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other):
        return GridFunction(self.spec, self.values - other.values)

    def __rmul__(self, scalar):
        return GridFunction(self.spec, scalar * self.values)

    def lp_norm(self, p: float = 2.0) -> float:
        return lp_norm(self.values, self.spec, p)

    def to_csv(self) -> str:
        """CSV text with header ``rho,x1[,x2...],re,im`` in row-major grid order."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d = self.spec.dim
        writer.writerow(["rho"] + [f"x{j + 1}" for j in range(d)] + ["re", "im"])
        coords = [c.ravel() for c in self.spec.coordinates()]
        vals = self.values.ravel()
        for row in range(vals.size):
            writer.writerow([repr(float(c[row])) for c in coords]
                            + [repr(float(vals[row].real)), repr(float(vals[row].imag))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, spec: GridSpec, text: str, atol: float = 1e-9) -> "GridFunction":
        """Parse CSV written by :meth:`to_csv`; coordinates must match ``spec``."""
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        expected = ["rho"] + [f"x{j + 1}" for j in range(spec.dim)] + ["re", "im"]
        if header != expected:
            raise ValueError(f"CSV header {header} does not match {expected}")
        rows = np.array([[float(v) for v in row] for row in reader if row])
        size = int(np.prod(spec.shape))
        if rows.shape != (size, spec.dim + 3):
            raise ValueError(f"CSV has {rows.shape[0]} rows, grid needs {size}")
        coords = np.stack([c.ravel() for c in spec.coordinates()], axis=1)
        if np.max(np.abs(rows[:, : spec.dim + 1] - coords)) > atol:
            raise ValueError("CSV coordinates do not match the configured grid")
        values = (rows[:, -2] + 1j * rows[:, -1]).reshape(spec.shape)
        return cls(spec, values)


def lp_norm(values, spec: GridSpec, p: float = 2.0) -> float:
    """``(int |f|^p dz)^{1/p}`` with the rho rectangle rule and the x rule.

    Gauss-Hermite x-nodes only integrate Gaussian-weighted polynomials, so
    they are accepted for ``p = 2`` only.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if spec.x_rule == GAUSS_HERMITE and p != 2:
        raise ValueError("L^p norms with p != 2 need the uniform-trapezoid x rule")
    a = np.abs(np.asarray(values))
    return float(np.sum(spec.volume_weights() * a ** p) ** (1.0 / p))


@dataclass
class MixedSpectrum:
    """Coefficients ``c(i, mu)`` over tau-bins ``i`` and ``|mu| <= max_degree``.

    ``coeffs`` has shape ``(rho_points, n_mu)``; column ``j`` belongs to
    ``multi_indices[j]``, ordered by degree.
    """

    spec: GridSpec
    max_degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        n_mu = len(self.multi_indices)
        if self.coeffs.shape != (self.spec.rho_points, n_mu):
            raise ValueError(f"coefficients have shape {self.coeffs.shape}, "
                             f"expected {(self.spec.rho_points, n_mu)}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("spectrum has non-finite coefficients")

    @classmethod
    def zeros(cls, spec: GridSpec, max_degree: int) -> "MixedSpectrum":
        n_mu = len(_index_array(spec.dim, max_degree))
        return cls(spec, max_degree, np.zeros((spec.rho_points, n_mu), dtype=complex))

    @property
    def multi_indices(self) -> np.ndarray:
        return _index_array(self.spec.dim, self.max_degree)

    @property
    def degrees(self) -> np.ndarray:
        return self.multi_indices.sum(axis=1)

    @property
    def tau(self) -> np.ndarray:
        return self.spec.tau

    def eigenvalues(self) -> np.ndarray:
        """``lambda(tau_i, |mu|) = tau_i^2 + 2|mu| + d`` on the coefficient layout."""
        return eigenvalues(self.spec, self.max_degree)

    def index_of(self, mu) -> int:
        mu = tuple(int(m) for m in mu)
        matches = np.nonzero((self.multi_indices == mu).all(axis=1))[0]
        if not len(matches):
            raise KeyError(f"multi-index {mu} is outside the truncation K={self.max_degree}")
        return int(matches[0])

    def bin_index(self, tau_bin: int) -> int:
        i = int(tau_bin) + self.spec.rho_points // 2
        if not 0 <= i < self.spec.rho_points:
            raise KeyError(f"tau bin {tau_bin} outside the grid")
        return i

    def with_coeffs(self, coeffs) -> "MixedSpectrum":
        return MixedSpectrum(self.spec, self.max_degree, coeffs)

    def __add__(self, other):
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __rmul__(self, scalar):
        return self.with_coeffs(scalar * self.coeffs)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def inner(self, other) -> complex:
        """``<self, other>``, linear in the first argument."""
        return complex(np.sum(self.coeffs * np.conj(other.coeffs)))

    def to_csv(self) -> str:
        """CSV with header ``tau_bin,mu_1..mu_d,re,im``; zero entries are kept."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        d = self.spec.dim
        writer.writerow(["tau_bin"] + [f"mu_{j + 1}" for j in range(d)] + ["re", "im"])
        for i, tau_bin in enumerate(self.spec.tau_bins):
            for j, mu in enumerate(self.multi_indices):
                c = self.coeffs[i, j]
                writer.writerow([int(tau_bin)] + [int(m) for m in mu]
                                + [repr(float(c.real)), repr(float(c.imag))])
        return buf.getvalue()


@lru_cache(maxsize=32)
def _eigenvalues(spec: GridSpec, max_degree: int) -> np.ndarray:
    degrees = _index_array(spec.dim, max_degree).sum(axis=1)
    lam = spec.tau[:, None] ** 2 + 2.0 * degrees[None, :] + spec.dim
    lam.setflags(write=False)
    return lam


def eigenvalues(spec: GridSpec, max_degree: int) -> np.ndarray:
    return _eigenvalues(spec, max_degree)


def analyze(f: GridFunction, max_degree: int | None = None) -> MixedSpectrum:
    """Mixed coefficients of ``f`` through Hermite degree ``max_degree``."""
    spec = f.spec
    if max_degree is None:
        max_degree = default_max_degree(spec.dim)
    idx = _index_array(spec.dim, max_degree)
    weighted = _basis(spec, max_degree) * spec.x_weights
    g = dft_rho(f.values, "forward") * math.sqrt(spec.rho_step)
    for _ in range(spec.dim):
        g = np.tensordot(g, weighted, axes=([1], [1]))
    coeffs = g[(slice(None),) + tuple(idx.T)]
    return MixedSpectrum(spec, max_degree, coeffs)


def synthesize_coeffs(spec: GridSpec, max_degree: int, coeffs) -> np.ndarray:
    """Grid values for a stack of coefficient arrays.

    ``coeffs`` has shape ``(..., rho_points, n_mu)``; the result has shape
    ``(...) + spec.shape``.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    batch = coeffs.shape[:-2]
    flat = coeffs.reshape((-1,) + coeffs.shape[-2:])
    idx = _index_array(spec.dim, max_degree)
    full = np.zeros(flat.shape[:2] + (max_degree + 1,) * spec.dim, dtype=complex)
    full[(slice(None), slice(None)) + tuple(idx.T)] = flat
    table = _basis(spec, max_degree)
    for _ in range(spec.dim):
        full = np.tensordot(full, table, axes=([2], [0]))
    values = dft_rho(full / math.sqrt(spec.rho_step), "inverse", axis=1)
    return values.reshape(batch + spec.shape)


def synthesize(s: MixedSpectrum) -> GridFunction:
    """Grid function with mixed coefficients ``s``."""
    return GridFunction(s.spec, synthesize_coeffs(s.spec, s.max_degree, s.coeffs))


def apply_hpar(s: MixedSpectrum) -> MixedSpectrum:
    """``H_par`` on the spectral side: multiply by ``tau^2 + 2|mu| + d``."""
    return s.with_coeffs(s.coeffs * s.eigenvalues())


def plancherel_defect(f: GridFunction, max_degree: int | None = None) -> float:
    """Relative energy not captured by the truncated mixed spectrum."""
    energy = f.lp_norm(2) ** 2
    if energy == 0:
        raise ValueError("Plancherel defect is undefined for f = 0")
    captured = analyze(f, max_degree).norm() ** 2
    return abs(energy - captured) / energy
