"""Heat-semigroup square functions ``g_N`` and ``g*_N`` and the probes built on them.

    g_N(f)(z)^2  = int_0^inf |d_t^N e^{-tH} f(z)|^2 t^{2N-1} dt
    g*_N(f)(z)^2 = int_0^inf int t^{1-(d+1)/2} (1 + |z'-z|^2/t)^{-N}
                   |d_t e^{-tH} f(z')|^2 dz' dt

Time derivatives are exact on the spectral side: ``d_t^N e^{-tH}`` multiplies
coefficients by ``(-lam)^N e^{-t lam}``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import gamma as gamma_fn

from .grids import UNIFORM
from .symbols import (COVER_SUPPORT, Symbol, apply_symbol, block_span, lp_block)
from .transform import (GridFunction, MixedSpectrum, analyze, lp_norm, synthesize,
                        synthesize_coeffs)


class CalibrationError(RuntimeError):
    """Raised when a time quadrature misses the Gamma-integral identity."""


class SpatialTailError(RuntimeError):
    """Raised when the grid box cuts off too much of a g* integrand."""


def gamma_constant(order: int) -> float:
    """``2^{-2N} Gamma(2N) = int_0^inf lam^{2N} e^{-2 t lam} t^{2N-1} dt``."""
    return float(gamma_fn(2 * order)) / 4.0 ** order


@dataclass(frozen=True)
class TimeQuadrature:
    """Trapezoid rule in ``u = log t`` on ``[t_min, t_max]``.

    For integrands analytic in ``u`` and negligible at both ends the rule
    converges geometrically in the node count.
    """

    t_min: float = 1e-4
    t_max: float = 30.0
    count: int = 200

    def __post_init__(self):
        if not 0 < self.t_min < self.t_max or self.count < 2:
            raise ValueError("time quadrature needs 0 < t_min < t_max and >= 2 nodes")

    @property
    def nodes(self) -> np.ndarray:
        return np.geomspace(self.t_min, self.t_max, self.count)

    @property
    def weights(self) -> np.ndarray:
        du = math.log(self.t_max / self.t_min) / (self.count - 1)
        w = du * self.nodes
        w[[0, -1]] *= 0.5
        return w

    @classmethod
    def for_band(cls, lam_min: float, lam_max: float, order=1, count: int = 200,
                 tol: float = 1e-9) -> "TimeQuadrature":
        """Range that resolves ``lam^{2N} e^{-2t lam} t^{2N-1}`` for
        ``lam in [lam_min, lam_max]`` with end losses below ``tol``.

        ``order`` may be a sequence; the range then covers every order.

        The lower cut loses ``(lam t_min)^{2N} / (2N)``; the upper one is set
        where ``e^{-2 t lam_min}`` falls below ``tol`` times the integrand's
        polynomial growth.
        """
        if not 0 < lam_min <= lam_max:
            raise ValueError("need 0 < lam_min <= lam_max")
        orders = [max(int(n), 1) for n in np.atleast_1d(order)]
        t_min = min((tol * 2 * n * gamma_constant(n)) ** (1.0 / (2 * n)) for n in orders) / lam_max
        t_max = max(-math.log(tol) + 8.0 * n for n in orders) / (2.0 * lam_min)
        return cls(t_min, t_max, count)

    def gamma_integral(self, order: int, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=float)
        t = self.nodes
        integrand = (np.multiply.outer(lam, np.ones_like(t)) ** (2 * order)
                     * np.exp(-2.0 * np.multiply.outer(lam, t)) * t ** (2 * order - 1))
        return integrand @ self.weights

    def calibration_error(self, order: int, lam_min: float, lam_max: float, samples: int = 64) -> float:
        """Max relative error of the Gamma integral over log-spaced ``lam``."""
        lam = np.geomspace(lam_min, lam_max, samples)
        return float(np.max(np.abs(self.gamma_integral(order, lam) / gamma_constant(order) - 1.0)))

    def require(self, order: int, lam_min: float, lam_max: float, tol: float = 1e-6) -> None:
        err = self.calibration_error(order, lam_min, lam_max)
        if not err <= tol:
            raise CalibrationError(
                f"time quadrature [{self.t_min:g}, {self.t_max:g}] x {self.count} misses the "
                f"N={order} Gamma identity by {err:.2e} on lambda in [{lam_min:g}, {lam_max:g}]")


def spectral_band(s: MixedSpectrum, rtol: float = 0.0) -> tuple[float, float]:
    """``(lam_min, lam_max)`` over coefficients with ``|c| > rtol * max|c|``."""
    mag = np.abs(s.coeffs)
    top = mag.max()
    if top == 0:
        d = s.spec.dim
        return float(d), float(d)
    lam = s.eigenvalues()[mag > rtol * top]
    return float(lam.min()), float(lam.max())


def _quadrature_for(s, order, q):
    lam_min, lam_max = spectral_band(s)
    if q is None:
        q = TimeQuadrature.for_band(lam_min, lam_max, order)
    q.require(order, lam_min, lam_max)
    return q


@dataclass
class GProfile:
    """Nonnegative square-function values over the grid."""

    which: str
    N: int
    values: np.ndarray
    quadrature: TimeQuadrature
    spec: object = None

    def l2_norm(self) -> float:
        return lp_norm(self.values, self.spec, 2.0)

    def to_csv(self) -> str:
        """CSV with header ``rho,x1[,x2],value``."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rho"] + [f"x{j + 1}" for j in range(self.spec.dim)] + ["value"])
        coords = [c.ravel() for c in self.spec.coordinates()]
        for row, v in enumerate(self.values.ravel()):
            writer.writerow([repr(float(c[row])) for c in coords] + [repr(float(v))])
        return buf.getvalue()


def heat_time_derivative_coeffs(order: int, t, s: MixedSpectrum) -> np.ndarray:
    """Coefficients of ``d_t^N e^{-tH} f`` for each ``t`` (leading axis)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("t must be positive")
    lam = s.eigenvalues()
    factor = (-lam) ** order * np.exp(-np.multiply.outer(t, lam))
    return factor * s.coeffs


def heat_time_derivative_field(order: int, t: float, s: MixedSpectrum) -> GridFunction:
    """``d_t^N e^{-tH} f`` on the grid, by exact spectral differentiation."""
    coeffs = heat_time_derivative_coeffs(order, t, s)[0]
    return GridFunction(s.spec, synthesize_coeffs(s.spec, s.max_degree, coeffs))


def _time_fields(order, s, q, chunk=16):
    """Yield ``(t, w, field)`` blocks over the quadrature nodes."""
    nodes, weights = q.nodes, q.weights
    for start in range(0, len(nodes), chunk):
        t = nodes[start:start + chunk]
        coeffs = heat_time_derivative_coeffs(order, t, s)
        yield t, weights[start:start + chunk], synthesize_coeffs(s.spec, s.max_degree, coeffs)


def _as_spectrum(f, max_degree):
    if isinstance(f, MixedSpectrum):
        return f
    return analyze(f, max_degree)


def g_function(order: int, f, q: TimeQuadrature | None = None,
               max_degree: int | None = None) -> GProfile:
    """Pointwise ``g_N(f)`` on the grid.

    ``f`` is a :class:`GridFunction` or a :class:`MixedSpectrum`.  Without
    ``q`` the time range is fitted to the spectrum of ``f``; a supplied ``q``
    must pass the Gamma-integral calibration on that spectrum.
    """
    if order < 1:
        raise ValueError("g_N needs N >= 1")
    s = _as_spectrum(f, max_degree)
    q = _quadrature_for(s, order, q)
    acc = np.zeros(s.spec.shape)
    for t, w, fields in _time_fields(order, s, q):
        scale = w * t ** (2 * order - 1)
        acc += np.tensordot(scale, np.abs(fields) ** 2, axes=1)
    return GProfile("g_N", order, np.sqrt(acc), q, s.spec)


def _offset_weight(spec, t, order):
    """``(1 + |Delta|^2/t)^{-N}`` on all grid offsets, centered."""
    h_rho = spec.rho_step
    h_x = spec.x[1] - spec.x[0]
    n_rho, n_x = spec.rho_points, len(spec.x)
    axes = [h_rho * np.arange(-(n_rho - 1), n_rho)] + [h_x * np.arange(-(n_x - 1), n_x)] * spec.dim
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    dist2 = sum(g * g for g in grids)
    return (1.0 + dist2 / t) ** (-order)


def _edge_mask(spec, fraction=0.05):
    n_rho, n_x = spec.rho_points, len(spec.x)
    m_rho = max(1, int(round(fraction * n_rho)))
    m_x = max(1, int(round(fraction * n_x)))
    mask = np.zeros(spec.shape, dtype=bool)
    mask[:m_rho] = mask[-m_rho:] = True
    for axis in range(1, spec.dim + 1):
        idx = [slice(None)] * (spec.dim + 1)
        idx[axis] = slice(0, m_x)
        mask[tuple(idx)] = True
        idx[axis] = slice(n_x - m_x, n_x)
        mask[tuple(idx)] = True
    return mask


def g_star_function(order: int, f, q: TimeQuadrature | None = None,
                    max_degree: int | None = None, tail_tol: float = 1e-4) -> GProfile:
    """Pointwise ``g*_N(f)`` on a uniform grid.

    The ``z'``-integral is a discrete convolution of ``|d_t e^{-tH} f|^2``
    (trapezoid weights) with the offset weight, evaluated by FFT.  The rho
    box is treated as non-periodic; mass of the integrand within 5% of any
    box face, relative to the total, must stay below ``tail_tol``.
    """
    s = _as_spectrum(f, max_degree)
    spec = s.spec
    if spec.x_rule != UNIFORM:
        raise ValueError("g* needs the uniform-trapezoid x rule")
    q = _quadrature_for(s, 1, q)
    d = spec.dim
    vol = spec.volume_weights()
    edge = _edge_mask(spec)
    acc = np.zeros(spec.shape)
    total = edge_mass = 0.0
    n_rho, n_x = spec.rho_points, len(spec.x)
    crop = (slice(n_rho - 1, 2 * n_rho - 1),) + (slice(n_x - 1, 2 * n_x - 1),) * d
    for t_block, w_block, fields in _time_fields(1, s, q):
        for t, w, field_t in zip(t_block, w_block, fields):
            dens = vol * np.abs(field_t) ** 2
            mass = float(dens.sum())
            if mass == 0.0:
                continue
            total += w * t ** (1.0 - (d + 1) / 2.0) * mass
            edge_mass += w * t ** (1.0 - (d + 1) / 2.0) * float(dens[edge].sum())
            conv = fftconvolve(dens, _offset_weight(spec, t, order), mode="full")[crop]
            acc += w * t ** (1.0 - (d + 1) / 2.0) * np.maximum(conv, 0.0)
    if total > 0 and edge_mass / total > tail_tol:
        raise SpatialTailError(f"{edge_mass / total:.2e} of the g* integrand lies at the box faces")
    return GProfile("g_star_N", order, np.sqrt(acc), q, spec)


# ---------------------------------------------------------------------------
# probes


@dataclass
class ProbeReport:
    probe: str
    parameters: dict
    results: dict
    passed: bool
    seed: int
    family: str
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["pass"] = out.pop("passed")
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def domination_ratio(order: int, sym: Symbol, f: GridFunction, max_degree: int | None = None,
                     threshold: float = 1e-10) -> float:
    """``sup_z g_{N+1}(T_m f)(z) / g*_N(f)(z)`` over ``z`` with a non-negligible
    denominator."""
    s = analyze(f, max_degree)
    lam_min, lam_max = spectral_band(s)
    q = TimeQuadrature.for_band(lam_min, lam_max, (1, order + 1))
    top = g_function(order + 1, apply_symbol(s, sym), q).values
    bottom = g_star_function(order, s, q).values
    mask = bottom >= threshold * bottom.max()
    if not mask.any():
        raise ValueError("degenerate input: g* vanishes")
    return float(np.max(top[mask] / bottom[mask]))


def pointwise_domination_probe(order: int, sym: Symbol, family, seed: int = 0,
                               family_name: str = "packet", max_degree: int | None = None,
                               stability_tol: float = 0.2) -> ProbeReport:
    """Empirical constant ``C`` in ``g_{N+1}(T_m f) <= C g*_N(f)``.

    ``family`` is a list of grid functions; the constant over the first half
    is compared with the constant over the whole list (a doubling).
    """
    family = list(family)
    if len(family) < 2:
        raise ValueError("the probe needs at least two family members")
    ratios = [domination_ratio(order, sym, f, max_degree) for f in family]
    half = len(family) // 2
    c_half, c_full = max(ratios[:half]), max(ratios)
    change = abs(c_full - c_half) / c_half
    results = {"constant_half": c_half, "constant": c_full, "relative_change": change,
               "ratios": ratios}
    return ProbeReport("domination", {"N": order, "symbol": sym.name, "d": sym.dim,
                                      "members": len(family)},
                       results, bool(np.isfinite(c_full) and change <= stability_tol),
                       seed, family_name)


def lp_blocks_for(s: MixedSpectrum, normalized: bool = True) -> list[Symbol]:
    """Blocks ``j = 0..J`` covering the spectrum of ``s``."""
    s_max = math.sqrt(float(np.max(s.eigenvalues())))
    return [lp_block(j, s.spec.dim, normalized) for j in range(block_span(s_max, COVER_SUPPORT) + 1)]


def square_function(s: MixedSpectrum, blocks=None) -> np.ndarray:
    """``(sum_j |Delta_j f|^2)^{1/2}`` on the grid."""
    blocks = lp_blocks_for(s) if blocks is None else blocks
    acc = np.zeros(s.spec.shape)
    for b in blocks:
        acc += np.abs(synthesize(apply_symbol(s, b)).values) ** 2
    return np.sqrt(acc)


def lp_ratio(s: MixedSpectrum, p: float, blocks=None) -> float:
    """``||S f||_p / ||f||_p`` for ``f`` synthesized from ``s``."""
    f = synthesize(s).values
    return lp_norm(square_function(s, blocks), s.spec, p) / lp_norm(f, s.spec, p)


def lp_equivalence_probe(family, p_list=(1.5, 2.0, 3.0), seed: int = 0, family_name: str = "random",
                         normalized: bool = True, p2_tol: float = 1e-6,
                         stability_tol: float = 0.25) -> ProbeReport:
    """Ranges ``[c1, c2]`` of ``||S f||_p / ||f||_p`` over a family of spectra.

    The first half of ``family`` is compared with the whole family; every
    endpoint may move by at most ``stability_tol`` (relative).  At ``p = 2``
    with normalized blocks the ratio must be 1 within ``p2_tol``.
    """
    family = list(family)
    if len(family) < 2:
        raise ValueError("the probe needs at least two family members")
    half = len(family) // 2
    results = {}
    passed = True
    notes = []
    for p in p_list:
        ratios = [lp_ratio(s, p, lp_blocks_for(s, normalized)) for s in family]
        lo_h, hi_h = min(ratios[:half]), max(ratios[:half])
        lo, hi = min(ratios), max(ratios)
        change = max(abs(lo - lo_h) / lo_h, abs(hi - hi_h) / hi_h)
        key = repr(float(p))
        results[key] = {"c1": lo, "c2": hi, "c1_half": lo_h, "c2_half": hi_h,
                        "relative_change": change}
        if change > stability_tol:
            passed = False
            notes.append(f"p={p}: band moved by {change:.1%} under doubling")
        if p == 2.0 and normalized and max(abs(lo - 1.0), abs(hi - 1.0)) > p2_tol:
            passed = False
            notes.append(f"p=2 ratio deviates from 1 by {max(abs(lo - 1), abs(hi - 1)):.2e}")
    return ProbeReport("lp-equivalence", {"p": [float(p) for p in p_list], "normalized": normalized,
                                          "members": len(family)},
                       results, passed, seed, family_name, notes)
