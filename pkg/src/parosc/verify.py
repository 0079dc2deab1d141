"""Invariant suites run by ``parosc verify``.

Each suite returns a list of :class:`Check` records (measured value against a
tolerance).  Suites draw all randomness from the seed they are given.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hermite, kernels, squarefn, symbols
from .families import random_band_limited
from .grids import GridSpec, gauss_hermite_rule
from .numdiff import richardson_derivative
from .transform import GridFunction, analyze, apply_hpar, plancherel_defect, synthesize


@dataclass
class Check:
    suite: str
    name: str
    measured: float
    tolerance: float
    passed: bool
    relation: str = "<"

    def row(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.suite:<13} {self.name:<44} {self.measured:.3e} {self.relation} {self.tolerance:.1e}"


def _check(suite, name, measured, tolerance, relation="<"):
    measured = float(measured)
    if relation == "<":
        ok = measured < tolerance
    elif relation == ">=":
        ok = measured >= tolerance
    else:
        raise ValueError(relation)
    return Check(suite, name, measured, tolerance, bool(ok and math.isfinite(measured)), relation)


# ---------------------------------------------------------------------------


def suite_orthonormality(seed: int = 0, spec: GridSpec | None = None, max_degree: int = 40):
    spec = spec or GridSpec()
    table = hermite.hermite_table(max_degree, spec.x)
    gram = (table * spec.x_weights) @ table.T
    out = [_check("orthonormality", f"Gram defect K={max_degree} (grid)",
                  np.max(np.abs(gram - np.eye(max_degree + 1))), 1e-10)]
    rule = gauss_hermite_rule(64)
    table = hermite.hermite_table(60, rule.nodes)
    gram = (table * rule.lebesgue_weights) @ table.T
    out.append(_check("orthonormality", "Gram defect K=60 (Gauss-Hermite 64)",
                      np.max(np.abs(gram - np.eye(61))), 1e-12))
    return out


def ball_points(rng, count, d, radius):
    """Uniform samples of the ball ``|x| <= radius`` in ``R^d``."""
    v = rng.standard_normal((count, d))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    return v * radius * rng.uniform(0.0, 1.0, (count, 1)) ** (1.0 / d)


def mehler_errors(seed: int, d: int, r: float, pairs: int = 100, max_degree: int = 60,
                  radius: float = 2.0, absolute: bool = False) -> np.ndarray:
    """Relative (or absolute) errors of the truncated Mehler series at
    uniform pairs with ``|x|, |x'| <= radius``."""
    rng = np.random.default_rng([seed, d, int(1000 * r)])
    x = ball_points(rng, pairs, d, radius)
    xp = ball_points(rng, pairs, d, radius)
    errs = np.empty(pairs)
    for i in range(pairs):
        series = hermite.mehler_series(r, x[i], xp[i][None, :], max_degree)[0]
        closed = hermite.mehler_closed_form(r, x[i], xp[i])
        errs[i] = abs(series - closed) / (1.0 if absolute else abs(closed))
    return errs


def suite_mehler(seed: int = 0):
    out = []
    for d in (1, 2):
        for r in (0.3, 0.5, 0.7):
            err = mehler_errors(seed, d, r).max()
            out.append(_check("mehler", f"series vs closed form d={d} r={r}", err, 1e-8))
    # informational: the absolute error sits at the truncation level r^{K+1}
    for d in (1, 2):
        err = mehler_errors(seed, d, 0.7, absolute=True).max()
        out.append(_check("mehler", f"absolute error d={d} r=0.7 vs 10 r^61", err, 10 * 0.7 ** 61))
    return out


def heat_kernel_errors(seed: int, t: float, d: int = 1, pairs: int = 50, box: float = 3.0,
                       max_degree: int = 120) -> np.ndarray:
    rng = np.random.default_rng([seed, d, int(1000 * t)])
    z = rng.uniform(-box, box, (pairs, d + 1))
    zp = rng.uniform(-box, box, (pairs, d + 1))
    errs = np.empty(pairs)
    for i in range(pairs):
        closed = kernels.heat_kernel(t, z[i], zp[i])
        spectral = kernels.heat_kernel_spectral(t, z[i], zp[i][None, :], max_degree)[0]
        errs[i] = abs(closed - spectral) / closed
    return errs


def semigroup_defect(t: float = 0.5, s: float = 0.5, seed: int = 0, pairs: int = 5,
                     box: float = 12.0, points: int = 241) -> float:
    """Max relative defect of ``int K(t,z,w) K(s,w,z') dw = K(t+s,z,z')`` (d=1)."""
    rng = np.random.default_rng([seed, 17])
    axis = np.linspace(-box, box, points)
    h = axis[1] - axis[0]
    w1 = np.full(points, h)
    w1[[0, -1]] *= 0.5
    wgrid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1)
    weights = np.multiply.outer(w1, w1)
    worst = 0.0
    for _ in range(pairs):
        z = rng.uniform(-1.5, 1.5, 2)
        zp = rng.uniform(-1.5, 1.5, 2)
        lhs = np.sum(weights * kernels.heat_kernel(t, z, wgrid) * kernels.heat_kernel(s, wgrid, zp))
        rhs = kernels.heat_kernel(t + s, z, zp)
        worst = max(worst, abs(lhs - rhs) / rhs)
    return worst


def suite_heat_kernel(seed: int = 0):
    out = []
    for t in (0.3, 0.5, 1.0):
        out.append(_check("heat-kernel", f"closed form vs spectral sum t={t}",
                          heat_kernel_errors(seed, t).max(), 1e-6))
    out.append(_check("heat-kernel", "semigroup defect t=s=0.5", semigroup_defect(seed=seed), 1e-5))
    return out


def hpar_stencil(values: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Second-order finite differences for ``H_par`` on a uniform grid.

    rho is periodic; x-boundaries use zero values outside the box, so the
    result is meaningful where the function has decayed.
    """
    h_rho = spec.rho_step
    h_x = spec.x[1] - spec.x[0]
    out = -(np.roll(values, 1, 0) - 2.0 * values + np.roll(values, -1, 0)) / h_rho ** 2
    coords = spec.coordinates()
    for axis in range(1, spec.dim + 1):
        padded = np.pad(values, [(1, 1) if a == axis else (0, 0) for a in range(values.ndim)])
        lo = padded.take(range(0, values.shape[axis]), axis=axis)
        hi = padded.take(range(2, values.shape[axis] + 2), axis=axis)
        out = out - (lo - 2.0 * values + hi) / h_x ** 2 + coords[axis] ** 2 * values
    return out


def hpar_stencil_order(seed: int = 0) -> tuple[float, float, float]:
    """Errors of the stencil at steps h and h/2 against the spectral ``H_par f``
    for a smooth packet, and the observed order ``log2(e_h / e_{h/2})``."""
    errors = []
    rng = np.random.default_rng([seed, 23])
    center, freq = rng.uniform(-1, 1), rng.uniform(-1, 1)
    for scale in (1, 2):
        spec = GridSpec(rho_halfwidth=16.0, rho_points=64 * scale, x_halfwidth=10.0,
                        x_points=40 * scale + 1)

        def f(rho, x):
            return (np.exp(-((rho - center) ** 2) / 4.0 + 1j * freq * rho)
                    * (1.0 + x) * np.exp(-0.5 * x * x))

        g = GridFunction.from_callable(spec, f)
        exact = synthesize(apply_hpar(analyze(g, 30))).values
        approx = hpar_stencil(g.values, spec)
        errors.append(float(np.max(np.abs(approx - exact)) / np.max(np.abs(exact))))
    return errors[0], errors[1], math.log2(errors[0] / errors[1])


def suite_plancherel(seed: int = 0):
    spec = GridSpec(rho_halfwidth=16.0, rho_points=128, x_halfwidth=14.0, x_points=160)
    out = []
    worst_def = worst_rt = 0.0
    for s in random_band_limited(spec, 5, seed, tau_band=20, degree_band=30, max_degree=40):
        f = synthesize(s)
        worst_def = max(worst_def, plancherel_defect(f, 40))
        back = analyze(f, 40)
        worst_rt = max(worst_rt, np.max(np.abs(back.coeffs - s.coeffs)) / np.max(np.abs(s.coeffs)))
    out.append(_check("plancherel", "Plancherel defect (band-limited)", worst_def, 1e-8))
    out.append(_check("plancherel", "analyze(synthesize(c)) - c", worst_rt, 1e-10))
    _, _, order = hpar_stencil_order(seed)
    out.append(_check("plancherel", "H_par stencil observed order", order, 1.8, ">="))
    return out


def g_identity_ratios(order: int, d: int, count: int = 20, seed: int = 0) -> list[float]:
    if d == 1:
        spec = GridSpec(rho_halfwidth=8.0, rho_points=64, x_halfwidth=10.0, x_points=64)
    else:
        spec = GridSpec(rho_halfwidth=8.0, rho_points=32, x_points=24, dim=2, x_rule="gauss-hermite")
    ratios = []
    for s in random_band_limited(spec, count, seed, tau_band=4, degree_band=6):
        g = squarefn.g_function(order, s)
        ratios.append(g.l2_norm() ** 2 / synthesize(s).lp_norm(2) ** 2)
    return ratios


def suite_g_identity(seed: int = 0, count: int = 20, orders=(1, 2, 3), dims=(1, 2)):
    out = []
    for d in dims:
        for n in orders:
            target = squarefn.gamma_constant(n)
            ratios = np.array(g_identity_ratios(n, d, count, seed))
            err = np.max(np.abs(ratios / target - 1.0))
            out.append(_check("g-identity", f"|g_N f|^2/|f|^2 vs {target:g} N={n} d={d}", err, 1e-2))
    return out


def polylog_errors(seed: int = 0, samples: int = 20, orders=range(0, 6)) -> dict:
    """Max relative errors of coth/tanh closed forms against Richardson
    differences, at log-uniform t in [0.1, 3]."""
    rng = np.random.default_rng([seed, 31])
    t = np.exp(rng.uniform(math.log(0.1), math.log(3.0), samples))
    # the oracle runs in extended precision: 80-bit long double where available
    t_ext = t.astype(np.longdouble)
    out = {}
    for n in orders:
        for name, closed, func, step in (
                ("tanh", kernels.tanh_derivative, np.tanh, 0.12 * np.ones_like(t_ext)),
                # coth has a pole at 0: keep the stencil inside (0, 2t)
                ("coth", kernels.coth_derivative, lambda s: 1.0 / np.tanh(s),
                 0.12 * np.minimum(t_ext, 1.0))):
            exact = closed(n, t)
            fd = richardson_derivative(func, t_ext, n, step, levels=4) if n else func(t_ext)
            out[(name, n)] = float(np.max(np.abs(fd.astype(float) - exact) / np.abs(exact)))
    return out


def suite_polylog(seed: int = 0):
    out = []
    for (name, n), err in polylog_errors(seed).items():
        out.append(_check("polylog", f"d^{n}/dt^{n} {name} vs Richardson", err, 1e-6))
    exact = max(abs(kernels.polylog_neg(0, 0.5) - 1.0), abs(kernels.polylog_neg(1, 0.5) - 2.0),
                abs(kernels.polylog_neg(0, -1.0) + 0.5), abs(kernels.polylog_neg(1, -1.0) + 0.25))
    out.append(_check("polylog", "Li_0, Li_-1 rational values", exact, 1e-15))
    return out


def kernel_bound_growth(order: int, seed: int = 0, base: int = 2500) -> tuple[float, float]:
    small = kernels.verify_kernel_bound(order, base, seed=seed).max_ratio
    large = kernels.verify_kernel_bound(order, 4 * base, seed=seed).max_ratio
    return small, large


def mt_pointwise_growth(order: int, symbol, seed: int = 0, base: int = 500, d: int = 1,
                        t_range=(0.1, 5.0), z_range: float = 6.0) -> tuple[float, float]:
    small = kernels.verify_mt_pointwise_bound(order, base, symbol, t_range, z_range, d, seed)
    large = kernels.verify_mt_pointwise_bound(order, 4 * base, symbol, t_range, z_range, d, seed)
    return small.max_ratio, large.max_ratio


def mt_integral_samples(order: int, count: int, symbol, seed: int = 0, d: int = 1,
                        t_range=(0.1, 5.0), z_range: float = 6.0) -> kernels.IntegralBoundReport:
    """Integral bound at ``count`` Latin-hypercube ``(t, z)`` samples.

    The box quadrature needs a common x-coordinate, so for ``d > 1`` every
    x-component of ``z`` is set to the first one.
    """
    t, z, _ = kernels.sample_kernel_points(count, d, t_range, z_range, seed)
    z[:, 2:] = z[:, 1:2]
    entries = []
    for ti, zi in zip(t, z):
        entries.extend(kernels.verify_mt_integral_bound(order, [ti], [zi], symbol, d=d).entries)
    ratios = [e["ratio"] for e in entries]
    return kernels.IntegralBoundReport("multiplier_kernel_integral", order, d, entries,
                                       max(ratios), min(ratios),
                                       max(e["weighted_ratio"] for e in entries))


def mt_integral_growth(order: int, symbol, seed: int = 0, base: int = 6, d: int = 1,
                       **kwargs) -> tuple[float, float]:
    small = mt_integral_samples(order, base, symbol, seed, d, **kwargs)
    large = mt_integral_samples(order, 4 * base, symbol, seed, d, **kwargs)
    return (max(small.max_ratio, small.max_weighted_ratio),
            max(large.max_ratio, large.max_weighted_ratio))


def suite_bounds(seed: int = 0):
    out = []
    sym = symbols.imaginary_power_symbol(1.0)
    for n in (0, 1, 2):
        small, large = kernel_bound_growth(n, seed)
        out.append(_check("bounds", f"heat kernel N={n}: sup ratio growth x4 samples",
                          large / small, 2.0))
        small, large = mt_pointwise_growth(n, sym, seed)
        out.append(_check("bounds", f"M_t pointwise N={n}: sup ratio growth x4 samples",
                          large / small, 2.0))
        small, large = mt_integral_growth(n, sym, seed)
        out.append(_check("bounds", f"M_t integral N={n}: sup ratio growth x4 samples",
                          large / small, 2.0))
    return out


def suite_lp_blocks(seed: int = 0):
    s = np.geomspace(1.0, 1e6, 20001)
    total = sum(symbols.normalized_block_value(j, s) ** 2 for j in range(61))
    out = [_check("lp-blocks", "normalized partition defect (j <= 60)", np.max(np.abs(total - 1.0)), 1e-10)]
    overlap = [abs(j - k) >= 2 and symbols.block_supports_overlap(j, k, symbols.RAW_SUPPORT)
               for j in range(12) for k in range(12)]
    out.append(_check("lp-blocks", "raw blocks |j-j'|>=2 overlapping pairs", sum(overlap), 0.5))
    spec = GridSpec(rho_halfwidth=8.0, rho_points=64, x_halfwidth=10.0, x_points=64)
    fam = random_band_limited(spec, 4, seed, tau_band=6, degree_band=10, max_degree=20)
    err = max(abs(squarefn.lp_ratio(s_, 2.0) - 1.0) for s_ in fam)
    out.append(_check("lp-blocks", "p=2 square function / norm - 1", err, 1e-6))
    return out


SUITES = {
    "orthonormality": suite_orthonormality,
    "mehler": suite_mehler,
    "heat-kernel": suite_heat_kernel,
    "plancherel": suite_plancherel,
    "g-identity": suite_g_identity,
    "polylog": suite_polylog,
    "bounds": suite_bounds,
    "lp-blocks": suite_lp_blocks,
}


def run_suite(name: str, seed: int = 0) -> list[Check]:
    if name == "all":
        return [c for suite in SUITES.values() for c in suite(seed=seed)]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}")
    return SUITES[name](seed=seed)

