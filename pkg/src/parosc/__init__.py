"""Spectral calculus of the partial harmonic oscillator ``-d^2/drho^2 - Delta_x + |x|^2``.

Modules
-------
hermite    Hermite functions, Mehler kernel, projection kernels.
grids      Tensor grids and quadrature rules on ``R x R^d``.
transform  Mixed Fourier-Hermite transform and its inverse.
kernels    Heat kernel, time derivatives, polylogarithm closed forms, kernel bounds.
symbols    Spectral multipliers, Littlewood-Paley blocks, Mikhlin certificates.
squarefn   Square functions ``g_N`` and ``g*_N`` and empirical probes.
cli        Command-line driver.
"""

__version__ = "0.1.0"

from .grids import GridSpec  # noqa: E402
from .transform import GridFunction, MixedSpectrum, analyze, synthesize  # noqa: E402
from .kernels import heat_kernel, heat_kernel_time_derivative, polylog_neg  # noqa: E402
from .symbols import Symbol, certify, parse_symbol  # noqa: E402
from .squarefn import g_function, g_star_function  # noqa: E402

__all__ = [
    "GridSpec", "GridFunction", "MixedSpectrum", "analyze", "synthesize",
    "heat_kernel", "heat_kernel_time_derivative", "polylog_neg",
    "Symbol", "certify", "parse_symbol", "g_function", "g_star_function",
]
