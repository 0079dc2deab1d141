"""Sampling grids and quadrature rules.

The rho-axis is a uniform periodic grid ``rho_n = -L + n h`` (``h = 2L/N``)
with frequencies ``tau_i = pi i / L`` for ``i in [-N/2, N/2)``.  The x-axes use
either a uniform grid with trapezoid weights or Gauss-Hermite nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hermite import PI_QUARTER

UNIFORM = "uniform-trapezoid"
GAUSS_HERMITE = "gauss-hermite"
X_RULES = (UNIFORM, GAUSS_HERMITE)


class QuadratureError(RuntimeError):
    """Raised when a quadrature rule cannot be constructed."""


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights of a one-dimensional rule.

    For Gauss-Hermite rules the weights belong to the weight function
    ``exp(-x^2)``; ``lebesgue_weights`` holds ``w_i exp(x_i^2)`` computed
    without overflow, so that ``sum(lebesgue_weights * g(nodes))``
    approximates ``int g dx`` for ``g`` of the form polynomial times
    ``exp(-x^2)``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int
    lebesgue_weights: np.ndarray | None = None

    def integrate(self, values) -> float:
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def _normalized_poly(n, z):
    """Return ``(p_n(z), p_{n-1}(z))`` of the normalized recurrence without the
    Gaussian factor."""
    p1, p2 = PI_QUARTER, 0.0
    for j in range(n):
        p3, p2 = p2, p1
        p1 = z * math.sqrt(2.0 / (j + 1)) * p2 - math.sqrt(j / (j + 1)) * p3
    return p1, p2


def _newton(n, z, lo, hi, max_iter):
    """Newton iteration on p_n; with a sign-change bracket ``[lo, hi]`` the
    iterate falls back to bisection whenever it leaves the bracket."""
    sign_lo = None if lo is None else math.copysign(1.0, _normalized_poly(n, lo)[0])
    for _ in range(max_iter):
        p, q = _normalized_poly(n, z)
        if p == 0.0:
            return z
        if lo is not None:
            if math.copysign(1.0, p) == sign_lo:
                lo = z
            else:
                hi = z
        z_new = z - p / (math.sqrt(2.0 * n) * q)
        if lo is not None and not lo < z_new < hi:
            z_new = 0.5 * (lo + hi)
        if abs(z_new - z) <= 1e-14 * max(1.0, abs(z)):
            for _ in range(2):  # polish after a possible bisection exit
                p, q = _normalized_poly(n, z_new)
                if p != 0.0:
                    z_new -= p / (math.sqrt(2.0 * n) * q)
            return z_new
        z = z_new
    raise QuadratureError(f"Newton iteration for a root of H_{n} did not converge")


def gauss_hermite_rule(n: int, max_iter: int = 200) -> QuadratureRule:
    """Gauss-Hermite rule with ``n`` nodes for the weight ``exp(-x^2)``.

    Roots of the degree-n Hermite polynomial are found by Newton iteration on
    the normalized recurrence, largest first.  The largest root starts from
    the usual asymptotic guess ``sqrt(2n+1) - 1.85575 (2n+1)^{-1/6}``; each
    following root is bracketed by stepping down from its predecessor in
    quarters of the previous spacing, which cannot skip a root because the
    spacing shrinks toward the origin.  Weights use ``w = 2 / (p'_n)^2`` with
    ``p'_n = sqrt(2n) p_{n-1}``.
    """
    if not 1 <= n <= 256:
        raise ValueError(f"number of Gauss-Hermite nodes must be in [1, 256], got {n}")
    m = (n + 1) // 2
    roots = np.zeros(m)
    weights = np.zeros(m)
    for i in range(m):
        if n == 1:
            z = 0.0
        elif i == 0:
            guess = math.sqrt(2 * n + 1) - 1.85575 * (2 * n + 1) ** (-1.0 / 6.0)
            z = _newton(n, guess, None, None, max_iter)
        else:
            spacing = roots[i - 2] - roots[i - 1] if i >= 2 else 1.14 * n ** 0.426 / roots[0]
            delta = 0.25 * spacing
            hi = roots[i - 1] - 0.125 * delta
            sign = math.copysign(1.0, _normalized_poly(n, hi)[0])
            lo = hi - delta
            while math.copysign(1.0, _normalized_poly(n, lo)[0]) == sign:
                if lo < -spacing:
                    raise QuadratureError(f"lost track of the roots of H_{n}")
                hi, lo = lo, lo - delta
            z = _newton(n, 0.5 * (lo + hi), lo, hi, max_iter)
        _, q = _normalized_poly(n, z)
        roots[i] = z
        weights[i] = 2.0 / (2.0 * n * q * q)
    if n % 2:
        roots[-1] = 0.0
    nodes = np.empty(n)
    w = np.empty(n)
    nodes[:m], nodes[n - m:] = -roots, roots[::-1]
    w[:m], w[n - m:] = weights, weights[::-1]
    # w e^{x^2} = 1 / (n h_{n-1}(x)^2) with Hermite *functions*: no overflow
    h_prev = np.array([_hermite_function_pair(n, z)[1] for z in nodes])
    lebesgue = 1.0 / (n * h_prev * h_prev)
    return QuadratureRule(nodes, w, 2 * n - 1, lebesgue)


def _hermite_function_pair(n, z):
    h1, h2 = PI_QUARTER * math.exp(-0.5 * z * z), 0.0
    for j in range(n):
        h3, h2 = h2, h1
        h1 = z * math.sqrt(2.0 / (j + 1)) * h2 - math.sqrt(j / (j + 1)) * h3
    return h1, h2


def trapezoid_rule(halfwidth: float, points: int) -> QuadratureRule:
    """Uniform nodes on ``[-L, L]`` (endpoints included) with trapezoid weights."""
    if halfwidth <= 0 or points < 2:
        raise ValueError("trapezoid rule needs a positive halfwidth and at least 2 points")
    nodes = np.linspace(-halfwidth, halfwidth, points)
    h = nodes[1] - nodes[0]
    weights = np.full(points, h)
    weights[0] = weights[-1] = 0.5 * h
    return QuadratureRule(nodes, weights, 1, weights)


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid: periodic rho-axis times ``dim`` identical x-axes.

    Defaults resolve Hermite functions through degree 40 with boundary tails
    below 1e-12 (``h_40`` turns at ``x = 9``).
    """

    rho_halfwidth: float = 16.0
    rho_points: int = 256
    x_halfwidth: float = 14.0
    x_points: int = 160
    dim: int = 1
    x_rule: str = UNIFORM

    def __post_init__(self):
        if self.rho_points < 2 or self.rho_points % 2:
            raise ValueError(f"rho_points must be even and >= 2, got {self.rho_points}")
        if self.rho_halfwidth <= 0 or self.x_halfwidth <= 0:
            raise ValueError("grid halfwidths must be positive")
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        if self.x_rule not in X_RULES:
            raise ValueError(f"unknown x rule {self.x_rule!r}; expected one of {X_RULES}")
        if self.x_rule == GAUSS_HERMITE and not 1 <= self.x_points <= 256:
            raise ValueError("Gauss-Hermite grids support 1..256 points per axis")

    @property
    def rho_step(self) -> float:
        return 2.0 * self.rho_halfwidth / self.rho_points

    @cached_property
    def rho(self) -> np.ndarray:
        return -self.rho_halfwidth + self.rho_step * np.arange(self.rho_points)

    @cached_property
    def tau_bins(self) -> np.ndarray:
        n = self.rho_points
        return np.arange(-n // 2, n // 2)

    @cached_property
    def tau(self) -> np.ndarray:
        return math.pi * self.tau_bins / self.rho_halfwidth

    @cached_property
    def x_quadrature(self) -> QuadratureRule:
        if self.x_rule == GAUSS_HERMITE:
            return gauss_hermite_rule(self.x_points)
        return trapezoid_rule(self.x_halfwidth, self.x_points)

    @property
    def x(self) -> np.ndarray:
        return self.x_quadrature.nodes

    @property
    def x_weights(self) -> np.ndarray:
        """Lebesgue-measure weights for x-integrals on this grid."""
        return self.x_quadrature.lebesgue_weights

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.rho_points,) + (len(self.x),) * self.dim

    def volume_weights(self) -> np.ndarray:
        """Product weights ``h_rho * w_x1 * ... * w_xd`` over the tensor grid."""
        w = np.full(self.rho_points, self.rho_step)
        for _ in range(self.dim):
            w = np.multiply.outer(w, self.x_weights)
        return w

    def coordinates(self) -> list[np.ndarray]:
        """Broadcast-ready coordinate arrays ``[rho, x1, ..., xd]``."""
        return list(np.meshgrid(self.rho, *([self.x] * self.dim), indexing="ij"))

    def to_config(self) -> dict[str, str]:
        return {
            "grid.rho_halfwidth": repr(float(self.rho_halfwidth)),
            "grid.rho_points": str(self.rho_points),
            "grid.x_halfwidth": repr(float(self.x_halfwidth)),
            "grid.x_points": str(self.x_points),
            "grid.dim": str(self.dim),
            "grid.x_rule": self.x_rule,
        }

    @classmethod
    def from_config(cls, items: dict[str, str]) -> "GridSpec":
        kwargs = {}
        casts = {"rho_halfwidth": float, "rho_points": int, "x_halfwidth": float,
                 "x_points": int, "dim": int, "x_rule": str}
        for key, value in items.items():
            if not key.startswith("grid."):
                continue
            name = key[len("grid."):]
            if name not in casts:
                raise KeyError(f"unknown grid key {key!r}")
            kwargs[name] = casts[name](value)
        return cls(**kwargs)


def dft_rho(values, direction: str = "forward", axis: int = 0) -> np.ndarray:
    """Unitary DFT along the rho-axis with centered frequency ordering.

    ``forward`` computes ``N^{-1/2} sum_n v_n exp(-i tau_i rho_n)`` for
    ``i = -N/2 .. N/2-1`` on the grid ``rho_n = -L + n h``; since
    ``tau_i rho_n = 2 pi i n / N - pi i`` the result is independent of ``L``.
    ``inverse`` is its exact inverse.
    """
    v = np.asarray(values, dtype=complex)
    n = v.shape[axis]
    if n % 2:
        raise ValueError(f"rho length must be even, got {n}")
    sign = np.where(np.arange(-n // 2, n // 2) % 2, -1.0, 1.0)
    shape = [1] * v.ndim
    shape[axis] = n
    sign = sign.reshape(shape)
    if direction == "forward":
        return np.fft.fftshift(np.fft.fft(v, axis=axis, norm="ortho"), axes=axis) * sign
    if direction == "inverse":
        return np.fft.ifft(np.fft.ifftshift(v * sign, axes=axis), axis=axis, norm="ortho")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
