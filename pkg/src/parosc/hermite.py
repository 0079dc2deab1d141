"""Hermite functions, spectral projection kernels and the Mehler formula.

The normalized Hermite functions are generated by the three-term recurrence

    h_{k+1}(x) = x sqrt(2/(k+1)) h_k(x) - sqrt(k/(k+1)) h_{k-1}(x),
    h_0(x) = pi^{-1/4} exp(-x^2/2),

which never forms the (overflowing) Hermite polynomial itself.  Multi-indices
are plain tuples of nonnegative integers; ``degree(mu)`` is ``sum(mu)``.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping, Sequence

import numpy as np

#: Largest Hermite index accepted by the evaluators.
MAX_DEGREE = 2000

#: Default budget for the number of multi-indices enumerated in one shell.
SHELL_BUDGET = 10_000

#: Exponent magnitude above which kernel values are assembled in log space.
LOG_SPACE_THRESHOLD = 600.0

PI_QUARTER = math.pi ** -0.25


class ShellBudgetError(ValueError):
    """Raised when a degree shell has more multi-indices than allowed."""


def _check_degree(k, max_degree=MAX_DEGREE):
    if k < 0:
        raise ValueError(f"Hermite index must be nonnegative, got {k}")
    if k > max_degree:
        raise ValueError(f"Hermite index {k} exceeds the configured maximum {max_degree}")


def hermite_table(max_degree: int, x) -> np.ndarray:
    """Values ``h_k(x)`` for ``0 <= k <= max_degree``.

    Parameters
    ----------
    max_degree : int
        Highest index K.
    x : array_like
        Evaluation points (any shape).

    Returns
    -------
    ndarray
        Array of shape ``(K + 1,) + x.shape``.
    """
    _check_degree(max_degree)
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any():
        raise ValueError("NaN in Hermite evaluation points")
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = PI_QUARTER * np.exp(-0.5 * x * x)
    if max_degree >= 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, max_degree):
        out[k + 1] = (x * math.sqrt(2.0 / (k + 1)) * out[k]
                      - math.sqrt(k / (k + 1)) * out[k - 1])
    return out


def eval_hermite_1d(k: int, x, max_degree: int = MAX_DEGREE):
    """Normalized Hermite function ``h_k(x)``."""
    _check_degree(k, max_degree)
    value = hermite_table(k, x)[k]
    return float(value) if value.ndim == 0 else value


def degree(mu: Sequence[int]) -> int:
    return int(sum(mu))


def shell(d: int, k: int, budget: int = SHELL_BUDGET) -> list[tuple[int, ...]]:
    """All multi-indices of length ``d`` with ``|mu| = k``, in lexicographic
    descending order of the first entry."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if k < 0:
        return []
    size = math.comb(k + d - 1, d - 1)
    if size > budget:
        raise ShellBudgetError(
            f"shell |mu|={k} in d={d} has {size} terms, budget is {budget}")
    if d == 1:
        return [(k,)]
    out = []
    for first in range(k, -1, -1):
        for rest in shell(d - 1, k - first, budget):
            out.append((first,) + rest)
    return out


def multi_indices(d: int, max_degree: int, budget: int = SHELL_BUDGET) -> list[tuple[int, ...]]:
    """Multi-indices with ``|mu| <= max_degree`` ordered by degree."""
    return list(itertools.chain.from_iterable(
        shell(d, k, budget) for k in range(max_degree + 1)))


def eval_hermite_nd(mu: Sequence[int], x) -> float:
    """Tensor Hermite function ``Phi_mu(x) = prod_j h_{mu_j}(x_j)``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(mu) != x.shape[-1]:
        raise ValueError(f"multi-index has length {len(mu)} but point has dimension {x.shape[-1]}")
    if any(m < 0 for m in mu):
        raise ValueError("multi-index entries must be nonnegative")
    value = 1.0
    for m, xj in zip(mu, x.T):
        value = value * eval_hermite_1d(m, xj)
    return value


def creation_apply(j: int, coeffs: Mapping[tuple, complex],
                   max_degree: int = MAX_DEGREE) -> dict[tuple, complex]:
    """Apply ``A_j = -d/dx_j + x_j`` to a Hermite expansion.

    ``coeffs`` maps multi-indices to coefficients; ``j`` is the 1-based axis
    number, matching the coordinate ``x_j``.  Uses
    ``A_j Phi_mu = sqrt(2 (mu_j + 1)) Phi_{mu + e_j}``.
    """
    out: dict[tuple, complex] = {}
    for mu, c in coeffs.items():
        if not 1 <= j <= len(mu):
            raise ValueError(f"axis {j} out of range for multi-index {mu}")
        mj = mu[j - 1]
        _check_degree(mj + 1, max_degree)
        nu = mu[:j - 1] + (mj + 1,) + mu[j:]
        out[nu] = out.get(nu, 0.0) + math.sqrt(2.0 * (mj + 1)) * c
    return out


def _axis_tables(max_degree, x, x_prime):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    if x.shape[-1] != x_prime.shape[-1]:
        raise ValueError("x and x_prime have different dimensions")
    ha = hermite_table(max_degree, x)
    hb = hermite_table(max_degree, x_prime)
    return x.shape[-1], ha, hb


def projection_kernel(k: int, x, x_prime, budget: int = SHELL_BUDGET) -> float:
    """Kernel ``Phi_k(x, x') = sum_{|mu|=k} Phi_mu(x) Phi_mu(x')`` of ``P_k``."""
    d, ha, hb = _axis_tables(k, x, x_prime)
    total = 0.0
    for mu in shell(d, k, budget):
        term = 1.0
        for axis, m in enumerate(mu):
            term *= ha[m, axis] * hb[m, axis]
        total += term
    return float(total)


def projection_kernels(max_degree: int, x, x_prime) -> np.ndarray:
    """``Phi_k(x, x')`` for ``k = 0..max_degree`` with ``x'`` vectorized.

    ``x`` is a single point of dimension d; ``x_prime`` has shape ``(..., d)``.
    The shell sums are assembled by discrete convolution of the per-axis
    products, so no shell is enumerated explicitly.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.asarray(x_prime, dtype=float)
    if x.shape[0] == 1 and (x_prime.ndim == 0 or x_prime.shape[-1] != 1):
        x_prime = x_prime[..., None]
    if x_prime.shape[-1] != x.shape[0]:
        raise ValueError("x and x_prime have different dimensions")
    ha = hermite_table(max_degree, x)  # (K+1, d)
    hb = hermite_table(max_degree, x_prime)  # (K+1, ..., d)
    prods = ha[(slice(None),) + (None,) * (hb.ndim - 2) + (slice(None),)] * hb
    out = prods[..., 0]
    for axis in range(1, x.shape[0]):
        nxt = prods[..., axis]
        acc = np.zeros_like(out)
        for m in range(max_degree + 1):
            acc[m:] += out[m] * nxt[:max_degree + 1 - m]
        out = acc
    return out


def mehler_closed_form(r: float, x, x_prime, log: bool = False) -> float:
    """Closed form of ``sum_k r^k Phi_k(x, x')`` for ``0 < r < 1``.

    With ``log=True`` the natural logarithm of the (positive) value is
    returned, which stays finite where the value itself underflows.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"Mehler parameter must lie in (0, 1), got {r}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x_prime = np.atleast_1d(np.asarray(x_prime, dtype=float))
    d = x.shape[-1]
    one_minus = 1.0 - r * r
    exponent = (-0.5 * (1.0 + r * r) / one_minus * (np.sum(x * x, -1) + np.sum(x_prime * x_prime, -1))
                + 2.0 * r * np.sum(x * x_prime, -1) / one_minus)
    log_value = -0.5 * d * math.log(math.pi) - 0.5 * d * math.log(one_minus) + exponent
    if log:
        return log_value
    return np.exp(log_value)


def mehler_series(r: float, x, x_prime, max_degree: int = 60) -> float:
    """Truncated series ``sum_{k<=K} r^k Phi_k(x, x')``."""
    kernels = projection_kernels(max_degree, x, x_prime)
    powers = r ** np.arange(max_degree + 1)
    return np.tensordot(powers, kernels, axes=1)


def heat_trace_constant(d: int) -> float:
    """The constant C in ``int sum_mu e^{-t(2|mu|+d)} Phi_mu^2 = C sinh(t)^{-d}``.

    Derived value ``2^{-d}``.
    """
    return 2.0 ** -d


def diagonal_heat_trace(t: float, d: int) -> float:
    """Exact ``sum_mu e^{-t(2|mu|+d)} = (2 sinh t)^{-d}``."""
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    # (2 sinh t)^{-1} = e^{-t} / (1 - e^{-2t}), stable for large t
    return (math.exp(-t) / -math.expm1(-2.0 * t)) ** d


def weighted_diagonal_sum(t: float, x, max_degree: int | None = None) -> float:
    """``sum_mu e^{-t|mu|} Phi_mu(x)^2`` by per-axis series.

    The sum factorizes over axes; each axis series is truncated where
    ``e^{-tK}`` falls below 1e-17 unless ``max_degree`` is given.
    """
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if max_degree is None:
        max_degree = min(MAX_DEGREE, int(math.ceil(40.0 / t)) + 10)
    table = hermite_table(max_degree, x)
    weights = np.exp(-t * np.arange(max_degree + 1))
    per_axis = np.tensordot(weights, table * table, axes=1)
    return float(np.prod(per_axis))
