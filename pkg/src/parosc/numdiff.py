"""Richardson-extrapolated central finite differences."""

from __future__ import annotations

import math

import numpy as np


def central_weights(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets (in units of the step) and weights of the centered N-th difference.

    ``sum_j w_j f(x + o_j h) / h^N`` approximates ``f^{(N)}(x)`` with an error
    expansion in even powers of ``h``.
    """
    j = np.arange(order + 1)
    offsets = order / 2.0 - j
    weights = np.array([(-1) ** int(k) * math.comb(order, int(k)) for k in j], dtype=float)
    return offsets, weights


def _floating(v):
    v = np.asarray(v)
    return v if np.issubdtype(v.dtype, np.floating) else v.astype(float)


def richardson_derivative(func, x, order: int, step, levels: int = 3):
    """``order``-th derivative of ``func`` at ``x``.

    ``func`` must accept an array of abscissae broadcast against ``x`` and
    ``step`` (which may be arrays of matching shape).  Central differences at
    steps ``h, h/2, ..., h/2^(levels-1)`` are combined by Richardson
    extrapolation in ``h^2``.  Arithmetic follows the dtype of ``x`` (pass
    ``np.longdouble`` for extra digits).
    """
    if order == 0:
        return func(_floating(x))
    # keep extended precision (np.longdouble) when the caller supplies it
    x = _floating(x)
    step = _floating(step)
    offsets, weights = central_weights(order)
    table = []
    for level in range(levels):
        h = step / 2 ** level
        acc = 0.0
        for o, w in zip(offsets, weights):
            if w:
                acc = acc + w * func(x + o * h)
        table.append(acc / h ** order)
    for k in range(1, levels):
        factor = x.dtype.type(4.0) ** k
        table = [(factor * table[i + 1] - table[i]) / (factor - 1.0)
                 for i in range(len(table) - 1)]
    return table[0]
