"""Symbols ``m(tau, k)``, Mikhlin-type certification and Littlewood-Paley blocks.

A symbol acts on mixed spectra by ``c(i, mu) -> m(tau_i, |mu|) c(i, mu)``.
Evaluators are vectorized: they receive broadcastable arrays ``tau`` (real)
and ``k`` (nonnegative integers) and return complex arrays.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .numdiff import richardson_derivative
from .transform import MixedSpectrum

#: Support of the raw Littlewood-Paley bump.
RAW_SUPPORT = (3.0 / 8.0, 3.0 / 4.0)
#: Support of the covering bump behind the square-normalized family.
COVER_SUPPORT = (1.0 / 3.0, 3.0 / 4.0)


def default_order(d: int) -> int:
    """Highest certified order ``floor((d+1)/2) + 1``."""
    return (d + 1) // 2 + 1


def eigenvalue(tau, k, d):
    return np.asarray(tau, dtype=float) ** 2 + 2.0 * np.asarray(k, dtype=float) + d


@dataclass(frozen=True)
class Symbol:
    """Immutable multiplier ``m(tau, k)``.

    Parameters
    ----------
    name : str
        Registry name (round-trips through :func:`parse_symbol` for built-ins).
    evaluator : callable
        ``evaluator(tau, k) -> complex array``.
    dim : int
        Dimension d of the x-variable.
    tau_derivative : callable, optional
        ``tau_derivative(n, tau, k)``, the n-th tau-derivative, ``n >= 1``.
    max_tau_order : int
        Highest order ``tau_derivative`` supports.
    """

    name: str
    evaluator: Callable
    dim: int = 1
    tau_derivative: Callable | None = None
    max_tau_order: int = 0

    def __call__(self, tau, k):
        tau = np.asarray(tau, dtype=float)
        k = np.asarray(k)
        value = np.asarray(self.evaluator(tau, k), dtype=complex)
        return np.broadcast_to(value, np.broadcast_shapes(tau.shape, k.shape, value.shape))

    def d_tau(self, order: int, tau, k, analytic: bool = True):
        """``d^n m / d tau^n``; analytic when available, else Richardson."""
        if order == 0:
            return self(tau, k)
        tau = np.asarray(tau, dtype=float)
        if analytic and self.tau_derivative is not None and order <= self.max_tau_order:
            return np.asarray(self.tau_derivative(order, tau, k), dtype=complex)
        lam = eigenvalue(tau, k, self.dim)
        step = 0.05 * np.sqrt(lam)
        return richardson_derivative(lambda s: self(s, k), tau, order, step, levels=4)


def lambda_symbol(name: str, func, dim: int, max_tau_order: int = 8) -> Symbol:
    """Symbol given by ``func(n, lam, k) = d^n/d lam^n F(lam, k)``.

    tau-derivatives follow from ``lam = tau^2 + 2k + d`` through
    ``d^N/dtau^N F = sum_j N!/(j! (N-2j)!) (2 tau)^{N-2j} F^{(N-j)}``.
    """

    def evaluator(tau, k):
        return func(0, eigenvalue(tau, k, dim), k)

    def tau_derivative(order, tau, k):
        lam = eigenvalue(tau, k, dim)
        total = 0.0
        for j in range(order // 2 + 1):
            coeff = math.factorial(order) / (math.factorial(j) * math.factorial(order - 2 * j))
            total = total + coeff * (2.0 * tau) ** (order - 2 * j) * func(order - j, lam, k)
        return total

    return Symbol(name, evaluator, dim, tau_derivative, max_tau_order)


def _falling(a, n):
    out = 1.0
    for j in range(n):
        out = out * (a - j)
    return out


def one_symbol(dim: int = 1) -> Symbol:
    return lambda_symbol("one", lambda n, lam, k: np.ones_like(lam) if n == 0 else np.zeros_like(lam), dim)


def heat_symbol(t: float, dim: int = 1) -> Symbol:
    """``exp(-t lam)``."""
    if t < 0:
        raise ValueError("heat symbol needs t >= 0")
    return lambda_symbol(f"heat:t={t!r}", lambda n, lam, k: (-t) ** n * np.exp(-t * lam), dim)


def imaginary_power_symbol(gamma: float, dim: int = 1) -> Symbol:
    """``lam^{i gamma}``."""
    a = 1j * gamma
    return lambda_symbol(f"imaginary-power:gamma={gamma!r}",
                         lambda n, lam, k: _falling(a, n) * lam ** (a - n), dim)


def riesz_like_symbol(theta: float, dim: int = 1) -> Symbol:
    """``(tau^2 + theta (2k + d)) / lam``, i.e. ``1 - (1 - theta)(2k + d) / lam``.

    ``theta = 0`` gives the rho-Riesz square ``tau^2 / lam``, ``theta = 1``
    the identity.
    """

    def func(n, lam, k):
        a = (1.0 - theta) * (2.0 * np.asarray(k, dtype=float) + dim)
        term = -a * (-1) ** n * math.factorial(n) / lam ** (n + 1)
        return 1.0 + term if n == 0 else term

    return lambda_symbol(f"riesz-like:theta={theta!r}", func, dim)


# ---------------------------------------------------------------------------
# Littlewood-Paley blocks


def bump(s, support=RAW_SUPPORT):
    """``e * exp(-1/(1-u^2))`` with ``u`` mapping ``support`` onto ``(-1, 1)``.

    Smooth, supported in ``support``, peak value 1 at the midpoint.
    """
    a, b = support
    s = np.asarray(s, dtype=float)
    u = (2.0 * s - (a + b)) / (b - a)
    inside = np.abs(u) < 1.0
    safe = np.where(inside, u, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe * safe)), 0.0)


def block_span(s_max: float, support=COVER_SUPPORT) -> int:
    """Smallest ``J`` with ``2^J support[0] > s_max`` (blocks beyond vanish)."""
    return max(0, int(math.ceil(math.log2(max(s_max, 1e-300) / support[0]))) + 1)


def partition_sum(s, j_max: int = 60, support=COVER_SUPPORT):
    """``sum_{0 <= j <= j_max} bump(2^{-j} s)^2``."""
    s = np.asarray(s, dtype=float)
    return sum(bump(s / 2.0 ** j, support) ** 2 for j in range(j_max + 1))


def normalized_block_value(j: int, s, j_max: int = 60):
    """Square-normalized block ``psi_j(s) = b(2^{-j}s) / sqrt(sum_i b(2^{-i}s)^2)``.

    Built from the covering bump on ``[1/3, 3/4]``, whose dilates overlap so
    the denominator is positive for ``s > 1/3``.
    """
    s = np.asarray(s, dtype=float)
    denom = np.sqrt(partition_sum(s, j_max))
    num = bump(s / 2.0 ** j, COVER_SUPPORT)
    return np.where(denom > 0, num / np.where(denom > 0, denom, 1.0), 0.0)


def lp_block(j: int, dim: int = 1, normalized: bool = False) -> Symbol:
    """Block ``m_j(tau, k) = b(2^{-j} sqrt(tau^2 + 2k + d))``.

    The raw block uses the bump on ``[3/8, 3/4]``; ``normalized=True`` gives
    the square-normalized member of the covering family.
    """
    if j < 0:
        raise ValueError("block index must be nonnegative")

    def evaluator(tau, k):
        s = np.sqrt(eigenvalue(tau, k, dim))
        if normalized:
            return normalized_block_value(j, s)
        return bump(s / 2.0 ** j)

    name = f"lp-block:j={j}" + (",normalized=1" if normalized else "")
    return Symbol(name, evaluator, dim)


def block_supports_overlap(j: int, j_prime: int, support=RAW_SUPPORT) -> bool:
    """Whether the open supports ``2^j support`` and ``2^{j'} support`` meet."""
    a = (2.0 ** j * support[0], 2.0 ** j * support[1])
    b = (2.0 ** j_prime * support[0], 2.0 ** j_prime * support[1])
    return max(a[0], b[0]) < min(a[1], b[1])


# ---------------------------------------------------------------------------
# tabulated symbols


def tabulated_symbol(text: str, dim: int = 1, name: str = "csv") -> Symbol:
    """Symbol from CSV rows ``tau,k,re,im`` (header required).

    Nearest-sample semantics: the nearest tabulated ``k`` is chosen first
    (ties to the smaller k), then the nearest ``tau`` within that row set
    (ties to the smaller tau).
    """
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    if header != ["tau", "k", "re", "im"]:
        raise ValueError(f"symbol CSV header must be tau,k,re,im, got {header}")
    rows = np.array([[float(v) for v in row] for row in reader if row])
    if rows.size == 0:
        raise ValueError("symbol CSV has no rows")
    if not np.all(np.isfinite(rows)):
        raise ValueError("symbol CSV has non-finite entries")
    ks = np.unique(rows[:, 1].astype(int))
    table = {}
    for k in ks:
        sel = rows[rows[:, 1].astype(int) == k]
        order = np.argsort(sel[:, 0], kind="stable")
        table[int(k)] = (sel[order, 0], sel[order, 2] + 1j * sel[order, 3])

    def nearest(grid, v):
        i = np.clip(np.searchsorted(grid, v), 1, len(grid) - 1) if len(grid) > 1 else np.zeros_like(v, dtype=int)
        if len(grid) == 1:
            return i
        left = grid[i - 1]
        right = grid[i]
        return np.where(np.abs(v - left) <= np.abs(right - v), i - 1, i)

    def evaluator(tau, k):
        tau, k = np.broadcast_arrays(np.asarray(tau, dtype=float), np.asarray(k))
        k_idx = nearest(ks.astype(float), k.astype(float))
        out = np.empty(tau.shape, dtype=complex)
        for idx in np.unique(k_idx):
            taus, vals = table[int(ks[idx])]
            mask = k_idx == idx
            out[mask] = vals[nearest(taus, tau[mask])]
        return out

    return Symbol(name, evaluator, dim)


def _parse_params(text: str) -> dict[str, str]:
    params = {}
    if not text:
        return params
    for item in text.split(","):
        if "=" not in item:
            raise ValueError(f"symbol parameter {item!r} is not key=value")
        key, value = item.split("=", 1)
        params[key.strip()] = value.strip()
    return params


def parse_symbol(spec: str, dim: int = 1) -> Symbol:
    """Resolve a registry string such as ``"heat:t=0.5"``.

    Known names: ``one``, ``heat:t=``, ``imaginary-power:gamma=``,
    ``lp-block:j=[,normalized=1]``, ``riesz-like:theta=`` and
    ``csv:<path>`` for tabulated symbols.
    """
    name, _, rest = spec.partition(":")
    name = name.strip()
    if name == "csv":
        if not rest:
            raise ValueError("csv symbol needs a path: csv:<path>")
        with open(rest, encoding="utf-8") as fh:
            return tabulated_symbol(fh.read(), dim, spec)
    params = _parse_params(rest)

    def need(key, cast=float):
        if key not in params:
            raise ValueError(f"symbol {name!r} needs parameter {key!r}")
        try:
            return cast(params.pop(key))
        except ValueError as exc:
            raise ValueError(f"bad value for {key!r} in {spec!r}") from exc

    if name == "one":
        sym = one_symbol(dim)
    elif name == "heat":
        sym = heat_symbol(need("t"), dim)
    elif name == "imaginary-power":
        sym = imaginary_power_symbol(need("gamma"), dim)
    elif name == "riesz-like":
        sym = riesz_like_symbol(need("theta"), dim)
    elif name == "lp-block":
        j = need("j", int)
        normalized = bool(int(params.pop("normalized", "0")))
        sym = lp_block(j, dim, normalized)
    else:
        raise ValueError(f"unknown symbol {name!r}")
    if params:
        raise ValueError(f"unexpected parameters {sorted(params)} for symbol {name!r}")
    return sym


REGISTRY_EXAMPLES = ("one", "heat:t=0.5", "imaginary-power:gamma=1.0",
                     "riesz-like:theta=0.5", "lp-block:j=3")


# ---------------------------------------------------------------------------
# finite differences


def _seq(seq):
    if callable(seq):
        return seq
    return lambda k: seq[k]


def forward_difference(seq, order: int, k: int):
    """``Delta^N m(k) = sum_j (-1)^{N-j} C(N, j) m(k + j)``.

    ``seq`` is a callable or an indexable; missing entries raise.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    f = _seq(seq)
    total = 0.0
    for j in range(order + 1):
        try:
            v = f(k + j)
        except (IndexError, KeyError) as exc:
            raise ValueError(f"sequence undefined at k={k + j}") from exc
        if v is None:
            raise ValueError(f"sequence undefined at k={k + j}")
        total = total + (-1) ** (order - j) * math.comb(order, j) * v
    return total


def difference_leibniz_check(f, g, h, order: int, k: int) -> float:
    """Absolute defect of the three-factor Leibniz rule for forward differences."""
    ff, gg, hh = _seq(f), _seq(g), _seq(h)
    lhs = forward_difference(lambda i: ff(i) * gg(i) * hh(i), order, k)
    rhs = 0.0
    for m1 in range(order + 1):
        for m2 in range(order - m1 + 1):
            m3 = order - m1 - m2
            c = math.factorial(order) // (math.factorial(m1) * math.factorial(m2) * math.factorial(m3))
            rhs = rhs + (c * forward_difference(ff, m1, k) * forward_difference(gg, m2, k + m1)
                         * forward_difference(hh, m3, k + m1 + m2))
    return float(abs(lhs - rhs))


# ---------------------------------------------------------------------------
# certification


@dataclass
class MikhlinCertificate:
    """Sampled constants ``C_tau[N] = sup |d_tau^N m| lam^{N/2}`` and
    ``C_k[N] = sup |Delta_k^N m| lam^N``.

    Empirical suprema over a recorded domain and seed; not a proof.  A
    constant is reported as ``inf`` when it is non-finite or more than doubles
    on the 4x dilated domain.
    """

    symbol: str
    d: int
    N_max: int
    C_tau: list
    C_k: list
    tau_range: list
    k_max: int
    samples: int
    seed: int
    derivative_check: float | None
    passed: bool
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["C_tau"] = [_json_number(c) for c in self.C_tau]
        out["C_k"] = [_json_number(c) for c in self.C_k]
        out["pass"] = out.pop("passed")
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _json_number(c):
    return c if math.isfinite(c) else "inf"


def _constants(sym, tau, k, n_max, analytic):
    lam_tau = eigenvalue(tau, k, sym.dim)
    c_tau = []
    for n in range(n_max + 1):
        vals = np.abs(sym.d_tau(n, tau, k, analytic)) * lam_tau ** (n / 2.0)
        c_tau.append(float(np.max(vals)) if np.all(np.isfinite(vals)) else math.inf)
    c_k = []
    for n in range(n_max + 1):
        diff = sum((-1) ** (n - j) * math.comb(n, j) * sym(tau, k + j) for j in range(n + 1))
        vals = np.abs(diff) * eigenvalue(tau, k, sym.dim) ** n
        c_k.append(float(np.max(vals)) if np.all(np.isfinite(vals)) else math.inf)
    return c_tau, c_k


def _samples(tau_range, k_hi, samples, seed):
    u = qmc.LatinHypercube(d=2, seed=np.random.default_rng(seed)).random(samples)
    tau = tau_range[0] + (tau_range[1] - tau_range[0]) * u[:, 0]
    k = np.floor(u[:, 1] * (k_hi + 1)).astype(int)
    # always include the spectral bottom, where Mikhlin constants tend to peak
    tau = np.concatenate([tau, [0.0]])
    k = np.concatenate([k, [0]])
    return tau, k


def certify(sym: Symbol, tau_range=(-64.0, 64.0), k_max: int = 256, samples: int = 4096,
            seed: int = 0, n_max: int | None = None, growth_limit: float = 2.0) -> MikhlinCertificate:
    """Sampling-based Mikhlin-Hormander certificate for ``sym``.

    k-differences only use ``k <= k_max - N_max`` so every difference stays
    inside the domain.  The same protocol on the domain dilated by 4 (tau
    range times 4, k range times 16) must not more than double any constant;
    otherwise the constant is reported as infinite and ``pass`` is false.
    """
    n_max = default_order(sym.dim) if n_max is None else n_max
    if k_max < n_max:
        raise ValueError(f"k_max must be >= N_max={n_max}")
    tau_range = (float(tau_range[0]), float(tau_range[1]))
    tau, k = _samples(tau_range, k_max - n_max, samples, seed)
    if not np.all(np.isfinite(sym(tau, k))):
        raise ValueError(f"symbol {sym.name} is not finite on the certification domain")
    c_tau, c_k = _constants(sym, tau, k, n_max, analytic=True)
    big_tau, big_k = _samples((4.0 * tau_range[0], 4.0 * tau_range[1]),
                              16 * (k_max + 1) - 1 - n_max, samples, seed + 1)
    big_tau = np.concatenate([tau, big_tau])
    big_k = np.concatenate([k, big_k])
    b_tau, b_k = _constants(sym, big_tau, big_k, n_max, analytic=True)
    notes = []

    def gate(small, big, label):
        out = []
        for n, (a, b) in enumerate(zip(small, big)):
            if not math.isfinite(b) or b > growth_limit * a and b > 1e-8:
                notes.append(f"{label}[{n}] grows from {a:.3e} to {b:.3e} on the dilated domain")
                out.append(math.inf)
            else:
                out.append(a)
        return out

    c_tau = gate(c_tau, b_tau, "C_tau")
    c_k = gate(c_k, b_k, "C_k")

    check = None
    if sym.tau_derivative is not None:
        sub = slice(0, min(256, len(tau)))
        worst = 0.0
        for n in range(1, min(n_max, sym.max_tau_order) + 1):
            exact = sym.d_tau(n, tau[sub], k[sub], analytic=True)
            fd = sym.d_tau(n, tau[sub], k[sub], analytic=False)
            scale = np.max(np.abs(exact))
            if scale > 0:
                worst = max(worst, float(np.max(np.abs(exact - fd)) / scale))
            elif np.max(np.abs(fd)) > 1e-12:
                worst = math.inf
        check = worst
        if worst > 1e-5:
            notes.append(f"analytic tau-derivatives disagree with finite differences ({worst:.2e})")
    passed = all(math.isfinite(c) for c in c_tau + c_k) and (check is None or check <= 1e-5)
    return MikhlinCertificate(sym.name, sym.dim, n_max, c_tau, c_k, list(tau_range), k_max,
                              samples, seed, check, passed, notes)


# ---------------------------------------------------------------------------
# action on spectra


def symbol_table(s: MixedSpectrum, sym: Symbol) -> np.ndarray:
    """``m(tau_i, |mu|)`` on the coefficient layout of ``s``."""
    values = sym(s.tau[:, None], s.degrees[None, :])
    if not np.all(np.isfinite(values)):
        raise ValueError(f"symbol {sym.name} is not finite on the spectrum")
    return values


def apply_symbol(s: MixedSpectrum, sym: Symbol) -> MixedSpectrum:
    """``T_m``: multiply ``c(i, mu)`` by ``m(tau_i, |mu|)``."""
    if sym.dim != s.spec.dim:
        raise ValueError(f"symbol dimension {sym.dim} does not match grid dimension {s.spec.dim}")
    return s.with_coeffs(s.coeffs * symbol_table(s, sym))


def spectrum_sup(s: MixedSpectrum, sym: Symbol) -> float:
    """``sup |m|`` over the ``(tau_i, k)`` pairs the spectrum resolves."""
    return float(np.max(np.abs(symbol_table(s, sym))))


def dilation_probe(js: Sequence[int], dim: int = 1, samples: int = 4096, seed: int = 0) -> dict:
    """Certificates of raw blocks ``j`` on domains scaled to each block.

    Returns ``{j: (C_tau, C_k)}``; for blocks that reach the spectrum the
    constants are nearly independent of ``j``.
    """
    out = {}
    for j in js:
        s_hi = RAW_SUPPORT[1] * 2.0 ** j
        n_max = default_order(dim)
        k_max = int(math.ceil(s_hi * s_hi / 2.0)) + n_max + 1
        cert = certify(lp_block(j, dim), (-1.05 * s_hi, 1.05 * s_hi), k_max, samples, seed,
                       growth_limit=math.inf)
        out[j] = (cert.C_tau, cert.C_k)
    return out

