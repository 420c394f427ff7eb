"""Variable-exponent modulars, Luxemburg norms, and empirical embedding constants."""

from __future__ import annotations

from typing import Callable, Tuple

import numpy as np

from .fields import ExponentField
from .grid import GridFunction

__all__ = [
    "BracketFailureError",
    "DegenerateDictionaryError",
    "cell_quadrature",
    "modular",
    "luxemburg_norm",
    "unit_modular_scale",
    "check_sandwich",
    "check_hoelder",
    "embedding_dictionary",
    "estimate_embedding_constant",
]

DEFAULT_GAUSS_ORDER = 4


class BracketFailureError(RuntimeError):
    """The modular never crosses 1 within the expanded scale bracket."""


class DegenerateDictionaryError(RuntimeError):
    """A dictionary member has (numerically) zero seminorm."""


def cell_quadrature(a: float, b: float, n_cells: int,
                    g: int = DEFAULT_GAUSS_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes/weights, g points per cell, flattened."""
    ref_x, ref_w = np.polynomial.legendre.leggauss(g)
    h = (b - a) / n_cells
    left = a + h * np.arange(n_cells)
    x = (left[:, None] + 0.5 * h * (ref_x[None, :] + 1.0)).ravel()
    w = np.broadcast_to(0.5 * h * ref_w[None, :], (n_cells, g)).ravel().copy()
    return x, w


def modular(u: GridFunction, p: ExponentField,
            g: int = DEFAULT_GAUSS_ORDER) -> float:
    """Integral of |u(x)|^p(x) over the domain, composite Gauss per cell."""
    x, w = cell_quadrature(u.a, u.b, u.n_cells, g)
    px = p(x)
    return float(np.sum(w * np.abs(u(x)) ** px))


def unit_modular_scale(modular_of_scaled: Callable[[float], float],
                       rel_tol: float = 1e-10,
                       bracket: Tuple[float, float] = (1e-12, 1e12)) -> float:
    """Solve modular(u / t) = 1 for t by bisection in log t.

    ``modular_of_scaled(t)`` must be non-increasing in t.  The initial
    bracket is expanded geometrically if it does not straddle 1.
    """
    lo, hi = bracket
    grow = 0
    while modular_of_scaled(hi) > 1.0:
        hi *= 1e3
        grow += 1
        if grow > 10:
            raise BracketFailureError("modular stays above 1 up to huge scales")
    grow = 0
    while modular_of_scaled(lo) < 1.0:
        lo *= 1e-3
        grow += 1
        if grow > 10:
            raise BracketFailureError("modular stays below 1 down to tiny scales")
    while hi - lo > rel_tol * hi:
        mid = np.sqrt(lo * hi)
        if modular_of_scaled(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return float(0.5 * (lo + hi))


def luxemburg_norm(u: GridFunction, p: ExponentField,
                   g: int = DEFAULT_GAUSS_ORDER) -> float:
    """Luxemburg norm: the scale t with modular(u/t) = 1 (0 for u = 0)."""
    x, w = cell_quadrature(u.a, u.b, u.n_cells, g)
    px = p(x)
    absu = np.abs(u(x))
    if not np.any(absu > 0):
        return 0.0
    return unit_modular_scale(lambda t: float(np.sum(w * (absu / t) ** px)))


def check_sandwich(u: GridFunction, p: ExponentField,
                   g: int = DEFAULT_GAUSS_ORDER, slack: float = 1e-9):
    """min(|u|^{p-}, |u|^{p+}) <= modular(u) <= max(...) with |u| the Luxemburg norm."""
    norm = luxemburg_norm(u, p, g)
    mid = modular(u, p, g)
    lo_pow = norm ** p.inferred_min
    hi_pow = norm ** p.inferred_max
    lhs = min(lo_pow, hi_pow)
    rhs = max(lo_pow, hi_pow)
    holds = (lhs <= mid * (1.0 + slack) + slack) and (mid <= rhs * (1.0 + slack) + slack)
    return lhs, mid, rhs, bool(holds)


def conjugate_field(p: ExponentField) -> ExponentField:
    """Pointwise conjugate exponent p' = p / (p - 1)."""
    from . import exprs

    expr = exprs.BinOp("/", p.expr, exprs.BinOp("-", p.expr, exprs.Num(1.0)))
    lo = p.inferred_max / (p.inferred_max - 1.0)
    hi = p.inferred_min / (p.inferred_min - 1.0)
    return ExponentField(expr, f"({p.source}) / (({p.source}) - 1)", p.arity,
                         p.omega, lo, hi, p.scan_resolution)


def check_hoelder(u: GridFunction, v: GridFunction, p: ExponentField,
                  g: int = DEFAULT_GAUSS_ORDER, slack: float = 1e-9):
    """Generalized Hoelder bound with constant 1/p^- + 1/(p')^-."""
    x, w = cell_quadrature(u.a, u.b, u.n_cells, g)
    lhs = float(np.sum(w * np.abs(u(x) * v(x))))
    pc = conjugate_field(p)
    const = 1.0 / p.inferred_min + 1.0 / pc.inferred_min
    rhs = const * luxemburg_norm(u, p, g) * luxemburg_norm(v, pc, g)
    holds = lhs <= rhs * (1.0 + slack) + slack
    return lhs, rhs, bool(holds)


def embedding_dictionary(a: float, b: float, n_cells: int, size: int,
                         seed: int = 0):
    """Deterministic dictionary: hats (5 positions x 3 widths), smooth bumps,
    and ``size`` seeded random Dirichlet piecewise-linear functions.

    Members are generated sequentially from the seed, so a larger size yields
    a superset of a smaller one.
    """
    L = b - a
    members = []
    for c in np.linspace(a + 0.15 * L, b - 0.15 * L, 5):
        for width in (0.2 * L, 0.4 * L, 0.6 * L):
            members.append(GridFunction.hat(a, b, n_cells, center=float(c), width=width))
    for c in np.linspace(a + 0.2 * L, b - 0.2 * L, 3):
        members.append(GridFunction.bump(a, b, n_cells, center=float(c), width=0.5 * L))
    rng = np.random.default_rng(seed)
    for _ in range(size):
        vals = rng.standard_normal(n_cells + 1)
        vals[0] = vals[-1] = 0.0
        members.append(GridFunction(a, b, vals))
    return members


def estimate_embedding_constant(r: ExponentField, dictionary_size: int,
                                kernel, seed: int = 0,
                                safety_factor: float = 1.5,
                                g: int = DEFAULT_GAUSS_ORDER) -> float:
    """Empirical Sobolev embedding constant C_r.

    Maximizes the ratio Luxemburg-L^{r(.)} norm over Gagliardo seminorm across
    a seeded dictionary and applies a safety factor; this is a heuristic
    estimate, not a certified constant.  ``kernel`` is a KernelQuadrature on
    the same grid (region Omega x Omega).
    """
    a, b = r.omega
    members = embedding_dictionary(a, b, kernel.n_cells, dictionary_size, seed)
    best = 0.0
    for u in members:
        semi = kernel.seminorm(u.values)
        if semi < 1e-14:
            raise DegenerateDictionaryError("dictionary member with zero seminorm")
        ratio = luxemburg_norm(u, r, g) / semi
        best = max(best, ratio)
    return safety_factor * best
