"""Independent brute-force quadrature oracles for the test suite.

These deliberately avoid the cell-pair decomposition used by the package:
the double integral is rewritten as an integral over the gap d = y - x with
a deep geometric grading, composite midpoint rules, and Richardson
extrapolation over a resolution doubling.  Scalar integrals use scipy's
adaptive quadrature.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad


def _half_plane_modular(u, q, s, resolution, d_levels=50, nd=None):
    """Integral over {y > x} of |u(x)-u(y)|^q / |x-y|^(1+qs), midpoint rules.

    The gap-direction rule must refine together with the x rule, otherwise
    kinks of u(x+d) in d dominate the error; nd defaults to resolution / 16.
    """
    a, b = u.a, u.b
    L = b - a
    if nd is None:
        nd = max(8, resolution // 16)
    total = 0.0
    breaks = np.concatenate(([0.0], L * 2.0 ** -np.arange(d_levels, -1, -1.0)))
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        dm = lo + (hi - lo) * (np.arange(nd) + 0.5) / nd
        wd = (hi - lo) / nd
        for d in dm:
            nx = resolution
            xm = a + (b - d - a) * (np.arange(nx) + 0.5) / nx
            wx = (b - d - a) / nx
            qv = np.asarray(q(xm, xm + d), dtype=float)
            sv = np.asarray(s(xm, xm + d), dtype=float)
            f = np.abs(u(xm) - u(xm + d)) ** qv * d ** -(1.0 + qv * sv)
            total += wd * wx * float(np.sum(f))
    return total


def _modular_at(u, q, s, resolution):
    return (_half_plane_modular(u, q, s, resolution)
            + _half_plane_modular(_Swapped(u), _SwapArgs(q), _SwapArgs(s), resolution))


class _Swapped:
    """u unchanged; placeholder so the two half-planes are assembled separately."""

    def __init__(self, u):
        self._u = u
        self.a = u.a
        self.b = u.b

    def __call__(self, x):
        return self._u(x)


class _SwapArgs:
    def __init__(self, f):
        self._f = f

    def __call__(self, x, y):
        return self._f(y, x)


def oracle_gagliardo_modular(u, q, s, resolution=1024):
    """Richardson-extrapolated (order 2) value of the Omega x Omega modular."""
    coarse = _modular_at(u, q, s, resolution // 2)
    fine = _modular_at(u, q, s, resolution)
    return (4.0 * fine - coarse) / 3.0


def oracle_gagliardo_seminorm(u, q, s, resolution=1024, rel_tol=1e-10):
    """Independent bisection on the oracle modular."""
    if oracle_gagliardo_modular(u, q, s, resolution) == 0.0:
        return 0.0
    lo, hi = 1e-12, 1e12

    def mod(t):
        scaled = _ScaledGrid(u, 1.0 / t)
        return oracle_gagliardo_modular(scaled, q, s, resolution)

    while mod(hi) > 1.0:
        hi *= 1e3
    while mod(lo) < 1.0:
        lo *= 1e-3
    while hi - lo > rel_tol * hi:
        mid = np.sqrt(lo * hi)
        if mod(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class _ScaledGrid:
    def __init__(self, u, factor):
        self._u = u
        self._c = factor
        self.a = u.a
        self.b = u.b

    def __call__(self, x):
        return self._c * self._u(x)


def oracle_modular_1d(u, p, tol=1e-12):
    """Adaptive-quadrature value of the variable-exponent modular on Omega."""
    val, _ = quad(lambda x: abs(u(x)) ** float(p(x)), u.a, u.b,
                  epsabs=tol, epsrel=tol, limit=500)
    return val


def oracle_luxemburg_norm(u, p, rel_tol=1e-11):
    """High-precision bisection against the adaptive-quadrature modular."""
    if oracle_modular_1d(u, p) == 0.0:
        return 0.0
    lo, hi = 1e-12, 1e12

    def mod(t):
        return quad(lambda x: abs(u(x) / t) ** float(p(x)), u.a, u.b,
                    epsabs=1e-13, epsrel=1e-13, limit=500)[0]

    while mod(hi) > 1.0:
        hi *= 1e3
    while mod(lo) < 1.0:
        lo *= 1e-3
    while hi - lo > rel_tol * hi:
        mid = np.sqrt(lo * hi)
        if mod(mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
