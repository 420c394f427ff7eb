"""Energy functional, weak-form gradient, and mountain-pass geometry constants."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import KernelQuadrature
from .fields import ExponentField, Potential
from .grid import GridFunction
from .spaces import cell_quadrature

__all__ = [
    "EnergyBreakdown",
    "GeometryConstants",
    "InadmissibleParameters",
    "EscapeFailure",
    "VariationalProblem",
    "geometry_constants",
    "psi",
    "tau0",
    "make_e_point",
]

ZERO_THRESHOLD = 1e-14


class InadmissibleParameters(ValueError):
    """(alpha, beta) outside the region where the two-solution geometry holds."""


class EscapeFailure(RuntimeError):
    """No scale up to 2^20 gives negative energy along the escape ray."""


@dataclass(frozen=True)
class EnergyBreakdown:
    """The four parts of I_lambda; total = kinetic + potential - source_p - source_k."""

    kinetic: float
    potential: float
    source_p: float
    source_k: float
    total: float

    def to_dict(self):
        return {
            "kinetic": self.kinetic,
            "potential": self.potential,
            "source_p": self.source_p,
            "source_k": self.source_k,
            "total": self.total,
        }


@dataclass(frozen=True)
class GeometryConstants:
    """Closed-form constants behind the ring/escape geometry of the functional.

    rho is the ring radius sigma* maximizing psi, delta the (soft) ring level,
    tau0 the scale guaranteeing a negative start inside the ball.
    """

    A: float
    B: float
    D: float
    rho: float
    delta: float
    tau0: float
    alpha_max: float
    beta_max: float
    product_bound: float

    def to_dict(self):
        return {
            "A": self.A,
            "B": self.B,
            "D": self.D,
            "rho": self.rho,
            "delta": self.delta,
            "tau0": self.tau0,
            "alpha_max": self.alpha_max,
            "beta_max": self.beta_max,
            "product_bound": self.product_bound,
        }


class VariationalProblem:
    """Discretized functional I_lambda on a fixed grid, with cached quadrature.

    Bundles the kernel quadratures (full-plane for the energy, Omega x Omega
    for the norm) and the local cell rule with the exponents and potential
    pre-evaluated, so repeated energy/gradient calls touch no symbolic code.
    """

    def __init__(self, a: float, b: float, n_cells: int,
                 p: ExponentField, q: ExponentField, s: ExponentField,
                 k: ExponentField, V: Potential,
                 alpha: float, beta: float, lam: float,
                 g: int = 4, m: int = 6, R_tail: float = None,
                 node_budget: int = None):
        if alpha < 0 or beta < 0 or lam <= 0:
            raise ValueError("alpha, beta must be >= 0 and lambda > 0")
        self.a = float(a)
        self.b = float(b)
        self.n_cells = int(n_cells)
        self.p = p
        self.q = q
        self.s = s
        self.k = k
        self.V = V
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.lam = float(lam)

        self.kq_full = KernelQuadrature(a, b, n_cells, q, s, g=g, m=m,
                                        region="full", R_tail=R_tail,
                                        node_budget=node_budget)
        self.kq_omega = KernelQuadrature(a, b, n_cells, q, s, g=g, m=m,
                                         region="omega",
                                         node_budget=node_budget)

        xq, wq = cell_quadrature(a, b, n_cells, g)
        self._xq = xq
        self._wq = wq
        self._pv = np.asarray(p(xq), dtype=float)
        self._kv = np.asarray(k(xq), dtype=float)
        self._Vv = np.asarray(V(xq), dtype=float)
        # scatter indices: node xq lies in cell c, local coordinate t in [0, 1)
        h = (b - a) / n_cells
        rel = (xq - a) / h
        c = np.minimum(rel.astype(np.int64), n_cells - 1)
        self._cell = c
        self._t = rel - c

    # -- basic evaluations ---------------------------------------------------

    def with_lambda(self, lam: float) -> "VariationalProblem":
        """Copy sharing all quadrature caches; only the penalty weight changes."""
        import copy

        if lam <= 0:
            raise ValueError("lambda must be > 0")
        other = copy.copy(self)
        other.lam = float(lam)
        return other

    def zero(self) -> GridFunction:
        return GridFunction.zeros(self.a, self.b, self.n_cells)

    def _at_quad(self, u: GridFunction) -> np.ndarray:
        vals = u.values
        return vals[self._cell] * (1.0 - self._t) + vals[self._cell + 1] * self._t

    def norm_lambda(self, u: GridFunction) -> float:
        """The Gagliardo seminorm over Omega x Omega (the working norm)."""
        return self.kq_omega.seminorm(u.values)

    def potential_mass(self, u: GridFunction) -> float:
        """Integral of V |u|^2 over Omega."""
        uq = self._at_quad(u)
        return float(np.sum(self._wq * self._Vv * uq * uq))

    def p_modular(self, u: GridFunction) -> float:
        uq = np.abs(self._at_quad(u))
        return float(np.sum(self._wq * uq ** self._pv))

    def k_modular(self, u: GridFunction) -> float:
        uq = np.abs(self._at_quad(u))
        return float(np.sum(self._wq * uq ** self._kv))

    # -- functional ----------------------------------------------------------

    def energy(self, u: GridFunction) -> EnergyBreakdown:
        """Term-by-term value of I_lambda at u."""
        kin = self.kq_full.kinetic(u.values)
        uq = self._at_quad(u)
        au = np.abs(uq)
        pot = 0.5 * self.lam * float(np.sum(self._wq * self._Vv * uq * uq))
        sp = self.alpha * float(np.sum(self._wq / self._pv * au ** self._pv))
        sk = self.beta * float(np.sum(self._wq / self._kv * au ** self._kv))
        return EnergyBreakdown(kin, pot, sp, sk, kin + pot - sp - sk)

    def energy_value(self, u: GridFunction) -> float:
        return self.energy(u).total

    def gradient_flagged(self, u: GridFunction):
        """Weak-form gradient over interior hat functions, with the
        nonsmooth-source flag (some node has |u| below threshold where the
        local exponent k is < 2, so |u|^{k-2}u is taken as its limit 0)."""
        gvec = self.kq_full.weak_vector(u.values)[1:-1]
        uq = self._at_quad(u)
        au = np.abs(uq)
        small = au < ZERO_THRESHOLD
        safe = np.where(small, 1.0, au)
        src = self.lam * self._Vv * uq
        src -= self.alpha * np.where(small, 0.0, safe ** (self._pv - 2.0) * uq)
        src -= self.beta * np.where(small, 0.0, safe ** (self._kv - 2.0) * uq)
        contrib = self._wq * src
        n_nodes = self.n_cells + 1
        local = (np.bincount(self._cell, weights=contrib * (1.0 - self._t),
                             minlength=n_nodes)
                 + np.bincount(self._cell + 1, weights=contrib * self._t,
                               minlength=n_nodes))
        flag = bool(np.any(small & (self._kv < 2.0)))
        return gvec + local[1:-1], flag

    def gradient(self, u: GridFunction) -> np.ndarray:
        return self.gradient_flagged(u)[0]

    def residual_norm(self, u: GridFunction) -> float:
        return float(np.max(np.abs(self.gradient(u))))


def psi(sigma, A: float, B: float, D: float, alpha: float, beta: float,
        p_plus: float, k_plus: float):
    """The ring lower-bound profile D s^(2-k+) - A a s^(p+-k+) - B b."""
    sigma = np.asarray(sigma, dtype=float)
    out = (D * sigma ** (2.0 - k_plus)
           - A * alpha * sigma ** (p_plus - k_plus) - B * beta)
    return float(out) if out.ndim == 0 else out


def geometry_constants(bounds: dict, alpha: float, beta: float,
                       C_p: float, C_k: float,
                       tau0_value: float = float("nan")) -> GeometryConstants:
    """Closed-form ring/escape constants from exponent bounds and empirical
    embedding constants.  ``bounds`` must carry p/q/k extrema as produced by
    the hypothesis report."""
    p_minus = bounds["p_minus"]
    p_plus = bounds["p_plus"]
    q_plus = bounds["q_plus"]
    k_minus = bounds["k_minus"]
    k_plus = bounds["k_plus"]
    if C_p <= 0 or C_k <= 0:
        raise ValueError("embedding constants must be > 0")

    A = max(C_p ** p_minus, C_p ** p_plus) / p_minus
    B = max(C_k ** k_minus, C_k ** k_plus) / k_minus
    D = min(1.0 / q_plus, 0.5)

    alpha_max = D * (2.0 - k_plus) / (A * (p_plus - k_plus))
    beta_max = D * (p_plus - 2.0) / (B * (p_plus - k_plus))
    product_bound = alpha_max ** (2.0 - k_plus) * beta_max ** (p_plus - 2.0)

    if alpha > alpha_max or beta > beta_max:
        raise InadmissibleParameters(
            f"alpha <= {alpha_max:.6g} and beta <= {beta_max:.6g} required")
    if alpha ** (2.0 - k_plus) * beta ** (p_plus - 2.0) > product_bound:
        raise InadmissibleParameters("alpha/beta product bound violated")

    rho = (D * (2.0 - k_plus) / (A * alpha * (p_plus - k_plus))) ** (1.0 / (p_plus - 2.0))
    delta = psi(rho, A, B, D, alpha, beta, p_plus, k_plus) * rho ** k_plus
    return GeometryConstants(A, B, D, rho, delta, tau0_value,
                             alpha_max, beta_max, product_bound)


def tau0(beta: float, k_plus: float, q_minus: float,
         w0_norm: float, w0_k_modular: float) -> float:
    """Scale below which the ray through w0 has negative energy (k+ < 2)."""
    if w0_norm <= 0 or w0_k_modular <= 0:
        raise ValueError("w0 must have positive norm and k-modular")
    E = max(1.0 / q_minus, 0.5)
    return (beta * w0_k_modular / (k_plus * w0_norm ** 2 * E)) ** (1.0 / (2.0 - k_plus))


def make_e_point(problem: VariationalProblem, v0: GridFunction,
                 rho: float) -> GridFunction:
    """Escape point: smallest doubling scale sigma with norm(sigma v0) > rho
    and negative energy.  v0 must be normalized to unit norm by the caller."""
    sigma = 2.0
    while sigma <= 2.0 ** 20:
        e = v0.scaled(sigma)
        if problem.norm_lambda(e) > rho and problem.energy_value(e) < 0.0:
            return e
        sigma *= 2.0
    raise EscapeFailure("no doubling scale up to 2^20 reaches negative energy")
