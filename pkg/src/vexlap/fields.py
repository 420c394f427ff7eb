"""Validated exponent fields and standing-hypothesis checks.

All checks are by deterministic grid sampling: the report records the scan
resolution and, for every failed inequality, a witness point where it is
violated.  Bounds inferred here are estimates, not proofs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from . import exprs
from .exprs import Expr

__all__ = [
    "ExponentField",
    "Potential",
    "HypothesisEntry",
    "HypothesisReport",
    "EmptyZeroSetError",
    "make_field",
    "infer_bounds",
    "make_potential",
    "extract_zero_set",
    "check_hypotheses",
]

SYMMETRY_TOL = 1e-12


class EmptyZeroSetError(ValueError):
    """The potential never drops below the zero tolerance on the scan grid."""


@dataclass(frozen=True, eq=False)
class ExponentField:
    """Expression-defined scalar field with grid-scanned bounds."""

    expr: Expr
    source: str
    arity: int  # 1 or 2
    omega: Tuple[float, float]
    inferred_min: float
    inferred_max: float
    scan_resolution: int

    def __call__(self, x, y=None):
        if self.arity == 1:
            return exprs.evaluate(self.expr, x)
        if y is None:
            raise exprs.MissingBindingError("two-variable field needs y")
        return exprs.evaluate(self.expr, x, y)

    @property
    def is_constant(self) -> bool:
        return self.inferred_min == self.inferred_max


def infer_bounds(expr: Expr, arity: int, omega: Tuple[float, float],
                 resolution: int) -> Tuple[float, float]:
    """Min/max of the field over a uniform grid, ``resolution`` points per axis."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    a, b = omega
    t = np.linspace(a, b, resolution)
    if arity == 1:
        vals = exprs.evaluate(expr, t)
    else:
        X, Y = np.meshgrid(t, t, indexing="ij")
        vals = exprs.evaluate(expr, X.ravel(), Y.ravel())
    vmin = float(np.min(vals))
    vmax = float(np.max(vals))
    if not (np.isfinite(vmin) and np.isfinite(vmax)):
        raise exprs.EvalDomainError("field is not finite on the scan grid")
    return vmin, vmax


def make_field(source: str, arity: int, omega: Tuple[float, float],
               resolution: int = 1001) -> ExponentField:
    expr = exprs.parse(source)
    names = exprs.free_vars(expr)
    if arity == 1 and "y" in names:
        raise exprs.ArityError(source, 1, 2, 0)
    res = resolution if arity == 1 else min(resolution, 513)
    lo, hi = infer_bounds(expr, arity, omega, res)
    return ExponentField(expr, source, arity, omega, lo, hi, res)


@dataclass(frozen=True, eq=False)
class Potential:
    """Nonnegative potential with its scanned zero set J and the inner Omega_0."""

    expr: Expr
    source: str
    omega: Tuple[float, float]
    zero_set: Tuple[Tuple[float, float], ...]  # maximal intervals with V <= zeta_tol
    omega0: Optional[Tuple[float, float]]      # middle third of the largest interval
    zeta_tol: float
    scan_resolution: int

    def __call__(self, x):
        return exprs.evaluate(self.expr, x)


def extract_zero_set(expr: Expr, omega: Tuple[float, float], zeta_tol: float,
                     resolution: int):
    """Maximal grid intervals with V <= zeta_tol, and the middle third of the largest."""
    if zeta_tol <= 0:
        raise ValueError("zeta_tol must be > 0")
    a, b = omega
    x = np.linspace(a, b, resolution)
    v = np.asarray(exprs.evaluate(expr, x))
    low = v <= zeta_tol
    if not np.any(low):
        raise EmptyZeroSetError("V never drops to the zero tolerance on the scan grid")
    intervals = []
    idx = np.flatnonzero(low)
    start = idx[0]
    prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            intervals.append((float(x[start]), float(x[prev])))
            start = i
        prev = i
    intervals.append((float(x[start]), float(x[prev])))
    widths = [hi - lo for lo, hi in intervals]
    lo, hi = intervals[int(np.argmax(widths))]
    third = (hi - lo) / 3.0
    omega0 = (lo + third, hi - third)
    return tuple(intervals), omega0


def make_potential(source: str, omega: Tuple[float, float], zeta_tol: float = 1e-12,
                   resolution: int = 2001) -> Potential:
    expr = exprs.parse(source)
    try:
        zero_set, omega0 = extract_zero_set(expr, omega, zeta_tol, resolution)
    except EmptyZeroSetError:
        zero_set, omega0 = (), None
    return Potential(expr, source, omega, zero_set, omega0, zeta_tol, resolution)


@dataclass(frozen=True)
class HypothesisEntry:
    name: str
    passed: bool
    witness: Optional[tuple] = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "witness": list(self.witness) if self.witness is not None else None,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class HypothesisReport:
    entries: Tuple[HypothesisEntry, ...]
    resolution: int
    bounds: dict = field(default_factory=dict)  # p_minus, p_plus, q_minus, ...

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name: str) -> HypothesisEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def failures(self) -> List[HypothesisEntry]:
        return [e for e in self.entries if not e.passed]

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "resolution": self.resolution,
            "bounds": dict(self.bounds),
            "entries": [e.to_dict() for e in self.entries],
        }


def _pairs_grid(omega, resolution):
    a, b = omega
    t = np.linspace(a, b, resolution)
    X, Y = np.meshgrid(t, t, indexing="ij")
    return X.ravel(), Y.ravel()


def _symmetry_entry(name, f, omega, resolution):
    X, Y = _pairs_grid(omega, resolution)
    diff = np.abs(f(X, Y) - f(Y, X))
    i = int(np.argmax(diff))
    ok = diff[i] < SYMMETRY_TOL
    witness = None if ok else (float(X[i]), float(Y[i]))
    return HypothesisEntry(name, bool(ok), witness,
                           f"max |f(x,y)-f(y,x)| = {float(diff[i]):.3e}")


def _translation_entry(q, omega, resolution):
    """Q3: q((x,y) - (z,z)) = q(x,y) for shifts keeping both points in Omega.

    Only translation invariance inside Omega is testable by sampling; the
    admissible shift family is sampled on the same grid as the pairs.
    """
    a, b = omega
    t = np.linspace(a, b, resolution)
    X, Y = np.meshgrid(t, t, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    shifts = np.linspace(-(b - a), b - a, 2 * resolution - 1)
    worst = 0.0
    witness = None
    base = q(X, Y)
    for z in shifts:
        if z == 0.0:
            continue
        ok_mask = (X - z >= a) & (X - z <= b) & (Y - z >= a) & (Y - z <= b)
        if not np.any(ok_mask):
            continue
        d = np.abs(base[ok_mask] - q(X[ok_mask] - z, Y[ok_mask] - z))
        i = int(np.argmax(d))
        if d[i] > worst:
            worst = float(d[i])
            xi = X[ok_mask][i]
            yi = Y[ok_mask][i]
            witness = (float(xi), float(yi), float(z))
    ok = worst < SYMMETRY_TOL
    return HypothesisEntry("Q3", bool(ok), None if ok else witness,
                           f"max shift deviation = {worst:.3e}")


def _log_holder_estimate(p, omega, resolution):
    a, b = omega
    t = np.linspace(a, b, resolution)
    X, Y = np.meshgrid(t, t, indexing="ij")
    X, Y = X.ravel(), Y.ravel()
    d = np.abs(X - Y)
    mask = (d > 0) & (d < 0.5)
    if not np.any(mask):
        return 0.0, None
    prod = np.abs(p(X[mask]) - p(Y[mask])) * np.abs(np.log(d[mask]))
    i = int(np.argmax(prod))
    return float(prod[i]), (float(X[mask][i]), float(Y[mask][i]))


def check_hypotheses(p: ExponentField, q: ExponentField, s: ExponentField,
                     k: ExponentField, V: Potential, n: int,
                     resolution: int = 201) -> HypothesisReport:
    """Evaluate every standing hypothesis by deterministic grid sampling.

    Failures become report entries with witnesses; nothing raises here.
    """
    omega = p.omega
    a, b = omega
    entries = []

    pm, pp = p.inferred_min, p.inferred_max
    qm, qp = q.inferred_min, q.inferred_max
    sm, sp = s.inferred_min, s.inferred_max
    km, kp = k.inferred_min, k.inferred_max

    t = np.linspace(a, b, resolution)

    # P1a: 2 < p^- and p(x) < n q(x,x) / (n - s(x,x) q(x,x)) pointwise
    qxx = q(t, t)
    sxx = s(t, t)
    denom = n - sxx * qxx
    with np.errstate(divide="ignore", invalid="ignore"):
        qstar_diag = np.where(denom > 0, n * qxx / np.where(denom > 0, denom, 1.0), np.inf)
    px = p(t)
    viol = (denom <= 0) | (px >= qstar_diag)
    if pm <= 2:
        entries.append(HypothesisEntry("P1a", False, (float(t[0]),),
                                       f"p^- = {pm:.6g} <= 2"))
    elif np.any(viol):
        i = int(np.argmax(viol))
        entries.append(HypothesisEntry("P1a", False, (float(t[i]),),
                                       "p(x) >= n q(x,x)/(n - s(x,x) q(x,x))"))
    else:
        margin = float(np.min(qstar_diag - px))
        entries.append(HypothesisEntry("P1a", True, None,
                                       f"min (q*(x) - p(x)) = {margin:.6g}"))

    # P2: log-Hoelder, accepted when the sampled sup stabilizes under doubling
    m1, _ = _log_holder_estimate(p, omega, resolution)
    m2, wit = _log_holder_estimate(p, omega, 2 * resolution - 1)
    stable = m2 <= 1e-12 or abs(m2 - m1) <= 0.05 * max(m2, 1e-300)
    entries.append(HypothesisEntry("P2", bool(stable), None if stable else wit,
                                   f"estimated M: {m1:.6g} -> {m2:.6g} under doubling"))

    # Q1, Q2, Q3
    entries.append(_symmetry_entry("Q1", q, omega, resolution))
    q2_ok = 1.0 < qm and qp < pm
    entries.append(HypothesisEntry("Q2", bool(q2_ok), None,
                                   f"q^- = {qm:.6g}, q^+ = {qp:.6g}, p^- = {pm:.6g}"))
    entries.append(_translation_entry(q, omega, max(resolution // 4, 16)))

    # S1, S2
    entries.append(_symmetry_entry("S1", s, omega, resolution))
    s2_ok = 0.0 < sm and sp < 1.0
    entries.append(HypothesisEntry("S2", bool(s2_ok), None,
                                   f"s^- = {sm:.6g}, s^+ = {sp:.6g}"))

    # K1
    k1_ok = 1.0 < km and kp < 2.0
    entries.append(HypothesisEntry("K1", bool(k1_ok), None,
                                   f"k^- = {km:.6g}, k^+ = {kp:.6g}"))

    # V1: V >= 0 on the grid, zero set nonempty and strictly inside Omega
    tv = np.linspace(a, b, V.scan_resolution)
    vv = np.asarray(V(tv))
    neg = vv < 0
    if np.any(neg):
        i = int(np.argmax(neg))
        entries.append(HypothesisEntry("V1", False, (float(tv[i]),), "V < 0"))
    elif not V.zero_set:
        entries.append(HypothesisEntry("V1", False, None, "zero set is empty"))
    else:
        lo = min(i[0] for i in V.zero_set)
        hi = max(i[1] for i in V.zero_set)
        inside = lo > a and hi < b
        entries.append(HypothesisEntry(
            "V1", bool(inside), None if inside else (float(lo), float(hi)),
            f"J spans [{lo:.6g}, {hi:.6g}]" + ("" if inside else " (touches the boundary)")))

    # V2: Omega_0 nonempty and strictly interior to J
    if V.omega0 is not None and V.omega0[1] > V.omega0[0]:
        entries.append(HypothesisEntry("V2", True, None,
                                       f"Omega_0 = [{V.omega0[0]:.6g}, {V.omega0[1]:.6g}]"))
    else:
        entries.append(HypothesisEntry("V2", False, None, "no interior zero interval"))

    # DIM: n > q(x,y) s(x,y) on sampled pairs
    X, Y = _pairs_grid(omega, resolution)
    prod = q(X, Y) * s(X, Y)
    i = int(np.argmax(prod))
    dim_ok = prod[i] < n
    entries.append(HypothesisEntry("DIM", bool(dim_ok),
                                   None if dim_ok else (float(X[i]), float(Y[i])),
                                   f"max q*s = {float(prod[i]):.6g} vs n = {n}"))

    # DIM3: n > 2 s^+
    dim3_ok = n > 2.0 * sp
    entries.append(HypothesisEntry("DIM3", bool(dim3_ok), None,
                                   f"2 s^+ = {2.0 * sp:.6g} vs n = {n}"))

    # SUBCRIT: q*(x) = n q(x,x) / (n - s^- q(x,x)) > r(x) for r in {p, k}
    denom_m = n - sm * qxx
    with np.errstate(divide="ignore", invalid="ignore"):
        qstar = np.where(denom_m > 0, n * qxx / np.where(denom_m > 0, denom_m, 1.0), np.inf)
    kx = k(t)
    bad = (denom_m <= 0) | (qstar <= px) | (qstar <= kx)
    if np.any(bad):
        i = int(np.argmax(bad))
        entries.append(HypothesisEntry("SUBCRIT", False, (float(t[i]),),
                                       "q*(x) <= max(p(x), k(x))"))
    else:
        margin = float(np.min(qstar - np.maximum(px, kx)))
        entries.append(HypothesisEntry("SUBCRIT", True, None,
                                       f"min (q*(x) - r(x)) = {margin:.6g}"))

    bounds = {
        "p_minus": pm, "p_plus": pp,
        "q_minus": qm, "q_plus": qp,
        "s_minus": sm, "s_plus": sp,
        "k_minus": km, "k_plus": kp,
    }
    return HypothesisReport(tuple(entries), resolution, bounds)
