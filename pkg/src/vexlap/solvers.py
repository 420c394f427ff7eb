"""Critical-point solvers: min-max saddle, ball minimizer, penalty sweep, deflation.

The saddle search follows the min-max characterization directly: a discrete
path from 0 to the escape point is deformed by descending its energy
maximizer.  The path is kept as the ray through the maximizer's shape, so a
descent step on the maximizer plus re-interpolation is exactly a descent step
on the ray envelope theta(v) = max_t I(t v); theta's minimizers are the
saddle points we want and theta is safe to descend (the unstable direction is
absorbed by the inner one-dimensional maximization).  A quasi-Newton stage on
theta and a Gauss-Newton polish of the (optionally deflated) gradient push
the residual to tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import least_squares, minimize

from .energy import (VariationalProblem, GeometryConstants, geometry_constants,
                     make_e_point, tau0)
from .fields import make_field, make_potential
from .grid import GridFunction
from .spaces import estimate_embedding_constant

__all__ = [
    "PathCollapse",
    "BoundaryTrap",
    "SearchExhausted",
    "DistinctnessError",
    "SolverReport",
    "SweepRecord",
    "SolveSetup",
    "prepare_setup",
    "mountain_pass",
    "ball_minimize",
    "solve_both",
    "lambda_sweep",
    "build_limit_problem",
    "limit_solve",
    "deflated_search",
]

ARMIJO_C1 = 1e-4


class PathCollapse(RuntimeError):
    """The path maximizer degenerated onto an endpoint."""


class BoundaryTrap(RuntimeError):
    """The ball iterate is stuck on the sphere; contradicts a negative infimum."""


class SearchExhausted(RuntimeError):
    """Deflated restarts keep reproducing known solutions."""


class DistinctnessError(RuntimeError):
    """The two computed critical points are not distinct."""


@dataclass(frozen=True)
class SolverReport:
    solution: GridFunction
    critical_value: float
    residual_norm: float
    iterations: int
    classification: str  # saddle | ball_minimizer | deflated
    history: Tuple[Tuple[float, float], ...]
    converged: bool
    diagnostic: str = ""

    def to_dict(self):
        return {
            "classification": self.classification,
            "critical_value": self.critical_value,
            "residual_norm": self.residual_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "diagnostic": self.diagnostic,
            "history": [[v, r] for v, r in self.history],
            "solution": {
                "a": self.solution.a,
                "b": self.solution.b,
                "values": self.solution.values.tolist(),
            },
        }


@dataclass(frozen=True)
class SweepRecord:
    lam: float
    report1: Optional[SolverReport]
    report2: Optional[SolverReport]
    potential_mass1: float
    potential_mass2: float
    distance1: float
    distance2: float
    status: str = "ok"

    def to_dict(self):
        return {
            "lambda": self.lam,
            "status": self.status,
            "report1": self.report1.to_dict() if self.report1 else None,
            "report2": self.report2.to_dict() if self.report2 else None,
            "potential_mass1": self.potential_mass1,
            "potential_mass2": self.potential_mass2,
            "distance1": self.distance1,
            "distance2": self.distance2,
        }


@dataclass(frozen=True)
class SolveSetup:
    """Lambda-independent preparation: geometry constants and start objects."""

    geometry: GeometryConstants
    w0: GridFunction
    v0: GridFunction
    C_p: float
    C_k: float


def _bounds_of(problem: VariationalProblem) -> dict:
    return {
        "p_minus": problem.p.inferred_min, "p_plus": problem.p.inferred_max,
        "q_minus": problem.q.inferred_min, "q_plus": problem.q.inferred_max,
        "s_minus": problem.s.inferred_min, "s_plus": problem.s.inferred_max,
        "k_minus": problem.k.inferred_min, "k_plus": problem.k.inferred_max,
    }


def prepare_setup(problem: VariationalProblem, dictionary_size: int = 20,
                  seed: int = 0) -> SolveSetup:
    """Empirical embedding constants, geometry certificate, and start points.

    Raises InadmissibleParameters when (alpha, beta) violate the closed-form
    admissibility box computed from the empirical constants.
    """
    C_p = estimate_embedding_constant(problem.p, dictionary_size,
                                      problem.kq_omega, seed)
    C_k = estimate_embedding_constant(problem.k, dictionary_size,
                                      problem.kq_omega, seed)
    a, b = problem.a, problem.b
    omega0 = problem.V.omega0
    if omega0 is None:
        third = (b - a) / 3.0
        omega0 = (a + third, b - third)
    w0 = GridFunction.hat(a, b, problem.n_cells,
                          center=0.5 * (omega0[0] + omega0[1]),
                          width=omega0[1] - omega0[0])
    w0_norm = problem.norm_lambda(w0)
    t0 = tau0(problem.beta, problem.k.inferred_max, problem.q.inferred_min,
              w0_norm, problem.k_modular(w0)) if problem.beta > 0 else 0.0
    geom = geometry_constants(_bounds_of(problem), problem.alpha, problem.beta,
                              C_p, C_k, tau0_value=t0)
    bump = GridFunction.bump(a, b, problem.n_cells, width=0.9 * (b - a))
    v0 = bump.scaled(1.0 / problem.norm_lambda(bump))
    return SolveSetup(geom, w0, v0, C_p, C_k)


# -- saddle search ----------------------------------------------------------


def _deflation(u: GridFunction, knowns: Sequence[GridFunction]) -> float:
    f = 1.0
    for w in knowns:
        d2 = u.l2_distance(w) ** 2
        f *= 1.0 + 1.0 / max(d2, 1e-30)
    return f


def _ray_max(problem: VariationalProblem, shape: np.ndarray,
             t_lo: float, t_hi: float) -> Tuple[float, float]:
    """Maximize t -> I(t * shape) by log scan plus golden refinement."""
    zero = problem.zero()

    def Ev(t):
        return problem.energy_value(zero.with_interior(t * shape))

    ts = np.geomspace(t_lo, t_hi, 49)
    Es = np.array([Ev(t) for t in ts])
    i = int(np.argmax(Es))
    a_, b_ = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
    phi = 0.5 * (np.sqrt(5.0) - 1.0)
    c_, d_ = b_ - phi * (b_ - a_), a_ + phi * (b_ - a_)
    fc, fd = Ev(c_), Ev(d_)
    for _ in range(30):
        if fc > fd:
            b_, d_, fd = d_, c_, fc
            c_ = b_ - phi * (b_ - a_)
            fc = Ev(c_)
        else:
            a_, c_, fc = c_, d_, fd
            d_ = a_ + phi * (b_ - a_)
            fd = Ev(d_)
    t = 0.5 * (a_ + b_)
    return t, Ev(t)


def mountain_pass(problem: VariationalProblem, e: GridFunction,
                  tol_residual: float = 1e-6, max_iters: int = 5000,
                  path_points: int = 42,
                  known_solutions: Sequence[GridFunction] = ()) -> SolverReport:
    """Path-deformation saddle search with envelope refinement.

    ``e`` is the escape point (I(e) < 0 beyond the ring).  When
    ``known_solutions`` is nonempty, the convergence test and the final
    polish use the residual multiplied by the deflation factor, so the
    search cannot terminate on an already-known critical point.  In that
    case the value-descent phases are skipped entirely: deflation rescales
    the residual but leaves descent directions unchanged, so descending the
    path maximum would slide back into an already-known basin.  The
    deflated Gauss-Newton solve started from the ray maximizer of the
    initial path is what realizes the restart.
    """
    M = path_points - 1
    zero = problem.zero()
    e_int = e.interior_values
    t_e = float(np.linalg.norm(e_int))
    if t_e == 0.0:
        raise ValueError("escape point must be nonzero")
    v = e_int / t_e

    def grad(x):
        return problem.gradient(zero.with_interior(x))

    def Ev(x):
        return problem.energy_value(zero.with_interior(x))

    def factor(x):
        if not known_solutions:
            return 1.0
        return _deflation(zero.with_interior(x), known_solutions)

    history: List[Tuple[float, float]] = []
    iterations = 0
    end_hits = 0
    step = None

    # phase 1: discrete path 0 -> e along the ray of the current shape;
    # descend the maximizer, re-embed the ray (cubic clustering near 0)
    fracs = np.linspace(0.0, 1.0, M + 1) ** 3
    phase1_budget = min(40, max_iters)
    converged = False
    tstar = None
    t_last = 0.1 * t_e

    if known_solutions:
        # deflated restart: take the ray maximizer of the initial path and
        # hand it directly to the deflated Gauss-Newton polish below
        tstar, th = _ray_max(problem, v, 1e-4 * t_e, 1e4 * t_e)
        if tstar <= 0.0:
            raise PathCollapse("initial ray has no interior maximizer")
        x = tstar * v
        res = float(np.max(np.abs(grad(x))))
        iterations += 1
        history.append((th, res))
        phase1_budget = 0

    for _ in range(phase1_budget):
        ts = t_e * fracs
        ener = np.array([Ev(t * v) for t in ts])
        j = int(np.argmax(ener))
        if j == 0 or j == M:
            end_hits += 1
            if end_hits >= 50:
                raise PathCollapse("path maximizer stuck on an endpoint")
            j = 1 + int(np.argmax(ener[1:M]))
        else:
            end_hits = 0
        x = ts[j] * v
        t_last = ts[j]
        g = grad(x)
        res = float(np.max(np.abs(g)))
        iterations += 1
        history.append((float(ener.max()), res))
        if res * factor(x) < tol_residual and ener[j] >= 0.0:
            tstar, converged = ts[j], True
            break
        gn2 = float(g @ g)
        if step is None:
            step = t_last / (8.0 * max(res, 1e-12))
        t_step = step
        accepted = False
        for _ in range(20):
            xn = x - t_step * g
            norm_xn = float(np.linalg.norm(xn))
            if norm_xn == 0.0:
                t_step *= 0.5
                continue
            v_try = xn / norm_xn
            ener_try = np.array([Ev(t * v_try) for t in t_e * fracs])
            if ener_try.max() <= ener.max() - ARMIJO_C1 * t_step * gn2:
                v = v_try
                accepted = True
                break
            t_step *= 0.5
        if not accepted:
            break
        # restore a negative endpoint if the re-embedded ray lost it
        for _ in range(60):
            if Ev(t_e * fracs[-1] * v) < 0.0:
                break
            t_e *= 2.0
        step = min(t_step * 4.0, 1e8)

    # phase 2: quasi-Newton on the ray envelope theta(v) = max_t I(t v)
    if not converged and not known_solutions:
        t_guess = [t_last]

        def theta_and_grad(raw):
            nraw = float(np.linalg.norm(raw))
            shape = raw / nraw
            t, th = _ray_max(problem, shape, t_guess[0] * 1e-4, t_guess[0] * 1e4)
            t_guess[0] = t
            g = (t / nraw) * grad(t * shape)
            g = g - (g @ raw) / (raw @ raw) * raw  # theta is scale-invariant
            return th, g

        budget = max(10, min(400, max_iters - iterations))
        out = minimize(theta_and_grad, v, jac=True, method="L-BFGS-B",
                       options={"maxiter": budget, "ftol": 1e-18, "gtol": 1e-14})
        iterations += int(out.nit)
        v = out.x / float(np.linalg.norm(out.x))
        tstar, th = _ray_max(problem, v, t_guess[0] * 1e-4, t_guess[0] * 1e4)
        res = float(np.max(np.abs(grad(tstar * v))))
        history.append((th, res))

    x = tstar * v

    # phase 3: Gauss-Newton polish of the deflated weak-form residual
    if float(np.max(np.abs(grad(x)))) * factor(x) >= tol_residual:
        def residual_vec(xv):
            return factor(xv) * grad(xv)

        out = least_squares(residual_vec, x, method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=120 if known_solutions else 80)
        iterations += int(out.njev or 0)
        x = out.x

    u = zero.with_interior(x)
    value = problem.energy_value(u)
    res = float(np.max(np.abs(problem.gradient(u))))
    history.append((value, res))
    converged = res * factor(x) < tol_residual
    diagnostic = ""
    if value < 0.0:
        converged = False
        diagnostic = "negative critical value at exit"
    return SolverReport(u, value, res, iterations, "saddle",
                        tuple(history), converged, diagnostic)


# -- ball minimizer ----------------------------------------------------------


def ball_minimize(problem: VariationalProblem, rho: float, tau0_value: float,
                  w0: GridFunction, tol_residual: float = 1e-6,
                  max_iters: int = 5000) -> SolverReport:
    """Projected descent inside the ball of radius rho in the working norm.

    The ball test uses the modular directly: modular(u / rho) <= 1 iff the
    seminorm is at most rho.  Projection rescales radially with the safe
    exponent 1/q^- so the projected point is guaranteed inside.
    """
    zero = problem.zero()
    q_minus = problem.q.inferred_min

    def ball_mod(vals):
        return problem.kq_omega.modular(vals / rho)

    def grad(x):
        return problem.gradient(zero.with_interior(x))

    def Ev(x):
        return problem.energy_value(zero.with_interior(x))

    w0_norm = problem.norm_lambda(w0)
    tau = min(tau0_value, rho / w0_norm) / 2.0
    x = tau * w0.interior_values
    E = Ev(x)
    halvings = 0
    while E >= 0.0 and halvings < 400 and tau > 0.0:
        tau *= 0.5
        x = tau * w0.interior_values
        E = Ev(x)
        halvings += 1
    if E >= 0.0:
        return SolverReport(zero, 0.0, float(np.max(np.abs(grad(zero.interior_values)))),
                            0, "ball_minimizer", ((0.0, 0.0),), False,
                            "EmptyNegativeCone: no negative start on the w0 ray")

    # projected descent with Barzilai-Borwein step guesses under a monotone
    # Armijo line search: the sublinear source term is badly conditioned at
    # small amplitude and plain gradient steps need ~2x more iterations
    history: List[Tuple[float, float]] = []
    g = grad(x)
    step = 1.0 / max(float(np.max(np.abs(g))), 1e-12)
    boundary_hits = 0
    recent = [E]  # trailing window for the stalled-decrease test
    it = 0
    for it in range(1, max_iters + 1):
        res = float(np.max(np.abs(g)))
        history.append((E, res))
        if res < tol_residual:
            break
        t_step = step
        gn2 = float(g @ g)
        projected = False
        for _ in range(60):
            xn = x - t_step * g
            bm = ball_mod(np.concatenate(([0.0], xn, [0.0])))
            projected = bm > 1.0
            if projected:
                xn = xn * (1.0 / bm) ** (1.0 / q_minus)
            En = Ev(xn)
            if En <= E - ARMIJO_C1 * t_step * gn2 or (projected and En < E):
                break
            t_step *= 0.5
        if En > E:
            break
        gn = grad(xn)
        s = xn - x
        y = gn - g
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0 else t_step * 4.0
        boundary_hits = boundary_hits + 1 if projected else 0
        x, E, g = xn, En, gn
        recent.append(E)
        if len(recent) > 21:
            recent.pop(0)
        if len(recent) == 21 and recent[0] - recent[-1] < 1e-14:
            break
        if boundary_hits >= 100:
            raise BoundaryTrap("iterate pinned to the sphere for 100 iterations")

    u = zero.with_interior(x)
    value = problem.energy_value(u)
    res = float(np.max(np.abs(problem.gradient(u))))
    history.append((value, res))
    inside = ball_mod(u.values) < 1.0
    converged = res < tol_residual and value < 0.0 and inside
    diagnostic = "" if converged else "descent ended without certificate"
    return SolverReport(u, value, res, it, "ball_minimizer",
                        tuple(history), converged, diagnostic)


# -- orchestration -----------------------------------------------------------


def solve_both(problem: VariationalProblem, setup: SolveSetup = None,
               tol_residual: float = 1e-6, max_iters: int = 5000,
               path_points: int = 42, seed: int = 0,
               warm_saddle: GridFunction = None,
               warm_ball: GridFunction = None
               ) -> Tuple[SolverReport, SolverReport]:
    """The two critical points: positive-level saddle, negative ball minimum."""
    if setup is None:
        setup = prepare_setup(problem, seed=seed)
    geom = setup.geometry
    if warm_saddle is not None and np.any(warm_saddle.interior_values):
        e = make_e_point(problem,
                         warm_saddle.scaled(1.0 / problem.norm_lambda(warm_saddle)),
                         geom.rho)
    else:
        e = make_e_point(problem, setup.v0, geom.rho)
    rep1 = mountain_pass(problem, e, tol_residual, max_iters, path_points)
    w0 = warm_ball if (warm_ball is not None
                       and np.any(warm_ball.interior_values)) else setup.w0
    tau0_value = geom.tau0
    if w0 is not setup.w0:
        # warm profile: start at (or near) the profile itself, not at tau0
        tau0_value = 2.0
    rep2 = ball_minimize(problem, geom.rho, tau0_value, w0,
                         tol_residual, max_iters)
    if rep1.converged and rep2.converged:
        if not (rep2.critical_value < 0.0 < rep1.critical_value):
            raise DistinctnessError("energy ordering I(u2) < 0 < I(u1) failed")
        if rep1.solution.l2_distance(rep2.solution) <= 1e-6:
            raise DistinctnessError("solutions coincide within 1e-6 in L2")
    return rep1, rep2


def _distance_on(omega0: Tuple[float, float], n_cells: int,
                 u: GridFunction, ref: GridFunction) -> float:
    """L2 distance on omega0, sign-matched (the functional is even)."""
    x = np.linspace(omega0[0], omega0[1], n_cells + 1)
    du = u(x)
    best = np.inf
    for sgn in (1.0, -1.0):
        diff = GridFunction(omega0[0], omega0[1], du - sgn * ref(x),
                            dirichlet=False)
        best = min(best, diff.l2_norm())
    return float(best)


def build_limit_problem(problem: VariationalProblem) -> VariationalProblem:
    """The problem restricted to the potential's zero set, penalty dropped."""
    omega0 = problem.V.omega0
    if omega0 is None:
        raise ValueError("potential has no zero set; no limit problem")
    a0, b0 = omega0
    p0 = make_field(problem.p.source, 1, omega0)
    q0 = make_field(problem.q.source, 2, omega0)
    s0 = make_field(problem.s.source, 2, omega0)
    k0 = make_field(problem.k.source, 1, omega0)
    V0 = make_potential("0", omega0)
    return VariationalProblem(
        a0, b0, problem.n_cells, p0, q0, s0, k0, V0,
        alpha=problem.alpha, beta=problem.beta, lam=1.0,
        g=problem.kq_full.g, m=problem.kq_full.m)


def limit_solve(problem: VariationalProblem, tol_residual: float = 1e-6,
                max_iters: int = 5000, path_points: int = 42, seed: int = 0):
    """Two solutions of the problem restricted to the potential's core zero
    set, with the penalty term dropped.  Returns (report1, report2, problem)."""
    limit_problem = build_limit_problem(problem)
    rep1, rep2 = solve_both(limit_problem, tol_residual=tol_residual,
                            max_iters=max_iters, path_points=path_points,
                            seed=seed)
    return rep1, rep2, limit_problem


def lambda_sweep(problem: VariationalProblem, lambdas: Sequence[float],
                 tol_residual: float = 1e-6, max_iters: int = 5000,
                 path_points: int = 42, seed: int = 0) -> List[SweepRecord]:
    """Warm-started solves along an ascending penalty sequence."""
    lams = [float(l) for l in lambdas]
    if not lams or any(b <= a for a, b in zip(lams, lams[1:])):
        raise ValueError("lambdas must be nonempty and strictly ascending")
    setup = prepare_setup(problem, seed=seed)
    lim1, lim2, limit_problem = limit_solve(problem, tol_residual, max_iters,
                                            path_points, seed)
    omega0 = problem.V.omega0
    records: List[SweepRecord] = []
    warm1 = warm2 = None
    for lam in lams:
        prob_l = problem.with_lambda(lam)
        try:
            rep1, rep2 = solve_both(prob_l, setup, tol_residual, max_iters,
                                    path_points, seed,
                                    warm_saddle=warm1, warm_ball=warm2)
        except Exception as exc:  # noqa: BLE001 - a bad record must not kill the sweep
            records.append(SweepRecord(lam, None, None,
                                       float("nan"), float("nan"),
                                       float("nan"), float("nan"),
                                       f"failed: {exc}"))
            continue
        warm1, warm2 = rep1.solution, rep2.solution
        records.append(SweepRecord(
            lam, rep1, rep2,
            prob_l.potential_mass(rep1.solution),
            prob_l.potential_mass(rep2.solution),
            _distance_on(omega0, limit_problem.n_cells, rep1.solution,
                         lim1.solution),
            _distance_on(omega0, limit_problem.n_cells, rep2.solution,
                         lim2.solution)))
    return records


def deflated_search(problem: VariationalProblem, count: int,
                    tol_residual: float = 1e-6, max_iters: int = 5000,
                    path_points: int = 42, seed: int = 0
                    ) -> List[SolverReport]:
    """Distinct saddle-type critical points via residual deflation.

    Restarts use sign-changing seed shapes (sinusoidal modes); each found
    solution and its negative are deflated from subsequent searches.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    setup = prepare_setup(problem, seed=seed)
    rho = setup.geometry.rho
    a, b = problem.a, problem.b
    nodes = np.linspace(a, b, problem.n_cells + 1)
    rng = np.random.default_rng(seed)
    zero = problem.zero()

    found: List[SolverReport] = []
    knowns: List[GridFunction] = []
    consecutive_failures = 0
    attempt = 0
    while len(found) < count:
        attempt += 1
        mode = 1 + (attempt - 1) % (count + 2)
        vals = np.sin(mode * np.pi * (nodes - a) / (b - a))
        if attempt > count + 2:
            vals = vals + 0.2 * rng.standard_normal(vals.size)
        vals[0] = vals[-1] = 0.0
        shape = GridFunction(a, b, vals)
        shape = shape.scaled(1.0 / problem.norm_lambda(shape))
        e = make_e_point(problem, shape, rho)
        # the zero function is deflated too, so restarts cannot decay to it
        deflate = [zero] + knowns if knowns else []
        try:
            rep = mountain_pass(problem, e, tol_residual, max_iters,
                                path_points, known_solutions=deflate)
        except PathCollapse:
            consecutive_failures += 1
            if consecutive_failures >= 20:
                raise SearchExhausted("20 consecutive restarts failed")
            continue
        u = rep.solution
        distinct = rep.converged and all(
            min(u.l2_distance(w), u.l2_distance(w.scaled(-1.0))) > 1e-4
            for w in knowns)
        values_ok = all(abs(rep.critical_value - r.critical_value)
                        > 1e-9 * (1.0 + abs(rep.critical_value))
                        for r in found)
        if distinct and values_ok:
            found.append(SolverReport(u, rep.critical_value, rep.residual_norm,
                                      rep.iterations, "deflated", rep.history,
                                      rep.converged, rep.diagnostic))
            knowns.extend([u, u.scaled(-1.0)])
            consecutive_failures = 0
        else:
            consecutive_failures += 1
            if consecutive_failures >= 20:
                raise SearchExhausted("20 consecutive restarts reproduced "
                                      "known solutions")
    found.sort(key=lambda r: r.critical_value)
    return found
