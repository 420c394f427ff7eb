"""JSON problem configuration with strict validation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Tuple

from . import exprs
from .energy import VariationalProblem
from .fields import ExponentField, Potential, make_field, make_potential

__all__ = ["ConfigError", "QuadratureConfig", "SolverConfig", "ProblemConfig",
           "load_config", "parse_config", "build_problem"]


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class QuadratureConfig:
    g: int = 4
    m: int = 6
    R_tail: Optional[float] = None
    node_budget: Optional[int] = None


@dataclass(frozen=True)
class SolverConfig:
    tol_residual: float = 1e-6
    max_iters: int = 5000
    path_points: int = 42
    seed: int = 0


@dataclass(frozen=True)
class ProblemConfig:
    omega: Tuple[float, float]
    n: int
    p: str
    q: str
    s: str
    k: str
    V: str
    alpha: float
    beta: float
    lam: float
    N: int
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    output_dir: str = "."


_TOP_KEYS = {"omega", "n", "p", "q", "s", "k", "V", "alpha", "beta", "lambda",
             "N", "quadrature", "solver", "output_dir"}
_QUAD_KEYS = {"g", "m", "R_tail", "node_budget"}
_SOLVER_KEYS = {"tol_residual", "max_iters", "path_points", "seed"}
_REQUIRED = {"omega", "p", "q", "s", "k", "V", "alpha", "beta", "lambda", "N"}


def _reject_unknown(d: dict, allowed: set, where: str):
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(sorted(unknown))}")


def _positive(d: dict, key: str) -> float:
    v = d[key]
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
        raise ConfigError(f"{key} must be > 0")
    return float(v)


def _check_expression(source, name: str, arity: int):
    if not isinstance(source, str):
        raise ConfigError(f"{name} must be an expression string")
    try:
        e = exprs.parse(source)
    except exprs.ExprError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    extra = exprs.free_vars(e) - ({"x"} if arity == 1 else {"x", "y"})
    if extra:
        raise ConfigError(f"{name}: unexpected variable(s) {', '.join(sorted(extra))}")


def parse_config(raw: dict) -> ProblemConfig:
    if not isinstance(raw, dict):
        raise ConfigError("top-level config must be a JSON object")
    _reject_unknown(raw, _TOP_KEYS, "config")
    missing = _REQUIRED - set(raw)
    if missing:
        raise ConfigError(f"missing key(s): {', '.join(sorted(missing))}")

    omega = raw["omega"]
    if (not isinstance(omega, list) or len(omega) != 2
            or not all(isinstance(v, (int, float)) for v in omega)):
        raise ConfigError("omega must be [a, b]")
    a, b = float(omega[0]), float(omega[1])
    if not a < b:
        raise ConfigError("omega must satisfy a < b")

    n = raw.get("n", 1)
    if n != 1:
        raise ConfigError("n must be 1")

    for name, arity in (("p", 1), ("q", 2), ("s", 2), ("k", 1), ("V", 1)):
        _check_expression(raw[name], name, arity)

    alpha = _positive(raw, "alpha")
    beta = _positive(raw, "beta")
    lam = _positive(raw, "lambda")

    N = raw["N"]
    if not isinstance(N, int) or isinstance(N, bool) or N < 64 or (N & (N - 1)):
        raise ConfigError("N must be a power of two with N >= 64")

    quad_raw = raw.get("quadrature", {})
    if not isinstance(quad_raw, dict):
        raise ConfigError("quadrature must be an object")
    _reject_unknown(quad_raw, _QUAD_KEYS, "quadrature")
    g = quad_raw.get("g", 4)
    m = quad_raw.get("m", 6)
    if not isinstance(g, int) or g < 2:
        raise ConfigError("quadrature.g must be an integer >= 2")
    if not isinstance(m, int) or m < 2:
        raise ConfigError("quadrature.m must be an integer >= 2")
    R_tail = quad_raw.get("R_tail")
    if R_tail is not None and not (isinstance(R_tail, (int, float)) and R_tail > 0):
        raise ConfigError("quadrature.R_tail must be > 0")
    node_budget = quad_raw.get("node_budget")
    if node_budget is not None and not (isinstance(node_budget, int) and node_budget > 0):
        raise ConfigError("quadrature.node_budget must be a positive integer")
    quad = QuadratureConfig(g, m,
                            float(R_tail) if R_tail is not None else None,
                            node_budget)

    sol_raw = raw.get("solver", {})
    if not isinstance(sol_raw, dict):
        raise ConfigError("solver must be an object")
    _reject_unknown(sol_raw, _SOLVER_KEYS, "solver")
    tol = sol_raw.get("tol_residual", 1e-6)
    if not (isinstance(tol, (int, float)) and tol > 0):
        raise ConfigError("solver.tol_residual must be > 0")
    max_iters = sol_raw.get("max_iters", 5000)
    if not isinstance(max_iters, int) or max_iters < 1:
        raise ConfigError("solver.max_iters must be a positive integer")
    path_points = sol_raw.get("path_points", 42)
    if not isinstance(path_points, int) or path_points < 3:
        raise ConfigError("solver.path_points must be an integer >= 3")
    seed = sol_raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("solver.seed must be a nonnegative integer")
    solver = SolverConfig(float(tol), max_iters, path_points, seed)

    output_dir = raw.get("output_dir", ".")
    if not isinstance(output_dir, str):
        raise ConfigError("output_dir must be a string")

    return ProblemConfig((a, b), 1, raw["p"], raw["q"], raw["s"], raw["k"],
                         raw["V"], alpha, beta, lam, N, quad, solver, output_dir)


def load_config(path) -> ProblemConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return parse_config(raw)


def build_fields(cfg: ProblemConfig):
    """Exponent fields and potential for a parsed config."""
    p = make_field(cfg.p, 1, cfg.omega)
    q = make_field(cfg.q, 2, cfg.omega)
    s = make_field(cfg.s, 2, cfg.omega)
    k = make_field(cfg.k, 1, cfg.omega)
    V = make_potential(cfg.V, cfg.omega)
    return p, q, s, k, V


def build_problem(cfg: ProblemConfig, lam: float = None,
                  fields=None) -> VariationalProblem:
    if fields is None:
        fields = build_fields(cfg)
    p, q, s, k, V = fields
    a, b = cfg.omega
    return VariationalProblem(a, b, cfg.N, p, q, s, k, V,
                              alpha=cfg.alpha, beta=cfg.beta,
                              lam=cfg.lam if lam is None else lam,
                              g=cfg.quadrature.g, m=cfg.quadrature.m,
                              R_tail=cfg.quadrature.R_tail,
                              node_budget=cfg.quadrature.node_budget)
