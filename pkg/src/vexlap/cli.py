"""Command-line interface: config ingestion, dispatch, JSON/CSV emission.

Exit codes: 0 success, 1 validation failure (bad config, failed hypotheses,
inadmissible parameters), 2 solver non-convergence or solver breakdown.
JSON reports go to stdout with sorted keys so identical runs are
byte-identical; solution profiles are CSV (node, value) with 17 significant
digits so values round-trip bit-exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import solvers, spaces
from .config import ConfigError, ProblemConfig, build_fields, build_problem, load_config
from .energy import EscapeFailure, InadmissibleParameters, VariationalProblem
from .fields import check_hypotheses
from .grid import GridFunction

__all__ = ["main", "run"]

_COMMANDS = ("check", "norm", "energy", "geometry", "solve", "sweep", "multi")


def _emit(payload) -> None:
    sys.stdout.write(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _fail(message: str, code: int) -> int:
    sys.stderr.write(message.rstrip() + "\n")
    return code


def write_profile_csv(path, u: GridFunction) -> None:
    nodes = u.nodes
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "value"])
        for x, v in zip(nodes, u.values):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])


def read_profile_csv(path) -> GridFunction:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(c) for c in row] for row in rows[1:]])
    return GridFunction(data[0, 0], data[-1, 0], data[:, 1],
                        dirichlet=bool(data[0, 1] == 0.0 and data[-1, 1] == 0.0))


def _probe(problem: VariationalProblem) -> GridFunction:
    """Canonical probe profile for norm/energy inspection: the centered hat."""
    return GridFunction.hat(problem.a, problem.b, problem.n_cells)


def _out_dir(cfg: ProblemConfig, out) -> str:
    d = out if out is not None else cfg.output_dir
    os.makedirs(d, exist_ok=True)
    return d


def _cmd_check(cfg: ProblemConfig, args) -> int:
    p, q, s, k, V = build_fields(cfg)
    report = check_hypotheses(p, q, s, k, V, cfg.n)
    _emit(report.to_dict())
    return 0 if report.all_passed else 1


def _cmd_norm(cfg: ProblemConfig, args) -> int:
    problem = build_problem(cfg)
    u = _probe(problem)
    _emit({
        "probe": "centered hat",
        "gagliardo_modular": problem.kq_omega.modular(u.values),
        "gagliardo_seminorm": problem.norm_lambda(u),
        "p_modular": problem.p_modular(u),
        "p_luxemburg_norm": spaces.luxemburg_norm(u, problem.p),
        "k_modular": problem.k_modular(u),
        "k_luxemburg_norm": spaces.luxemburg_norm(u, problem.k),
    })
    return 0


def _cmd_energy(cfg: ProblemConfig, args) -> int:
    problem = build_problem(cfg)
    _emit(problem.energy(_probe(problem)).to_dict())
    return 0


def _cmd_geometry(cfg: ProblemConfig, args) -> int:
    problem = build_problem(cfg)
    setup = solvers.prepare_setup(problem, seed=cfg.solver.seed)
    payload = setup.geometry.to_dict()
    payload["C_p"] = setup.C_p
    payload["C_k"] = setup.C_k
    _emit(payload)
    return 0


def _cmd_solve(cfg: ProblemConfig, args) -> int:
    problem = build_problem(cfg)
    sol = cfg.solver
    rep1, rep2 = solvers.solve_both(problem, tol_residual=sol.tol_residual,
                                    max_iters=sol.max_iters,
                                    path_points=sol.path_points, seed=sol.seed)
    out = _out_dir(cfg, args.out)
    write_profile_csv(os.path.join(out, "u1.csv"), rep1.solution)
    write_profile_csv(os.path.join(out, "u2.csv"), rep2.solution)
    _emit({"report1": rep1.to_dict(), "report2": rep2.to_dict()})
    return 0 if rep1.converged and rep2.converged else 2


def _cmd_sweep(cfg: ProblemConfig, args) -> int:
    if not args.lambda_list:
        return _fail("sweep requires --lambda-list", 1)
    try:
        lams = [float(t) for t in args.lambda_list.split(",") if t.strip()]
    except ValueError:
        return _fail("--lambda-list must be comma-separated numbers", 1)
    problem = build_problem(cfg)
    sol = cfg.solver
    records = solvers.lambda_sweep(problem, lams,
                                   tol_residual=sol.tol_residual,
                                   max_iters=sol.max_iters,
                                   path_points=sol.path_points, seed=sol.seed)
    out = _out_dir(cfg, args.out)
    with open(os.path.join(out, "sweep.csv"), "w", newline="",
              encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "value1", "value2", "potential_mass1",
                    "potential_mass2", "dist1", "dist2", "status"])
        for r in records:
            v1 = r.report1.critical_value if r.report1 else float("nan")
            v2 = r.report2.critical_value if r.report2 else float("nan")
            w.writerow([f"{r.lam:.17g}", f"{v1:.17g}", f"{v2:.17g}",
                        f"{r.potential_mass1:.17g}", f"{r.potential_mass2:.17g}",
                        f"{r.distance1:.17g}", f"{r.distance2:.17g}", r.status])
    for r in records:
        if r.status != "ok":
            continue
        tag = f"{r.lam:.17g}"
        write_profile_csv(os.path.join(out, f"u1_lambda{tag}.csv"),
                          r.report1.solution)
        write_profile_csv(os.path.join(out, f"u2_lambda{tag}.csv"),
                          r.report2.solution)
    _emit({"records": [r.to_dict() for r in records]})
    return 0 if any(r.status == "ok" for r in records) else 2


def _cmd_multi(cfg: ProblemConfig, args) -> int:
    # the multiplicity search runs on the limit problem (restriction to the
    # potential's zero set); with V identically 0 that is the problem itself
    problem = solvers.build_limit_problem(build_problem(cfg))
    sol = cfg.solver
    reports = solvers.deflated_search(problem, args.count,
                                      tol_residual=sol.tol_residual,
                                      max_iters=sol.max_iters,
                                      path_points=sol.path_points,
                                      seed=sol.seed)
    out = _out_dir(cfg, args.out)
    for i, rep in enumerate(reports, start=1):
        write_profile_csv(os.path.join(out, f"multi_{i}.csv"), rep.solution)
    _emit({"reports": [r.to_dict() for r in reports]})
    return 0 if all(r.converged for r in reports) else 2


_DISPATCH = {
    "check": _cmd_check,
    "norm": _cmd_norm,
    "energy": _cmd_energy,
    "geometry": _cmd_geometry,
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "multi": _cmd_multi,
}


def run(command: str, cfg: ProblemConfig, lambda_list: str = None,
        count: int = 3, out: str = None) -> int:
    """Programmatic entry mirroring the CLI; returns the exit code."""
    args = argparse.Namespace(lambda_list=lambda_list, count=count, out=out)
    try:
        return _DISPATCH[command](cfg, args)
    except (ConfigError, InadmissibleParameters, ValueError) as exc:
        return _fail(f"{type(exc).__name__}: {exc}", 1)
    except (solvers.PathCollapse, solvers.BoundaryTrap, solvers.SearchExhausted,
            solvers.DistinctnessError, EscapeFailure) as exc:
        return _fail(f"{type(exc).__name__}: {exc}", 2)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="vexlap",
        description="Variable-exponent nonlocal variational solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("config", help="path to JSON problem configuration")
        sp.add_argument("--out", default=None, help="output directory override")
        if name == "sweep":
            sp.add_argument("--lambda-list", dest="lambda_list", default=None,
                            help="comma-separated ascending penalty weights")
        if name == "multi":
            sp.add_argument("--count", type=int, default=3,
                            help="number of distinct critical points")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
    except (ConfigError, OSError) as exc:
        return _fail(f"{type(exc).__name__}: {exc}", 1)
    return run(args.command, cfg,
               lambda_list=getattr(args, "lambda_list", None),
               count=getattr(args, "count", 3),
               out=args.out)


if __name__ == "__main__":
    sys.exit(main())
