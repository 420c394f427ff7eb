"""Fast solver-level tests; full end-to-end solves live in test_acceptance."""

import numpy as np
import pytest

from vexlap import solvers
from vexlap.config import build_problem, parse_config
from vexlap.grid import GridFunction

from conftest import default_raw


@pytest.fixture(scope="module")
def setup64(small_problem_module):
    return solvers.prepare_setup(small_problem_module, dictionary_size=6)


@pytest.fixture(scope="module")
def small_problem_module():
    return build_problem(parse_config(default_raw(N=64)))


def test_prepare_setup_geometry(small_problem_module, setup64):
    geom = setup64.geometry
    assert geom.rho > 0 and geom.tau0 > 0
    assert small_problem_module.alpha <= geom.alpha_max
    assert small_problem_module.beta <= geom.beta_max
    assert setup64.w0.values.max() > 0
    # w0 is supported inside the potential's zero core
    omega0 = small_problem_module.V.omega0
    nz = setup64.w0.nodes[setup64.w0.values > 0]
    assert nz.min() >= omega0[0] - setup64.w0.h
    assert nz.max() <= omega0[1] + setup64.w0.h


def test_deflation_factor():
    u = GridFunction.hat(0.0, 1.0, 16)
    w = GridFunction.bump(0.0, 1.0, 16)
    d2 = u.l2_distance(w) ** 2
    assert solvers._deflation(u, [w]) == pytest.approx(1.0 + 1.0 / d2, rel=1e-12)
    assert solvers._deflation(u, []) == 1.0
    assert solvers._deflation(u, [w, w]) == pytest.approx(
        (1.0 + 1.0 / d2) ** 2, rel=1e-12)


def test_ray_max_finds_interior_maximum(small_problem_module, setup64):
    prob = small_problem_module
    e = solvers.make_e_point(prob, setup64.v0, setup64.geometry.rho)
    shape = e.interior_values / np.linalg.norm(e.interior_values)
    t, th = solvers._ray_max(prob, shape, 1e-4, 1e4)
    assert th > 0.0
    zero = prob.zero()
    # the returned t beats its neighbors on the ray
    for f in (0.9, 1.1):
        assert prob.energy_value(zero.with_interior(f * t * shape)) <= th + 1e-12


def test_ball_negative_start(small_problem_module, setup64):
    prob = small_problem_module
    geom = setup64.geometry
    tau = min(geom.tau0, geom.rho / prob.norm_lambda(setup64.w0)) / 2.0
    # tau0 is a guess at variable exponent; a few halvings must reach I < 0
    tau_try = tau
    found = False
    for _ in range(60):
        if prob.energy_value(setup64.w0.scaled(tau_try)) < 0.0:
            found = True
            break
        tau_try *= 0.5
    assert found


def test_beta_zero_empty_negative_cone():
    cfg = parse_config(default_raw(N=64))
    prob = build_problem(cfg)
    import dataclasses
    prob_nobeta = build_problem(dataclasses.replace(cfg, beta=1e-300))
    prob_nobeta.beta = 0.0
    w0 = GridFunction.hat(0.0, 1.0, 64, center=0.5, width=0.2)
    rep = solvers.ball_minimize(prob_nobeta, rho=1.0, tau0_value=0.1, w0=w0,
                                max_iters=50)
    assert not rep.converged
    assert "EmptyNegativeCone" in rep.diagnostic
    assert rep.critical_value == 0.0


def test_mountain_pass_rejects_zero_escape(small_problem_module):
    with pytest.raises(ValueError):
        solvers.mountain_pass(small_problem_module,
                              small_problem_module.zero())


def test_lambda_sweep_validates_order(small_problem_module):
    with pytest.raises(ValueError):
        solvers.lambda_sweep(small_problem_module, [])
    with pytest.raises(ValueError):
        solvers.lambda_sweep(small_problem_module, [10.0, 1.0])


def test_deflated_search_validates_count(small_problem_module):
    with pytest.raises(ValueError):
        solvers.deflated_search(small_problem_module, 0)


def test_build_limit_problem(small_problem_module):
    lp = solvers.build_limit_problem(small_problem_module)
    omega0 = small_problem_module.V.omega0
    assert (lp.a, lp.b) == omega0
    assert lp.V.zero_set == ((lp.a, lp.b),)
    u = GridFunction.bump(lp.a, lp.b, lp.n_cells)
    assert lp.potential_mass(u) == 0.0
    # penalty drops out: energy does not depend on lambda
    assert lp.energy_value(u) == pytest.approx(
        lp.with_lambda(100.0).energy_value(u), rel=1e-14)


def test_limit_problem_without_zero_set():
    cfg = parse_config(default_raw(N=64, V="1 + x"))
    prob = build_problem(cfg)
    with pytest.raises(ValueError):
        solvers.build_limit_problem(prob)


def test_report_serialization(small_problem_module):
    u = GridFunction.hat(0.0, 1.0, 64)
    rep = solvers.SolverReport(u, 1.5, 1e-8, 10, "saddle",
                               ((2.0, 1e-3), (1.5, 1e-8)), True)
    d = rep.to_dict()
    assert d["classification"] == "saddle"
    assert d["history"] == [[2.0, 1e-3], [1.5, 1e-8]]
    assert d["solution"]["values"][0] == 0.0
    rec = solvers.SweepRecord(2.0, rep, rep, 0.1, 0.2, 0.3, 0.4)
    rd = rec.to_dict()
    assert rd["lambda"] == 2.0 and rd["status"] == "ok"
