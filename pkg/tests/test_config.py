import json

import pytest

from vexlap.config import (ConfigError, build_problem, load_config,
                           parse_config)

from conftest import default_raw


def test_default_round_trip():
    cfg = parse_config(default_raw())
    assert cfg.omega == (0.0, 1.0)
    assert cfg.lam == 1.0
    assert cfg.N == 128
    assert cfg.solver.tol_residual == 1e-6
    assert cfg.quadrature.g == 4


def test_shipped_default_config_loads():
    import vexlap
    import os
    path = os.path.join(os.path.dirname(vexlap.__file__), "default.json")
    cfg = load_config(path)
    assert cfg.N == 128
    build_problem(parse_config(default_raw(N=64)))  # and it builds


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="alhpa"):
        parse_config(default_raw(alhpa=1.0))
    with pytest.raises(ConfigError, match="quadrature"):
        parse_config(default_raw(quadrature={"gg": 3}))


def test_missing_key_rejected():
    raw = default_raw()
    del raw["V"]
    with pytest.raises(ConfigError, match="V"):
        parse_config(raw)


def test_negative_alpha_rejected():
    with pytest.raises(ConfigError, match="alpha must be > 0"):
        parse_config(default_raw(alpha=-1))


def test_bad_omega():
    with pytest.raises(ConfigError):
        parse_config(default_raw(omega=[1.0, 0.0]))
    with pytest.raises(ConfigError):
        parse_config(default_raw(omega=[0.0]))


def test_dimension_must_be_one():
    with pytest.raises(ConfigError, match="n must be 1"):
        parse_config(default_raw(n=2))


def test_grid_must_be_power_of_two():
    for bad in (63, 65, 100, 32):
        with pytest.raises(ConfigError, match="N"):
            parse_config(default_raw(N=bad))
    parse_config(default_raw(N=256))


def test_expression_arity_checked():
    with pytest.raises(ConfigError, match="p"):
        parse_config(default_raw(p="2.5 + y"))
    with pytest.raises(ConfigError, match="V"):
        parse_config(default_raw(V="x +"))


def test_json_error_location(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{"omega": [0, 1],\n  "p": }')
    with pytest.raises(ConfigError, match="line 2"):
        load_config(f)


def test_solver_block_validation():
    with pytest.raises(ConfigError, match="tol_residual"):
        parse_config(default_raw(solver={"tol_residual": 0}))
    with pytest.raises(ConfigError, match="seed"):
        parse_config(default_raw(solver={"seed": -1}))
    cfg = parse_config(default_raw(solver={"max_iters": 10, "seed": 3}))
    assert cfg.solver.max_iters == 10 and cfg.solver.seed == 3


def test_lambda_key_maps_to_lam():
    cfg = parse_config(default_raw(**{"lambda": 42.0}))
    assert cfg.lam == 42.0
    raw = default_raw()
    del raw["lambda"]
    with pytest.raises(ConfigError, match="lambda"):
        parse_config(raw)
