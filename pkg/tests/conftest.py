import numpy as np
import pytest

from vexlap.config import parse_config, build_problem

DEFAULT_RAW = {
    "omega": [0.0, 1.0],
    "n": 1,
    "p": "2.2 + 0.3*sin(x)",
    "q": "1.5 + 0.05*cos(x - y)",
    "s": "0.35",
    "k": "1.2 + 0.1*x",
    "V": "max(0, abs(x - 0.5) - 0.2)^2",
    "alpha": 1.5,
    "beta": 0.45,
    "lambda": 1.0,
    "N": 128,
}


def default_raw(**overrides):
    raw = dict(DEFAULT_RAW)
    raw.update(overrides)
    return raw


@pytest.fixture(scope="session")
def small_cfg():
    """Default problem at N=64: cheap enough for unit tests."""
    return parse_config(default_raw(N=64))


@pytest.fixture(scope="session")
def small_problem(small_cfg):
    return build_problem(small_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
