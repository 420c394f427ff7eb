import numpy as np
import pytest

from vexlap.assembly import GradingOverflowError, KernelQuadrature
from vexlap.fields import make_field
from vexlap.grid import GridFunction

from oracles import oracle_gagliardo_modular

OMEGA = (0.0, 1.0)
N = 64


def make_qs(q_src="1.5 + 0.05*cos(x - y)", s_src="0.35"):
    return make_field(q_src, 2, OMEGA), make_field(s_src, 2, OMEGA)


@pytest.fixture(scope="module")
def kq_omega():
    q, s = make_qs()
    return KernelQuadrature(0.0, 1.0, N, q, s, region="omega")


@pytest.fixture(scope="module")
def kq_full():
    q, s = make_qs()
    return KernelQuadrature(0.0, 1.0, N, q, s, region="full")


def test_modular_matches_oracle(kq_omega):
    q, s = make_qs()
    for u in (GridFunction.hat(0.0, 1.0, N), GridFunction.bump(0.0, 1.0, N)):
        got = kq_omega.modular(u.values)
        want = oracle_gagliardo_modular(u, q, s, resolution=512)
        assert got == pytest.approx(want, rel=2e-4)


def test_constant_exponent_scaling_law():
    # with q constant the modular is |c|^q0 homogeneous
    q, s = make_qs(q_src="1.8")
    kq = KernelQuadrature(0.0, 1.0, N, q, s, region="omega")
    u = GridFunction.bump(0.0, 1.0, N)
    base = kq.modular(u.values)
    for c in (0.25, 3.0, -17.0):
        assert kq.modular(c * u.values) == pytest.approx(
            abs(c) ** 1.8 * base, rel=1e-9)


def test_swap_invariance_for_symmetric_fields():
    q, s = make_qs()
    u = GridFunction.bump(0.0, 1.0, N)
    plain = KernelQuadrature(0.0, 1.0, N, q, s, region="omega")
    swap = KernelQuadrature(0.0, 1.0, N, q, s, region="omega", swapped=True)
    assert plain.modular(u.values) == pytest.approx(swap.modular(u.values),
                                                    rel=1e-12)


def test_full_region_exceeds_omega(kq_omega, kq_full):
    u = GridFunction.bump(0.0, 1.0, N)
    assert kq_full.modular(u.values) > kq_omega.modular(u.values)


def test_kinetic_is_energy_weighted_modular(kq_full):
    # kinetic uses the 1/q weight, so it lies between mod/q+ and mod/q-
    u = GridFunction.bump(0.0, 1.0, N)
    mod = kq_full.modular(u.values)
    kin = kq_full.kinetic(u.values)
    assert mod / 1.55 <= kin <= mod / 1.45


def test_weak_vector_is_modular_gradient(kq_full):
    # d/dt modular-with-1/q-weight matches the assembled weak vector
    rng = np.random.default_rng(7)
    vals = rng.standard_normal(N + 1)
    vals[0] = vals[-1] = 0.0
    vec = kq_full.weak_vector(vals)[1:-1]
    h = 1e-6
    for i in (5, N // 2, N - 7):
        e = np.zeros(N + 1)
        e[i] = 1.0
        fd = (kq_full.kinetic(vals + h * e) - kq_full.kinetic(vals - h * e)) / (2 * h)
        assert vec[i - 1] == pytest.approx(fd, rel=2e-5, abs=1e-10)


def test_seminorm_unit_modular(kq_omega):
    u = GridFunction.bump(0.0, 1.0, N)
    t = kq_omega.seminorm(u.values)
    assert kq_omega.modular(u.values / t) == pytest.approx(1.0, abs=1e-8)


def test_seminorm_homogeneous(kq_omega):
    u = GridFunction.bump(0.0, 1.0, N)
    base = kq_omega.seminorm(u.values)
    assert kq_omega.seminorm(4.0 * u.values) == pytest.approx(4.0 * base,
                                                              rel=1e-8)


def test_zero_modular():
    q, s = make_qs()
    kq = KernelQuadrature(0.0, 1.0, N, q, s, region="omega")
    z = np.zeros(N + 1)
    assert kq.modular(z) == 0.0
    assert kq.seminorm(z) == 0.0


def test_tail_remainder_reported_and_shrinks(kq_full):
    # the kernel decays like d^-(1+qs) with qs < 1, so the truncated exterior
    # mass is not negligible; it is reported as a bound and must shrink as
    # the truncation radius grows (roughly like R^-qs)
    q, s = make_qs()
    u = GridFunction.bump(0.0, 1.0, N)
    bound = kq_full.tail_remainder_bound(u.values)
    assert 0.0 < bound < 0.1 * kq_full.modular(u.values)
    far = KernelQuadrature(0.0, 1.0, N, q, s, region="full", R_tail=1000.0)
    assert far.tail_remainder_bound(u.values) < 0.15 * bound
    # omega region has no exterior remainder
    omega = KernelQuadrature(0.0, 1.0, N, q, s, region="omega")
    assert omega.tail_remainder_bound(u.values) == 0.0


def test_node_budget_enforced():
    q, s = make_qs()
    with pytest.raises(GradingOverflowError):
        KernelQuadrature(0.0, 1.0, N, q, s, region="omega", node_budget=1000)


def test_workers_do_not_change_results(monkeypatch, kq_omega):
    u = GridFunction.bump(0.0, 1.0, N)
    base = kq_omega.modular(u.values)
    monkeypatch.setenv("VEXLAP_WORKERS", "4")
    assert kq_omega.modular(u.values) == base
