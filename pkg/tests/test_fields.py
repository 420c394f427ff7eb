import numpy as np
import pytest

from vexlap import exprs
from vexlap.fields import (EmptyZeroSetError, check_hypotheses, make_field,
                           make_potential)

OMEGA = (0.0, 1.0)


def default_fields():
    p = make_field("2.2 + 0.3*sin(x)", 1, OMEGA)
    q = make_field("1.5 + 0.05*cos(x - y)", 2, OMEGA)
    s = make_field("0.35", 2, OMEGA)
    k = make_field("1.2 + 0.1*x", 1, OMEGA)
    V = make_potential("max(0, abs(x - 0.5) - 0.2)^2", OMEGA)
    return p, q, s, k, V


def test_inferred_bounds():
    p, q, s, k, _ = default_fields()
    assert p.inferred_min == pytest.approx(2.2, abs=1e-6)
    assert p.inferred_max == pytest.approx(2.2 + 0.3 * np.sin(1.0), abs=1e-4)
    assert q.inferred_max == pytest.approx(1.55, abs=1e-9)
    assert s.is_constant and s.inferred_min == 0.35
    assert k.inferred_min == pytest.approx(1.2, abs=1e-12)
    assert k.inferred_max == pytest.approx(1.3, abs=1e-12)


def test_arity_enforced():
    with pytest.raises(exprs.ArityError):
        make_field("x - y", 1, OMEGA)
    f = make_field("x*0 + 2.5", 2, OMEGA)
    assert f(0.3, 0.7) == pytest.approx(2.5)


def test_potential_zero_set():
    V = make_potential("max(0, abs(x - 0.5) - 0.2)^2", OMEGA)
    assert len(V.zero_set) == 1
    lo, hi = V.zero_set[0]
    assert lo == pytest.approx(0.3, abs=1e-3)
    assert hi == pytest.approx(0.7, abs=1e-3)
    a0, b0 = V.omega0
    assert a0 == pytest.approx(lo + (hi - lo) / 3.0, abs=1e-9)
    assert b0 == pytest.approx(hi - (hi - lo) / 3.0, abs=1e-9)


def test_potential_without_zero_set():
    V = make_potential("1 + x", OMEGA)
    assert V.zero_set == ()
    assert V.omega0 is None


def test_empty_zero_set_error_surfaces():
    from vexlap.fields import extract_zero_set
    with pytest.raises(EmptyZeroSetError):
        extract_zero_set(exprs.parse("1 + x"), OMEGA, 1e-12, 101)


def test_default_hypotheses_all_pass():
    p, q, s, k, V = default_fields()
    report = check_hypotheses(p, q, s, k, V, 1)
    assert report.all_passed, [e.name for e in report.failures()]
    assert report.bounds["p_minus"] > 2.0
    assert report.bounds["q_plus"] < report.bounds["p_minus"]


def test_hypothesis_failure_has_witness():
    p, q, s, k, V = default_fields()
    bad_q = make_field("1.5 + x + y", 2, OMEGA)  # q+ > p-, Q2 fails
    report = check_hypotheses(p, bad_q, s, k, V, 1)
    assert not report.all_passed
    assert not report["Q2"].passed


def test_asymmetric_q_detected():
    p, _, s, k, V = default_fields()
    asym = make_field("1.5 + 0.01*(x - y)", 2, OMEGA)
    report = check_hypotheses(p, asym, s, k, V, 1)
    entry = report["Q1"]
    assert not entry.passed
    assert entry.witness is not None


def test_report_serializes():
    p, q, s, k, V = default_fields()
    d = check_hypotheses(p, q, s, k, V, 1).to_dict()
    assert d["all_passed"] is True
    assert {e["name"] for e in d["entries"]} >= {"P1a", "P2", "Q1", "Q2", "Q3",
                                                 "S1", "S2", "K1", "V1"}
