import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import ortho_group

from flr.errors import ConfigError, DomainError, ShapeError
from flr.filters import FilterSpec, filter_apply, filter_eval, verify_filter_properties

from oracles import itr_partial_sum

lams = st.floats(1e-4, 0.999)
ts = st.floats(0.0, 100.0)
SPECS = [FilterSpec("tr"), FilterSpec("itr", 2), FilterSpec("itr", 4), FilterSpec("gf")]


def test_parse_and_str():
    assert FilterSpec.parse("tr") == FilterSpec("tikhonov")
    assert FilterSpec.parse("itr:s=4") == FilterSpec("iterated_tikhonov", 4)
    assert FilterSpec.parse("gf").kind == "gradient_flow"
    for s in ("tr", "itr:s=3", "gf"):
        assert str(FilterSpec.parse(s)) == s
    for bad in ("xx", "itr:s=0", "itr:q=2", "tr:s=2", "itr:s=x"):
        with pytest.raises(ConfigError):
            FilterSpec.parse(bad)


def test_constants():
    tr, itr, gf = FilterSpec("tr"), FilterSpec("itr", 3), FilterSpec("gf")
    assert (tr.nu_psi, tr.B, tr.D, tr.E, tr.F_nu(1)) == (1, 1, 1, 1, 1)
    assert (itr.nu_psi, itr.B, itr.D, itr.E, itr.F_nu(3)) == (3, 3, 3, 3, 1)
    assert math.isinf(gf.nu_psi) and gf.B == gf.D == gf.E == 1
    assert gf.F_nu(2) == pytest.approx((2 / math.e) ** 2)


def test_eval_examples():
    assert filter_eval("tr", 0.5, 0.5) == 1.0
    assert filter_eval("gf", 0.3, 0.0) == pytest.approx(1 / 0.3, rel=1e-15)
    assert filter_eval("itr:s=2", 0.5, 0.5) == pytest.approx(1.5, rel=1e-14)
    assert itr_partial_sum(0.5, 0.5, 2) == 1.5
    assert filter_eval("itr:s=3", 0.2, 0.0) == pytest.approx(15.0)
    with pytest.raises(DomainError):
        filter_eval("tr", 1.0, 0.5)
    with pytest.raises(DomainError):
        filter_eval("tr", 0.5, -1.0)


@settings(max_examples=200, deadline=None)
@given(lams, ts)
def test_itr_one_is_tikhonov(lam, t):
    assert filter_eval("itr:s=1", lam, t) == pytest.approx(filter_eval("tr", lam, t), rel=1e-13)


@settings(max_examples=200, deadline=None)
@given(lams, ts, st.integers(1, 6))
def test_itr_matches_partial_sum(lam, t, s):
    assert filter_eval(FilterSpec("itr", s), lam, t) == pytest.approx(itr_partial_sum(lam, t, s), rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(lams, st.floats(0, 1e-6))
def test_small_t_series(lam, t):
    x = t / lam
    series = sum((-x) ** k / math.factorial(k + 1) for k in range(8)) / lam
    assert filter_eval("gf", lam, t) == pytest.approx(series, rel=1e-13)
    assert filter_eval("itr:s=3", lam, t) == pytest.approx(itr_partial_sum(lam, t, 3), rel=1e-13)


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(SPECS), lams, ts)
def test_residual_in_unit_interval(spec, lam, t):
    r = t * filter_eval(spec, lam, t)
    assert -1e-12 <= r <= 1 + 1e-12


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 0.99), st.floats(1e-3, 0.99), st.floats(1e-6, 100))
def test_tikhonov_monotone_in_lambda(l1, l2, t):
    lo, hi = sorted((l1, l2))
    assert filter_eval("tr", lo, t) >= filter_eval("tr", hi, t)


def test_apply_examples():
    I = np.eye(4)
    assert np.allclose(filter_apply("tr", 0.25, np.zeros((4, 4))), 4 * I)
    d = np.array([0.0, 0.1, 1.0, 3.0])
    assert np.allclose(filter_apply("gf", 0.2, np.diag(d)), np.diag(filter_eval("gf", 0.2, d)))
    rng = np.random.default_rng(0)
    B = rng.standard_normal((6, 6))
    A = B @ B.T
    assert np.allclose(filter_apply("tr", 0.1, A), np.linalg.inv(0.1 * np.eye(6) + A), rtol=1e-9, atol=1e-12)
    with pytest.raises(ShapeError):
        filter_apply("tr", 0.1, B)


@pytest.mark.parametrize("spec", SPECS, ids=str)
def test_apply_conjugation(spec):
    rng = np.random.default_rng(4)
    B = rng.standard_normal((5, 5))
    A = B @ B.T
    Q = ortho_group.rvs(5, random_state=5)
    lhs = filter_apply(spec, 0.3, Q @ A @ Q.T)
    rhs = Q @ filter_apply(spec, 0.3, A) @ Q.T
    assert np.max(np.abs(lhs - rhs)) <= 1e-8


LAMBDAS = [1e-3, 1e-2, 0.1, 0.5]


@pytest.mark.parametrize("text", ["tr", "itr:s=2", "itr:s=3", "itr:s=4"])
def test_tikhonov_families_pass_all(text):
    rep = verify_filter_properties(FilterSpec.parse(text), LAMBDAS, 1.28)
    assert rep["pass"], rep["passes"]


def test_gradient_flow_source_bound():
    rep = verify_filter_properties(FilterSpec("gf"), LAMBDAS, 1.28)
    assert rep["passes"]["prop2"]
    for row in rep["per_lambda"]:
        nu2 = next(e for e in row["prop2"] if e["nu"] == 2)
        assert nu2["sup"] <= (2 / math.e) ** 2 * row["lambda"] ** 2 * 1.05


def test_gradient_flow_peak_value():
    # (1 + x)(1 - e^{-x}) / x peaks near 1.2985, above B = D = 1
    rep = verify_filter_properties(FilterSpec("gf"), LAMBDAS, 1.28)
    peak = max(r["prop1"]["sup"] for r in rep["per_lambda"])
    assert peak == pytest.approx(1.2985, abs=1e-3)
    assert not rep["passes"]["prop1"] and not rep["passes"]["prop3"]


def test_corrupted_filter_fails_prop1():
    rep = verify_filter_properties(FilterSpec("tr"), LAMBDAS, 1.28,
                                   psi=lambda lam, t: 2 * filter_eval("tr", lam, t))
    assert not rep["passes"]["prop1"]


def test_report_is_json():
    import json
    json.dumps(verify_filter_properties(FilterSpec("gf"), [0.1], 1.0))
