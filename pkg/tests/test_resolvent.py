import numpy as np
import pytest
from hypothesis import given, strategies as st

from aepkit import resolvent as rs
from aepkit.errors import NonPositiveLambda, TruncationInsufficient
from aepkit.model import TASEP


def test_frozen_gamma_and_q():
    p = rs.gamma_of(3.0)
    assert p.gamma == pytest.approx(0.20871215252208, abs=1e-12)
    assert rs.q_kernel(p, 4)[0] == pytest.approx(0.263762616, abs=1e-9)


@given(st.floats(1e-9, 1e4))
def test_gamma_root(lam):
    p = rs.gamma_of(lam)
    assert 0 < p.gamma < 1
    assert p.gamma + 1 / p.gamma == pytest.approx(lam + 2, rel=1e-12)
    assert p.one_minus_gamma == pytest.approx(1 - p.gamma, rel=1e-9, abs=1e-15)


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_nonpositive_lambda(lam):
    with pytest.raises(NonPositiveLambda):
        rs.gamma_of(lam)


@given(st.integers(1, 6), st.floats(1e-6, 10.0))
def test_closed_form_matches_numeric(k, lam):
    r = rs.prop22_value(k, lam)
    assert abs(r.value_closed - r.value_numeric) <= 1e-10 * max(1.0, abs(r.value_closed))
    assert r.c1_numeric == pytest.approx(r.c1, rel=1e-8)
    assert r.c2_numeric == pytest.approx(r.c2, rel=1e-6, abs=1e-14)


@given(st.floats(1e-4, 10.0))
def test_q_solves_delta(lam):
    p = rs.gamma_of(lam)
    u = rs.solve_resolvent(lam, rs.ReducedKernel.delta(0))
    q = rs.q_kernel(p, u.N_trunc)
    assert np.allclose(u.values, q.values, rtol=1e-9, atol=1e-12)


@given(st.integers(1, 8), st.floats(1e-3, 5.0))
def test_resolvent_residual(k, lam):
    rhs = rs.V_kernel(k)
    u = rs.solve_resolvent(lam, rhs)
    Su = rs.s_apply(u)
    resid = lam * u.values - Su.values[: u.values.size]
    b = np.zeros_like(resid)
    b[: rhs.values.size] = rhs.values
    assert np.max(np.abs(resid - b)) < 1e-9 * max(1.0, np.max(np.abs(u.values)))


def test_positive_and_bounded_in_lambda():
    vals = [rs.vk_closed_form(3, lam) for lam in np.geomspace(1e-8, 1e-1, 8)]
    assert min(vals) > 0 and max(vals) / min(vals) < 10


def test_current_scaling_slope():
    fit = rs.s_norm_scaling(rs.current_kernel(TASEP), np.geomspace(1e-8, 1e-2, 7))
    assert fit.slope == pytest.approx(-0.5, abs=0.02)


def test_reduce_and_inner():
    f = {(0, 1): 1.0, (0, 3): -2.0}
    g = {(5, 6): 0.5, (2, 4): 1.0}
    assert rs.reduce(f).dot(rs.reduce(g)) == pytest.approx(rs.translation_inner(f, g))
    with pytest.raises(ValueError):
        rs.reduce({(1, 1): 1.0})


def test_truncation_guard():
    with pytest.raises(TruncationInsufficient):
        rs.solve_resolvent(0.1, rs.V_kernel(5), N_trunc=2)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_c_constants_near_inverse_sqrt_lambda(k):
    lams = np.geomspace(1e-8, 1.0, 30)
    gaps = []
    for lam in lams:
        c1, c2 = rs.gamma_of(lam).c_constants(k)
        gaps.append(max(abs(c1 - lam ** -0.5), abs(c2 - lam ** -0.5)))
    # bounded uniformly in lambda although lambda^{-1/2} reaches 1e4
    assert max(gaps) < 2 * k + 3
