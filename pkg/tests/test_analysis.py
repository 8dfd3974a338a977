import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from aepkit import analysis as an
from aepkit.errors import BadOrder, DriftZeroError, GridMismatch, InsufficientSpan, TailDominates
from aepkit.model import TASEP, make_jump_law


@given(st.floats(0.0, 3.0), st.floats(0.01, 10.0))
def test_laplace_of_power_callable(k, lam):
    v = an.laplace_transform(lambda t: t ** k, lam)
    assert v.value == pytest.approx(math.gamma(k + 1) / lam ** (k + 1), rel=1e-9)


@pytest.mark.parametrize("k", [0.5, 1.0, 4 / 3])
def test_laplace_of_samples_with_tail(k):
    ts = np.geomspace(1e-3, 800.0, 300)
    for lam in (1 / 800, 0.01, 1.0):
        v = an.laplace_transform((ts, ts ** k), lam, tail="fit")
        exact = math.gamma(k + 1) / lam ** (k + 1)
        assert v.value == pytest.approx(exact, rel=2e-3)
        assert v.error >= 0


def test_tail_dominates():
    ts = np.geomspace(0.01, 10.0, 50)
    with pytest.raises(TailDominates):
        an.laplace_transform((ts, ts), 1e-3)


@given(st.floats(0.1, 5.0), st.floats(-0.9, 2.0), st.floats(1e-3, 2.0), st.floats(1.0, 100.0))
def test_tail_integral(a, k, lam, T):
    model = an.TailModel(a, k)
    ref, _ = quad(lambda t: math.exp(-lam * t) * a * t ** k, T, math.inf, epsabs=0, epsrel=1e-10)
    assert model.integral(lam, T) == pytest.approx(ref, rel=1e-6, abs=1e-300)
    assert model.shifted(0.1, T).exponent == pytest.approx(k + 0.1)


@given(st.floats(-3.0, 3.0), st.floats(0.1, 10.0))
def test_exponent_fit_exact_power(slope, amp):
    xs = np.geomspace(1.0, 100.0, 9)
    fit = an.exponent_fit(xs, amp * xs ** slope, n_boot=50)
    assert fit.slope == pytest.approx(slope, abs=1e-9)
    assert fit.ci[0] <= fit.slope <= fit.ci[1]


def test_exponent_fit_span():
    with pytest.raises(InsufficientSpan):
        an.exponent_fit([1, 2, 3, 4], [1, 2, 3, 4])
    with pytest.raises(InsufficientSpan):
        an.exponent_fit([1, 10], [1, 2])


@given(st.floats(0.05, 2.0))
def test_upper_bound_holds_for_power(beta):
    # int e^{-lam t} t^beta dt = Gamma(1+beta) lam^{-(1+beta)}
    ub = an.tauberian_upper(math.gamma(1 + beta), beta, lambda0=1.0)
    ts = np.geomspace(1.0, 1e6, 50)
    assert np.all(ub(ts) >= ts ** beta)
    assert ub.c2 == pytest.approx(math.e * math.gamma(1 + beta))


@pytest.mark.parametrize("alpha, beta", [(0.5, 0.5), (1.0, 0.5), (1.5, 1 / 3)])
def test_lower_bound_holds_for_power(alpha, beta):
    lb = an.tauberian_lower(1.0, math.gamma(1 + beta), alpha, beta)
    ts = np.geomspace(max(lb.t1, 1.0001), 1e8, 100)
    assert lb.c4 > 0
    assert np.all(lb(ts) <= ts ** beta)


def test_lower_bound_order():
    with pytest.raises(BadOrder):
        an.tauberian_lower(1.0, 1.0, 0.3, 0.5)


def _curve(T=800.0):
    grid = np.geomspace(0.05, T, 60)
    return grid, grid ** (1 / 3)


def test_weak_sense_verdict_on_kpz_scaling():
    grid, D = _curve()
    v = an.weak_sense_verdict(grid, D, make_jump_law({1: 0.75, -1: 0.25}), grid, D)
    assert v["exponent"]["pass_tasep"] and v["exponent"]["pass_law"]
    assert v["ratio"]["pass"] and v["ratio"]["min"] == pytest.approx(1.0)


def test_weak_sense_guards():
    grid, D = _curve()
    with pytest.raises(GridMismatch):
        an.weak_sense_verdict(grid, D, TASEP, grid[:-1], D[:-1])
    with pytest.raises(DriftZeroError):
        an.weak_sense_verdict(grid, D, make_jump_law({1: 0.5, -1: 0.5}), grid, D)
