import numpy as np
import pytest
from hypothesis import given, strategies as st

from aepkit import estimators as est
from aepkit.errors import (
    MissingConditionedEnsemble, NotStationary, WindowMassLoss, WindowTooWide,
)
from aepkit.model import Density, TASEP, make_jump_law
from aepkit.simulator import SimConfig

HALF = Density.of(0.5)
EXACT_D1 = 1.1941140702193738  # TASEP, rho = 1/2, t = 1


@pytest.fixture(scope="module")
def tracks():
    cfg = SimConfig(law=TASEP, rho=HALF, T=1.0, seed=11, grid=(0.5, 1.0))
    return est.collect_tracks(cfg, 20000)


@pytest.fixture(scope="module")
def heights():
    cfg = SimConfig(law=TASEP, rho=HALF, T=1.0, seed=12, grid=(1.0,), observers=frozenset({"height"}))
    return est.HeightStats(est.collect_heights(cfg, 400, window=20))


@given(st.integers(1, 5000), st.integers(2, 80))
def test_batch_slices_partition(n, k):
    sl = est.batch_slices(n, k)
    covered = np.concatenate([np.arange(n)[s] for s in sl])
    assert np.array_equal(covered, np.arange(n))


def test_two_point_mass_and_moment(tracks):
    tp = est.two_point(tracks, 0.5, 1.0)
    assert tp.mass() == pytest.approx(0.25, abs=1e-12)
    assert abs(tp.first_moment()) < 4 * np.sqrt(EXACT_D1 / tracks.replicas)


def test_variance_route_matches_exact(tracks):
    D, se = est.diffusivity_variance(tracks, 0.5, TASEP).at(1.0)
    assert abs(D - EXACT_D1) < 4 * se


def test_green_kubo_matches_exact():
    grid = tuple(np.round(np.arange(0.05, 1.0001, 0.05), 12))
    cfg = SimConfig(law=TASEP, rho=HALF, T=1.0, seed=13, grid=grid, observers=frozenset({"current"}))
    ens = est.collect_currents(cfg, 300)
    D, se = est.green_kubo_D(ens, 0.5, TASEP, [1.0]).at(1.0)
    assert abs(D - EXACT_D1) < 4 * se + 1e-3


def test_green_kubo_needs_current_ensemble(tracks):
    with pytest.raises(NotStationary):
        est.green_kubo_D(tracks, 0.5, TASEP, [1.0])


def test_height_identities(heights):
    r = est.lemma41_check(heights, 0.5, 1.0)
    assert np.all(np.abs(r["residual"]) <= 4 * r["se"] + 1e-9)
    D = est.height_diffusivity(heights, 0.5, 1.0)
    assert abs(D.values[0] - EXACT_D1) < 4 * D.se[0]


def test_height_window_guards(heights):
    with pytest.raises(WindowMassLoss):
        est.height_diffusivity(heights, 0.5, 1.0, tail_tol=1e-30)
    cfg = SimConfig(law=TASEP, rho=HALF, T=1.0, seed=1, L=80, periodic=True, observers=frozenset({"height"}))
    with pytest.raises(WindowTooWide):
        est.collect_heights(cfg, 2, window=20)


def test_frozen_height_windows():
    ws = [est.height_window(TASEP, 0.5, t, 1e-3) for t in (1, 2, 4, 8)]
    assert ws == [8, 12, 18, 29]


@given(st.floats(0.1, 20.0), st.integers(0, 60), st.floats(0.0, 1.0))
def test_truncation_bound_monotone(t, W, rho):
    law = make_jump_law({1: 0.6, -2: 0.4})
    a = est.truncation_bound(law, rho, t, W)
    b = est.truncation_bound(law, rho, t, W + 1)
    assert 0 <= b <= a


@given(st.floats(0.01, 1.0), st.floats(0.0, 50.0))
def test_order_formula(p_plus, T):
    p_minus = 1 - p_plus
    f = est.order_formula(np.array([0.0, T, T + 1]), p_plus, p_minus)
    assert f[0] == pytest.approx(1.0)
    assert p_plus - 1e-12 <= f[2] <= f[1] <= 1 + 1e-12


def test_monotonicity_report():
    grid = np.array([1.0, 2.0, 4.0])
    up = est.DiffusivityCurve(grid, np.array([1.0, 0.8, 0.5]), np.full(3, 0.01), "synthetic")
    down = est.DiffusivityCurve(grid, np.array([1.0, 0.4, 0.1]), np.full(3, 0.01), "synthetic")
    assert est.monotonicity_report(up)["verdict"]
    assert not est.monotonicity_report(down)["verdict"]


def test_unknown_method_tag():
    with pytest.raises(ValueError):
        est.DiffusivityCurve(np.ones(1), np.ones(1), np.ones(1), "guess")


def test_missing_conditioned(tracks):
    with pytest.raises(MissingConditionedEnsemble):
        est.conditional_mean_identities({(1, 1): tracks}, 0.5, TASEP, 1.0, 1)


def test_three_class_report():
    law = make_jump_law({1: 0.7, -1: 0.3})
    cfg = SimConfig(law=law, rho=HALF, T=2.0, seed=3, grid=(2.0,))
    r = est.three_class_report(est.collect_pairs(cfg, 2000), law, 2.0)
    assert r["diff"] > 0
    for b in r["bins"]:
        assert abs(b["empirical"] - b["predicted"]) < 4 * b["se"]
