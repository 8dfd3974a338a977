import numpy as np
import pytest
from hypothesis import given, strategies as st

from aepkit.errors import ConditioningConflict, ConfigError, NotNearestNeighbor, RingTooSmall
from aepkit.model import Density, TASEP, make_jump_law
from aepkit.simulator import (
    CLASS1, CLASS2, EventStream, SimConfig, advance, init_stationary, run_ensemble,
    safe_ring_size, second_class_run, stationary_run, three_class_run,
)
from aepkit.simulator import core
from aepkit.estimators import pathwise_identities

HALF = Density.of(0.5)


def cfg(**kw):
    base = dict(law=TASEP, rho=HALF, T=2.0, seed=7, grid=(0.5, 1.0, 2.0))
    base.update(kw)
    return SimConfig(**base)


def test_same_seed_same_track():
    a = second_class_run(cfg(), 3)
    b = second_class_run(cfg(), 3)
    assert np.array_equal(a.positions, b.positions)
    others = [second_class_run(cfg(seed=s), 3).positions for s in range(8, 14)]
    assert any(not np.array_equal(a.positions, o) for o in others)


def test_thread_count_does_not_change_output():
    one = run_ensemble(cfg(), "second", 6, threads=1)
    two = run_ensemble(cfg(), "second", 6, threads=2)
    assert all(np.array_equal(x.positions, y.positions) for x, y in zip(one, two))


def test_refill_size_does_not_change_stream(monkeypatch):
    ref = second_class_run(cfg(T=8.0, grid=(8.0,)), 0).positions
    monkeypatch.setattr(core, "FIRST_CHUNK", 17)
    monkeypatch.setattr(core, "CHUNK", 64)
    assert np.array_equal(second_class_run(cfg(T=8.0, grid=(8.0,)), 0).positions, ref)


def test_ring_size_rules():
    c = cfg()
    assert c.ring_size == safe_ring_size(TASEP, 2.0) + 2
    with pytest.raises(RingTooSmall):
        cfg(L=40)
    assert cfg(L=40, periodic=True).ring_size == 40
    with pytest.raises(ConfigError):
        cfg(L=41, periodic=True)


def test_config_validation():
    with pytest.raises(ConfigError):
        cfg(grid=(2.0, 1.0))
    with pytest.raises(ConfigError):
        cfg(observers=frozenset({"bogus"}))
    with pytest.raises(ConditioningConflict):
        cfg(conditioning=((1, 1), (1, 0)))
    with pytest.raises(ConditioningConflict):
        second_class_run(cfg(conditioning=((0, 1),)))
    with pytest.raises(NotNearestNeighbor):
        three_class_run(cfg(law=make_jump_law({2: 1.0})))


@given(st.integers(0, 2 ** 31), st.floats(0.0, 3.0), st.sampled_from([TASEP, make_jump_law({1: 0.5, -2: 0.5})]))
def test_advance_conserves_particles(seed, t, law):
    c = SimConfig(law=law, rho=Density.of(0.4), T=3.0, seed=seed, L=60, periodic=True)
    stream = EventStream(seed)
    s0 = init_stationary(c, stream, [(0, CLASS2)])
    s1 = advance(s0, law, t, stream)
    assert s0.time == 0.0 and s1.time == t
    assert s0.counts() == s1.counts()
    occupied = np.flatnonzero(s1.sites)
    assert np.array_equal(np.sort(s1.psite), occupied)
    assert np.array_equal(s1.pidx[s1.psite], np.arange(s1.psite.size))


def test_conditioning_applied():
    c = cfg(conditioning=((1, 1), (-1, 0)))
    s = init_stationary(c, EventStream(1), [(0, CLASS2)])
    assert s.sites[1] == CLASS1 and s.sites[-1] == 0 and s.sites[0] == CLASS2


def test_stationary_density():
    c = SimConfig(law=TASEP, rho=Density.of(0.3), T=1.0, seed=2, grid=(1.0,), L=2000, periodic=True)
    rec = stationary_run(c)
    assert rec.occ.shape == (2, 2000)
    assert abs(rec.occ[-1].mean() - 0.3) < 0.05


def test_pathwise_height_identities():
    c = SimConfig(law=TASEP, rho=HALF, T=3.0, seed=5, grid=(1.0, 2.0, 3.0), observers=frozenset({"height"}))
    rec = stationary_run(c)
    assert pathwise_identities(rec, 20) == {"current": 0, "increment": 0}


def test_three_class_order_starts_below():
    pair = three_class_run(cfg(law=make_jump_law({1: 0.7, -1: 0.3}), grid=(0.0, 1.0)))
    assert pair.order[0] == 1
    assert pair.contact_time[0] == 0.0 and pair.contact_time[-1] <= 1.0 + 1e-12


def test_second_class_drift():
    tracks = run_ensemble(cfg(rho=Density.of(0.2), grid=(2.0,)), "second", 3000)
    X = np.array([t.positions[-1] for t in tracks])
    # mean (1 - 2 rho) b t = 1.2, sd about sqrt(2.4) per replica
    assert abs(X.mean() - 1.2) < 4 * X.std() / np.sqrt(X.size)
