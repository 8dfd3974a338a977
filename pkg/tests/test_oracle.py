import numpy as np
import pytest
from hypothesis import given, strategies as st

from aepkit import oracle
from aepkit.errors import DimensionTooLarge, SupportTooWide, TimeTooLarge
from aepkit.model import TASEP, chi_of, make_jump_law

# exact values on small rings, frozen from the sparse uniformization solver
FROZEN_D = {(12, 1.0): 1.1941140702193738, (14, 2.0): 1.3297404926304943}


@pytest.mark.parametrize("L, t", sorted(FROZEN_D))
def test_frozen_diffusivity(L, t):
    assert oracle.exact_diffusivity(L, 0.5, TASEP, t) == pytest.approx(FROZEN_D[(L, t)], abs=1e-10)


def test_generator_rows_sum_to_zero():
    G = oracle.build_generator(8, make_jump_law({1: 0.6, -2: 0.4}))
    assert np.abs(np.asarray(G.matrix.sum(axis=1))).max() < 1e-12


@given(st.floats(0.1, 0.9), st.floats(0.05, 2.0))
def test_two_point_mass_and_drift(rho, t):
    law = make_jump_law({1: 0.7, -1: 0.3})
    S = oracle.exact_two_point(8, rho, law, t)
    chi = chi_of(rho)
    assert S.sum() == pytest.approx(chi, abs=1e-11)
    assert S.min() > -1e-12
    # drift of the second-class particle before it can wrap around
    if t <= 0.5:
        assert oracle.first_moment(S, chi) == pytest.approx((1 - 2 * rho) * law.b * t, abs=2e-3)


def test_two_point_initial():
    S = oracle.exact_two_point(6, 0.3, TASEP, 0.0)
    assert S[0] == pytest.approx(0.21) and np.abs(S[1:]).max() < 1e-14


def test_guards():
    with pytest.raises(DimensionTooLarge):
        oracle.exact_two_point(16, 0.5, TASEP, 1.0)
    with pytest.raises(TimeTooLarge):
        oracle.exact_diffusivity(8, 0.5, TASEP, 5.0)
    with pytest.raises(SupportTooWide):
        oracle.ring_h1_seminorm([((0, 3), 1.0)], 1.0, 10, TASEP)


def test_symmetric_ring_norm_approaches_line_value():
    phi = [((0, 1), 1.0), ((0, 2), -1.0)]
    vals = [oracle.ring_h1_seminorm(phi, 0.5, L, TASEP, flavor="symmetric") for L in (10, 12, 14)]
    gaps = np.abs(np.array(vals) - 0.75)
    assert gaps[-1] < 1e-4 and np.all(np.diff(gaps) < 0)
