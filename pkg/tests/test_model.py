import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from aepkit.errors import (
    ConfigError, DriftZeroError, EmptySupport, NegativeProbability, NotNormalized, OutOfRange,
)
from aepkit.model import Density, TASEP, chi_of, dilate, make_jump_law, sublattice_decompose


@st.composite
def laws(draw, max_range=4):
    zs = draw(st.lists(st.integers(-max_range, max_range).filter(bool), min_size=1, max_size=4,
                       unique=True))
    ws = draw(st.lists(st.integers(1, 20), min_size=len(zs), max_size=len(zs)))
    total = sum(ws)
    return make_jump_law({z: Fraction(w, total) for z, w in zip(zs, ws)})


def test_tasep_constants():
    assert TASEP.b == 1.0 and TASEP.R == 1 and TASEP.kappa == 1
    assert TASEP.is_tasep and TASEP.nearest_neighbor and not TASEP.drift_zero
    assert TASEP.second_moment() == 1.0


def test_string_fractions_and_zero_entries():
    law = make_jump_law({1: "2/3", -1: "1/3", 3: 0})
    assert law.offsets == (-1, 1)
    assert law.b == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("entries, exc", [
    ({1: -0.1, 2: 1.1}, NegativeProbability),
    ({1: 0.5}, NotNormalized),
    ({1: 0.0}, EmptySupport),
    ({0: 1.0}, EmptySupport),
])
def test_invalid_laws(entries, exc):
    with pytest.raises(exc):
        make_jump_law(entries)
    assert issubclass(exc, ConfigError)


def test_drift_zero_flagged():
    law = make_jump_law({1: 0.5, -1: 0.5})
    assert law.drift_zero
    with pytest.raises(DriftZeroError):
        law.require_drift()


def test_density():
    assert chi_of(0.5) == 0.25
    assert Density.of(0.3).chi == pytest.approx(0.21)
    for bad in (-0.1, 1.5, math.nan):
        with pytest.raises(OutOfRange):
            chi_of(bad)


@given(laws())
def test_law_invariants(law):
    assert math.isclose(sum(law.probs), 1.0, abs_tol=1e-12)
    assert all(p > 0 for p in law.probs)
    assert law.b == pytest.approx(sum(z * p for z, p in law.entries), abs=1e-12)
    assert law.R == max(abs(z) for z in law.offsets)
    assert all(z % law.kappa == 0 for z in law.offsets)
    sym = dict(law.p_bar)
    assert all(sym[z] == pytest.approx(sym[-z]) for z in sym)
    assert law.symmetrized().drift_zero


@given(laws(), st.integers(1, 4))
def test_dilation_roundtrip(law, k):
    base, kappa = sublattice_decompose(law)
    assert base.kappa == 1
    assert dilate(base, kappa).entries == law.entries
    wide = dilate(law, k)
    assert wide.kappa == law.kappa * k
    assert wide.b == pytest.approx(k * law.b)
