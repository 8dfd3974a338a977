"""Jump laws, densities and their validated constructors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Union

from .errors import (
    DriftZeroError,
    EmptySupport,
    NegativeProbability,
    NotNormalized,
    OutOfRange,
)

NORMALIZATION_TOL = 1e-12

Number = Union[int, float, str, Fraction]


def _to_float(value: Number) -> float:
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            return float(Fraction(text))
        return float(text)
    return float(value)


@dataclass(frozen=True)
class JumpLaw:
    """Finite-range jump distribution p(.) on the integers.

    ``entries`` holds the support as sorted ``(z, p(z))`` pairs with
    ``p(z) > 0``.  The derived quantities are computed once by
    :func:`make_jump_law` and never change.
    """

    entries: tuple[tuple[int, float], ...]
    b: float
    R: int
    kappa: int
    p_bar: tuple[tuple[int, float], ...] = field(repr=False)

    @property
    def drift_zero(self) -> bool:
        return self.b == 0.0

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(z for z, _ in self.entries)

    @property
    def probs(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.entries)

    def p(self, z: int) -> float:
        for zz, pp in self.entries:
            if zz == z:
                return pp
        return 0.0

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries)

    def second_moment(self) -> float:
        """sum_z z^2 p(z)."""
        return math.fsum(z * z * p for z, p in self.entries)

    @property
    def nearest_neighbor(self) -> bool:
        return all(abs(z) == 1 for z in self.offsets)

    @property
    def is_tasep(self) -> bool:
        return self.entries == ((1, 1.0),)

    def symmetrized(self) -> "JumpLaw":
        return make_jump_law(dict(self.p_bar))

    def require_drift(self) -> None:
        if self.drift_zero:
            raise DriftZeroError(
                f"jump law {self.as_dict()} has zero drift; this operation needs b != 0"
            )

    def label(self) -> str:
        return ";".join(f"{z}:{p!r}" for z, p in self.entries)


def make_jump_law(entries: Mapping[int, Number] | Iterable[tuple[int, Number]]) -> JumpLaw:
    """Validate a finite jump law and compute its drift, range and gcd.

    Zero-probability entries are dropped.  Drift-zero laws are accepted and
    flagged through ``JumpLaw.drift_zero``.
    """
    items = entries.items() if isinstance(entries, Mapping) else entries
    table: dict[int, float] = {}
    for z, raw in items:
        z = int(z)
        p = _to_float(raw)
        if not math.isfinite(p) or p < 0:
            raise NegativeProbability(f"entry z={z} has probability {raw!r} < 0")
        table[z] = table.get(z, 0.0) + p
    support = {z: p for z, p in table.items() if p > 0}
    if not support:
        raise EmptySupport("jump law has no positive entries")
    total = math.fsum(support.values())
    if abs(total - 1.0) > NORMALIZATION_TOL:
        raise NotNormalized(f"probabilities sum to {total!r}, not 1")

    ordered = tuple(sorted(support.items()))
    if all(z == 0 for z, _ in ordered):
        raise EmptySupport("jump law has no non-zero displacement")
    b = math.fsum(z * p for z, p in ordered)
    R = max(abs(z) for z, _ in ordered)
    kappa = reduce(math.gcd, (abs(z) for z, _ in ordered))
    sym: dict[int, float] = {}
    for z, p in ordered:
        sym[z] = sym.get(z, 0.0) + 0.5 * p
        sym[-z] = sym.get(-z, 0.0) + 0.5 * p
    p_bar = tuple(sorted(sym.items()))
    return JumpLaw(entries=ordered, b=b, R=R, kappa=kappa, p_bar=p_bar)


TASEP = make_jump_law({1: 1.0})


@dataclass(frozen=True)
class Density:
    rho: float
    chi: float

    @classmethod
    def of(cls, rho: float) -> "Density":
        return cls(float(rho), chi_of(rho))


def chi_of(rho: float) -> float:
    """Static compressibility rho(1 - rho)."""
    rho = float(rho)
    if not 0.0 <= rho <= 1.0 or math.isnan(rho):
        raise OutOfRange(f"density {rho!r} outside [0, 1]")
    return rho * (1.0 - rho)


def sublattice_decompose(law: JumpLaw) -> tuple[JumpLaw, int]:
    """Rescale a law supported on kappa*Z to the irreducible law p(kappa y)."""
    k = law.kappa
    if k == 1:
        return law, 1
    return make_jump_law({z // k: p for z, p in law.entries}), k


def dilate(law: JumpLaw, kappa: int) -> JumpLaw:
    """Inverse of :func:`sublattice_decompose`."""
    return make_jump_law({z * kappa: p for z, p in law.entries})
