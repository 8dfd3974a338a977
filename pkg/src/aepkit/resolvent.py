"""Degree-two sector of the symmetric nearest-neighbour exclusion generator.

After summing over translations, a quadratic function
``f = sum_{x<y} f(x, y) eta_hat_{x,y}`` is described by its reduced kernel
``fbar(d) = sum_y f(y, y + d + 1)`` on ``d = 0, 1, 2, ...`` (``d + 1`` is the
pair distance), and the symmetric generator becomes the half-line operator

    (S fbar)(d) = fbar(d+1) - fbar(d) + 1{d>0} (fbar(d-1) - fbar(d)).

Everything below solves ``(lam - S) u = rhs`` on this half line, either in
closed form (geometric solutions with ratio ``gamma``) or numerically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .errors import Disagreement, NonPositiveLambda, TruncationInsufficient
from .model import JumpLaw

LAMBDA_FLOOR = 1e-10
AGREEMENT_TOL = 1e-10


@dataclass(frozen=True)
class ReducedKernel:
    values: np.ndarray
    tail_bound: float = 0.0

    @property
    def N_trunc(self) -> int:
        return self.values.shape[0] - 1

    def __getitem__(self, d):
        if isinstance(d, (int, np.integer)) and d > self.N_trunc:
            return 0.0
        return self.values[d]

    def dot(self, other: "ReducedKernel") -> float:
        n = min(self.values.shape[0], other.values.shape[0])
        return float(np.dot(self.values[:n], other.values[:n]))

    @classmethod
    def delta(cls, d: int, size: int | None = None) -> "ReducedKernel":
        v = np.zeros(max(size or 0, d + 1))
        v[d] = 1.0
        return cls(v)


@dataclass(frozen=True)
class ResolventParams:
    lam: float
    gamma: float

    @property
    def one_minus_gamma(self) -> float:
        return _one_minus_gamma(self.lam)

    def c_constants(self, k: int) -> tuple[float, float]:
        """Coefficients of the two geometric modes in ``(lam - S)^{-1} 1{d=k}``.

        Matching the equation at ``d = k`` gives ``c1 (1/gamma - gamma) = 2``;
        the boundary row at ``d = 0`` gives ``c2 = c1 gamma^{2k+1}``.
        """
        g = self.gamma
        c1 = 2.0 * g / (self.one_minus_gamma * (1.0 + g))
        c2 = c1 * g ** (2 * k + 1)
        return c1, c2


def _one_minus_gamma(lam: float) -> float:
    # 1 - gamma = (s - lam)/2 with s = sqrt(lam^2 + 4 lam); written to avoid cancellation
    s = math.sqrt(lam * lam + 4.0 * lam)
    return 2.0 * lam / (lam + s) if lam < 1 else (s - lam) / 2.0


def gamma_of(lam: float) -> ResolventParams:
    """Root in (0, 1) of ``lam + 2 = gamma + 1/gamma``."""
    if not lam > 0:
        raise NonPositiveLambda(f"lambda={lam!r} must be positive")
    s = math.sqrt(lam * lam + 4.0 * lam)
    # the smaller root (lam + 2 - s)/2, computed as 2/(lam + 2 + s) for stability
    gamma = 2.0 / (lam + 2.0 + s)
    return ResolventParams(lam=float(lam), gamma=gamma)


def reduce(f: Mapping[tuple[int, int], float] | Iterable[tuple[tuple[int, int], float]]) -> ReducedKernel:
    """Translation-reduce a quadratic function given by its pair coefficients."""
    items = f.items() if isinstance(f, Mapping) else f
    acc: dict[int, float] = {}
    for (x, y), c in items:
        if x == y:
            raise ValueError(f"pair ({x}, {y}) is not a two-point set")
        d = abs(y - x) - 1
        acc[d] = acc.get(d, 0.0) + float(c)
    size = max(acc) + 1 if acc else 1
    values = np.zeros(size)
    for d, c in acc.items():
        values[d] += c
    return ReducedKernel(values)


def current_kernel(law: JumpLaw) -> ReducedKernel:
    """Reduced kernel of the current w = sum_z z p(z) eta_hat_{0,z}."""
    return reduce(((min(0, z), max(0, z)), z * p) for z, p in law.entries if z != 0)


def V_kernel(k: int) -> ReducedKernel:
    """Reduced kernel of eta_hat_{0,1} - eta_hat_{0,k+1}."""
    return reduce({(0, 1): 1.0, (0, k + 1): -1.0})


def translation_inner(f: Mapping[tuple[int, int], float], g: Mapping[tuple[int, int], float]) -> float:
    """sum_z sum_{x<y} f(x+z, y+z) g(x, y), computed directly from pair coefficients."""
    total = 0.0
    norm_f = {(min(a, b), max(a, b)): c for (a, b), c in f.items()}
    for (x, y), c in g.items():
        x, y = min(x, y), max(x, y)
        for (a, b), cf in norm_f.items():
            if b - a == y - x:
                total += cf * c
    return total


def s_apply(k: ReducedKernel) -> ReducedKernel:
    """Apply the half-line operator; the result is one site longer."""
    f = np.concatenate([k.values, [0.0, 0.0]])
    out = np.empty(f.shape[0] - 1)
    out[:] = f[1:] - f[:-1]
    out[1:] += f[:-2] - f[1:-1]
    return ReducedKernel(out)


def q_kernel(params: ResolventParams, size: int | None = None) -> ReducedKernel:
    """q(d) = gamma^d / (lam + 1 - gamma), the resolvent of the delta at 0."""
    g = params.gamma
    if size is None:
        size = default_truncation(params.lam, 1)
    d = np.arange(size + 1)
    vals = np.exp(d * math.log(g)) / (params.lam + params.one_minus_gamma)
    return ReducedKernel(vals, tail_bound=float(vals[-1]))


def default_truncation(lam: float, support: int) -> int:
    return max(4 * support, math.ceil(50.0 / math.sqrt(lam)))


def solve_resolvent(lam: float, rhs: ReducedKernel, N_trunc: int | None = None) -> ReducedKernel:
    """Solve ``(lam - S) u = rhs`` on ``{0..N_trunc}`` with a decaying far boundary.

    Beyond the support of ``rhs`` the solution is exactly geometric with
    ratio gamma, so the closing condition ``u(N+1) = gamma u(N)`` is exact
    and the truncation only needs to cover the support.
    """
    params = gamma_of(lam)
    if lam < LAMBDA_FLOOR:
        raise NonPositiveLambda(f"lambda={lam!r} below the supported floor {LAMBDA_FLOOR}")
    support = int(np.flatnonzero(rhs.values).max()) + 1 if np.any(rhs.values) else 1
    N = N_trunc if N_trunc is not None else default_truncation(lam, support)
    if N + 1 < support:
        raise TruncationInsufficient(f"N_trunc={N} does not cover the support {support}")
    g = params.gamma
    n = N + 1
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0
    ab[2, :-1] = -1.0
    ab[1, :] = lam + 2.0
    ab[1, 0] = lam + 1.0
    if n > 1:
        ab[1, -1] = lam + 2.0 - g
    else:
        ab[1, 0] = lam + 1.0 - g
    b = np.zeros(n)
    b[:min(n, rhs.values.shape[0])] = rhs.values[:n]
    u = solve_banded((1, 1), ab, b)
    tail = abs(u[-1]) * g / (1.0 - g) if g < 1 else math.inf
    scale = float(np.max(np.abs(u))) if u.size else 0.0
    if tail > 1e-10 * max(scale, 1e-300) and N_trunc is None:
        raise TruncationInsufficient(f"tail bound {tail:.3g} too large for N_trunc={N}")
    return ReducedKernel(u, tail_bound=tail)


def extract_c(u: ReducedKernel, k: int, params: ResolventParams) -> tuple[float, float]:
    """Recover (c1, c2) from a numeric solution for the delta at ``k``.

    Uses ``u(k) = (c1 + c2)/2`` and ``u(k-1) = (c1 gamma + c2/gamma)/2``.
    """
    g = params.gamma
    A = np.array([[0.5, 0.5], [0.5 * g, 0.5 / g]])
    rhs = np.array([u[k], u[k - 1]])
    c1, c2 = np.linalg.solve(A, rhs)
    return float(c1), float(c2)


def vk_closed_form(k: int, lam: float) -> float:
    """Closed form of (lam - S)^{-1} Vbar (0) - (lam - S)^{-1} Vbar (k)."""
    params = gamma_of(lam)
    g = params.gamma
    c1, c2 = params.c_constants(k)
    log_g = math.log(g)
    one_minus_gk = -math.expm1(k * log_g)      # 1 - gamma^k
    one_minus_gmk = -math.expm1(-k * log_g)    # 1 - gamma^{-k}
    q_part = one_minus_gk / (lam + params.one_minus_gamma)
    return q_part + 0.5 * (c1 * one_minus_gk + c2 * one_minus_gmk)


@dataclass(frozen=True)
class VkResult:
    k: int
    lam: float
    value_closed: float
    value_numeric: float
    gamma: float
    c1: float
    c2: float
    c1_numeric: float
    c2_numeric: float


def prop22_value(k: int, lam: float) -> VkResult:
    """Resolvent value for V = eta_hat_{0,1} - eta_hat_{0,k+1} by two routes."""
    if k < 1:
        raise ValueError("k must be >= 1")
    params = gamma_of(lam)
    closed = vk_closed_form(k, lam)
    u = solve_resolvent(lam, V_kernel(k))
    numeric = float(u[0] - u[k])
    if abs(closed - numeric) > AGREEMENT_TOL * max(1.0, abs(closed)):
        raise Disagreement(f"k={k}, lambda={lam}: closed {closed!r} vs numeric {numeric!r}")
    uk = solve_resolvent(lam, ReducedKernel.delta(k))
    c1n, c2n = extract_c(uk, k, params)
    c1, c2 = params.c_constants(k)
    return VkResult(k, float(lam), closed, numeric, params.gamma, c1, c2, c1n, c2n)


def s_norm(kernel: ReducedKernel, lam: float) -> float:
    """<<w, (lam - S)^{-1} w>> for the reduced kernel of w."""
    u = solve_resolvent(lam, kernel)
    return kernel.dot(u)


@dataclass(frozen=True)
class ScalingFit:
    lambdas: np.ndarray
    values: np.ndarray
    slope: float
    intercept: float


def s_norm_scaling(kernel: ReducedKernel, lambdas: Sequence[float]) -> ScalingFit:
    """Least-squares slope of log <<w,(lam - S)^{-1} w>> against log lam."""
    lambdas = np.asarray(lambdas, dtype=float)
    values = np.array([s_norm(kernel, lam) for lam in lambdas])
    slope, intercept = np.polyfit(np.log(lambdas), np.log(values), 1)
    return ScalingFit(lambdas, values, float(slope), float(intercept))
