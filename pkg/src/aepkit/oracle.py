"""Exact computations on small rings.

Configurations of a ring with ``L`` sites are encoded as integers whose bit
``x`` is the occupation variable at site ``x``.  All functions here are pure
and deterministic; they serve as ground truth for the Monte Carlo estimators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionTooLarge, SolverFailure, SupportTooWide, TimeTooLarge
from .model import JumpLaw, chi_of, make_jump_law

MAX_SITES = 14
UNIFORMIZATION_TOL = 1e-13
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class GeneratorMatrix:
    L: int
    law: JumpLaw
    flavor: str
    matrix: sp.csr_matrix

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        return -self.matrix.diagonal()


def occupations(L: int) -> np.ndarray:
    """``(2**L, L)`` array of occupation variables for every configuration."""
    states = np.arange(1 << L, dtype=np.int64)
    return ((states[:, None] >> np.arange(L)) & 1).astype(np.int8)


def product_weights(L: int, rho: float) -> np.ndarray:
    n = occupations(L).sum(axis=1)
    return rho ** n * (1.0 - rho) ** (L - n)


def build_generator(L: int, law: JumpLaw, flavor: str = "full") -> GeneratorMatrix:
    """Sparse rate matrix of the exclusion process on the ring Z/LZ.

    ``flavor="symmetric"`` uses the symmetrized law (p(z) + p(-z))/2, i.e.
    the symmetric part of the full generator in L^2 of a product measure.
    """
    if L > MAX_SITES:
        raise DimensionTooLarge(f"L={L} exceeds the exact-computation cap {MAX_SITES}")
    if flavor not in ("full", "symmetric"):
        raise ValueError(f"unknown flavor {flavor!r}")
    rates = law.p_bar if flavor == "symmetric" else law.entries
    states = np.arange(1 << L, dtype=np.int64)
    rows, cols, vals = [], [], []
    for x in range(L):
        occ_x = (states >> x) & 1
        for z, p in rates:
            y = (x + z) % L
            if y == x:
                continue
            ok = (occ_x == 1) & (((states >> y) & 1) == 0)
            src = states[ok]
            rows.append(src)
            cols.append(src ^ (1 << x) ^ (1 << y))
            vals.append(np.full(src.shape[0], p))
    dim = 1 << L
    rows = np.concatenate(rows) if rows else np.zeros(0, np.int64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
    vals = np.concatenate(vals) if vals else np.zeros(0)
    off = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
    off.sum_duplicates()
    diag = np.asarray(off.sum(axis=1)).ravel()
    mat = (off - sp.diags(diag)).tocsr()
    return GeneratorMatrix(L=L, law=law, flavor=flavor, matrix=mat)


def _poisson_cutoff(mean: float, tol: float) -> tuple[np.ndarray, int]:
    """Poisson(mean) weights up to the index where the upper tail drops below ``tol``."""
    weights = [math.exp(-mean)]
    total = weights[0]
    k = 0
    while 1.0 - total > tol or k < mean:
        k += 1
        weights.append(weights[-1] * mean / k)
        total += weights[-1]
        if k > 100000:
            break
    return np.array(weights), k


def semigroup_apply(G: GeneratorMatrix, t: float, v: np.ndarray, adjoint: bool = False,
                    tol: float = UNIFORMIZATION_TOL) -> np.ndarray:
    """``exp(tG) v`` (or ``v exp(tG)`` with ``adjoint=True``) by uniformization.

    The time interval is split so that each piece has uniformized mean at
    most 32; every piece drops a Poisson tail below ``tol`` times the input
    norm (sup norm for ``exp(tG) v``, l1 norm for the adjoint action).
    """
    v = np.asarray(v, dtype=float)
    if t == 0.0:
        return v.copy()
    lam = float(G.exit_rates.max())
    if lam == 0.0:
        return v.copy()
    A = G.matrix.T.tocsr() if adjoint else G.matrix
    steps = max(1, math.ceil(lam * t / 32.0))
    mean = lam * t / steps
    weights, K = _poisson_cutoff(mean, tol / steps)
    out = v
    for _ in range(steps):
        term = out
        acc = weights[0] * term
        for k in range(1, K + 1):
            term = term + (A @ term) / lam
            acc = acc + weights[k] * term
        out = acc
    return out


def wrapped(L: int) -> np.ndarray:
    """Signed ring coordinate of site ``x`` in (-L/2, L/2]."""
    x = np.arange(L)
    return np.where(x > L // 2, x - L, x)


def _check_sites(L: int, cap: int = MAX_SITES) -> None:
    if L > cap:
        raise DimensionTooLarge(f"L={L} exceeds {cap}")


def exact_two_point(L: int, rho: float, law: JumpLaw, t: float,
                    G: GeneratorMatrix | None = None) -> np.ndarray:
    """S(x, t) on the ring for x = 0..L-1, started from the product measure.

    By the basic coupling this is also chi times the law of a single
    second-class particle started at 0, reduced mod L.
    """
    _check_sites(L)
    G = G if G is not None else build_generator(L, law)
    eta = occupations(L)
    pi = product_weights(L, rho)
    mu0 = pi * (eta[:, 0] - rho)
    mu_t = semigroup_apply(G, t, mu0, adjoint=True)
    return mu_t @ (eta - rho)


def _moments(S: np.ndarray, center: float, chi: float) -> tuple[float, float]:
    """Ring moments with the antipode split evenly between +L/2 and -L/2."""
    L = S.shape[0]
    xw = wrapped(L).astype(float)
    w = S.copy()
    first = float(np.dot(xw, w))
    second = float(np.dot((xw - center) ** 2, w))
    if L % 2 == 0:
        h = L // 2
        first -= 0.5 * S[h] * (2 * h)
        second += 0.5 * S[h] * ((-h - center) ** 2 - (h - center) ** 2)
    return first / chi, second / chi


def first_moment(S: np.ndarray, chi: float) -> float:
    """chi^{-1} sum_x x S(x,t) in wrapped coordinates."""
    return _moments(S, 0.0, chi)[0]


def light_cone_ok(L: int, law: JumpLaw, t: float) -> bool:
    return law.R * (t + 3.0 * math.sqrt(t)) < L / 2


def exact_diffusivity(L: int, rho: float, law: JumpLaw, t: float) -> float:
    """D(t) from the exact ring two-point function in wrapped coordinates."""
    _check_sites(L)
    if t <= 0:
        raise TimeTooLarge("exact_diffusivity needs t > 0")
    if not light_cone_ok(L, law, t):
        raise TimeTooLarge(
            f"R(t + 3 sqrt t) = {law.R * (t + 3 * math.sqrt(t)):.3g} does not fit in L/2 = {L / 2}"
        )
    chi = chi_of(rho)
    S = exact_two_point(L, rho, law, t)
    _, second = _moments(S, (1 - 2 * rho) * law.b * t, chi)
    return second / t


def local_function_vector(L: int, rho: float, phi: Sequence[tuple[Sequence[int], float]],
                          translate: bool = True) -> np.ndarray:
    """Values of ``sum_x tau_x phi`` (or ``phi``) on all configurations.

    ``phi`` is a list of ``(A, c)`` terms meaning ``c * prod_{a in A} eta_hat_a``.
    """
    chi = chi_of(rho)
    hat = (occupations(L) - rho) / math.sqrt(chi)
    out = np.zeros(1 << L)
    shifts = range(L) if translate else (0,)
    for sites, c in phi:
        for x in shifts:
            term = np.full(1 << L, float(c))
            for a in sites:
                term *= hat[:, (x + a) % L]
            out += term
    return out


def support_diameter(phi) -> int:
    sites = [a for A, _ in phi for a in A]
    return max(sites) - min(sites) if sites else 0


def _sector_solve(M: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    if n == 0:
        return rhs.copy()
    diag = M.diagonal()
    precond = spla.LinearOperator((n, n), matvec=lambda r: r / diag)
    norm = max(np.linalg.norm(rhs), 1e-300)
    sol, info = spla.bicgstab(M, rhs, rtol=1e-14, atol=0.0, M=precond, maxiter=20 * n)
    if info == 0 and np.linalg.norm(M @ sol - rhs) <= 1e-12 * norm:
        return sol
    if n < DENSE_LIMIT:
        sol = scipy.linalg.solve(M.toarray(), rhs)
    else:
        sol = spla.spsolve(M.tocsc(), rhs)
    if np.linalg.norm(M @ sol - rhs) > 1e-10 * norm:
        raise SolverFailure(f"resolvent solve did not reach tolerance (dim {n})")
    return sol


def resolvent_solve(G: GeneratorMatrix, lam: float, rhs: np.ndarray) -> np.ndarray:
    """Solve ``(lam - G) u = rhs``, one particle-number sector at a time."""
    counts = occupations(G.L).sum(axis=1)
    A = (lam * sp.identity(G.dim, format="csr") - G.matrix).tocsr()
    u = np.zeros(G.dim)
    for n in range(G.L + 1):
        idx = np.flatnonzero(counts == n)
        if not np.any(rhs[idx]):
            continue
        block = A[idx][:, idx]
        u[idx] = _sector_solve(block, rhs[idx])
    return u


def ring_h1_seminorm(phi, lam: float, L: int, law: JumpLaw, flavor: str = "full",
                     rho: float = 0.5, G: GeneratorMatrix | None = None) -> float:
    """(1/L) <F, (lam - G)^{-1} F>_pi with F = sum_x tau_x phi on the ring.

    Finite-ring version of the translation-summed resolvent norm.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if support_diameter(phi) >= L / 4:
        raise SupportTooWide(f"support diameter {support_diameter(phi)} >= L/4 = {L / 4}")
    G = G if G is not None else build_generator(L, law, flavor)
    F = local_function_vector(L, rho, phi)
    u = resolvent_solve(G, lam, F)
    pi = product_weights(L, rho)
    return float(np.dot(pi * F, u) / L)


def ring_ratio_band(phi, lambdas: Sequence[float], L: int, law: JumpLaw,
                      rho: float = 0.5) -> dict:
    """Ratios of the ring resolvent norm under ``law`` and under TASEP."""
    tasep = make_jump_law({1: 1.0})
    G_law = build_generator(L, law)
    G_t = build_generator(L, tasep)
    ratios = []
    for lam in lambdas:
        a = ring_h1_seminorm(phi, lam, L, law, rho=rho, G=G_law)
        b = ring_h1_seminorm(phi, lam, L, tasep, rho=rho, G=G_t)
        ratios.append(a / b)
    ratios = np.array(ratios)
    return {"lambdas": list(map(float, lambdas)), "ratios": ratios.tolist(),
            "min": float(ratios.min()), "max": float(ratios.max())}
