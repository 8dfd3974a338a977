"""Replica ensembles reduced to two-point functions, diffusivities and identities.

Standard errors come either from the i.i.d. replica structure directly
(binomial, delta method) or from batch means over contiguous replica blocks
(``N_BATCHES`` batches).  Ring observables of stationary runs are averaged
over all reference positions on the ring; every such average is accumulated
in exact integer arithmetic, so results do not depend on reduction order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.stats import poisson

from .errors import (
    DegenerateTime, EmptyEnsemble, MissingConditionedEnsemble, NotStationary, WindowMassLoss,
    WindowTooWide,
)
from .model import JumpLaw, chi_of
from .simulator import SimConfig, run_ensemble
from .simulator.runs import PairTrack, StationaryRecord, TaggedTrack

N_BATCHES = 50
STREAM_BLOCK = 10 ** 9  # replica-index offset between ensembles that must be independent


@dataclass
class Ensemble:
    """Stacked per-replica outputs of one experiment."""

    config: SimConfig
    kind: str
    data: dict[str, np.ndarray]
    extra: dict = field(default_factory=dict)

    @property
    def replicas(self) -> int:
        first = next(iter(self.data.values()))
        return first.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.asarray(self.extra.get("times", self.config.grid), dtype=float)

    def column(self, t: float) -> int:
        times = self.times
        hits = np.flatnonzero(np.isclose(times, t, rtol=0, atol=1e-12))
        if hits.size == 0:
            raise KeyError(f"time {t} not on the sampling grid {times.tolist()}")
        return int(hits[0])


def batch_slices(n: int, n_batches: int = N_BATCHES) -> list[slice]:
    n_batches = max(2, min(n_batches, n))
    edges = np.linspace(0, n, n_batches + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def batch_se(stat: Callable[[slice], np.ndarray], n: int, n_batches: int = N_BATCHES) -> np.ndarray:
    """Batch-means standard error of ``stat`` evaluated on replica slices."""
    vals = np.array([stat(s) for s in batch_slices(n, n_batches)])
    return vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])


# --------------------------------------------------------------------- collection

def _track_summary(track: TaggedTrack) -> np.ndarray:
    return track.positions


def _pair_summary(pair: PairTrack) -> np.ndarray:
    return np.stack([pair.A.positions, pair.B.positions, pair.contact_time]).astype(float)


def collect_tracks(config: SimConfig, replicas: int, threads: int = 1, first: int = 0) -> Ensemble:
    """Second-class tracks; ``first`` offsets the replica stream indices."""
    rows = run_ensemble(config, "second", replicas, threads, _track_summary, first)
    return Ensemble(config, "second", {"X": np.stack(rows)})


def collect_pairs(config: SimConfig, replicas: int, threads: int = 1, first: int = 0) -> Ensemble:
    rows = np.stack(run_ensemble(config, "three", replicas, threads, _pair_summary, first))
    return Ensemble(config, "three", {
        "A": rows[:, 0].astype(np.int64), "B": rows[:, 1].astype(np.int64), "contact": rows[:, 2],
    })


def current_field(occ: np.ndarray, law: JumpLaw, rho: float) -> np.ndarray:
    """w_x = sum_z z p(z) eta_hat_x eta_hat_{x+z} for every site (rows = times)."""
    chi = chi_of(rho)
    hat = (occ.astype(float) - rho) / math.sqrt(chi)
    w = np.zeros_like(hat)
    for z, p in law.entries:
        if z != 0:
            w += z * p * hat * np.roll(hat, -z, axis=-1)
    return w


def _current_summary(record: StationaryRecord, law: JumpLaw, rho: float, reach: int) -> np.ndarray:
    """c(u) = (1/L) sum_a sum_{|d|<=reach} w_{a+d}(u) w_a(0) on the sampling grid."""
    w = current_field(record.occ, law, rho)
    L = w.shape[1]
    ext = np.concatenate([w[:, L - reach:], w, w[:, :reach]], axis=1)
    csum = np.concatenate([np.zeros((w.shape[0], 1)), np.cumsum(ext, axis=1)], axis=1)
    window = csum[:, 2 * reach + 1:2 * reach + 1 + L] - csum[:, :L]
    return window @ w[0] / L


def collect_currents(config: SimConfig, replicas: int, threads: int = 1, first: int = 0) -> Ensemble:
    """Stationary runs reduced to the ring-averaged current correlation c(u)."""
    reach = config.ring_size // 4
    reducer = partial(_current_summary, law=config.law, rho=config.rho.rho, reach=reach)
    rows = run_ensemble(config, "stationary", replicas, threads, reducer, first)
    grid = np.asarray(config.grid, dtype=float)
    if grid[0] > 0:
        grid = np.concatenate([[0.0], grid])
    return Ensemble(config, "current", {"c": np.stack(rows)}, {"times": grid})


HEIGHT_FIELDS = ("Sh", "Shh", "SN", "SNN", "Seta", "SNeta", "SNB", "SB")


def _height_summary(record: StationaryRecord, window: int) -> np.ndarray:
    """Ring sums of height, flux and occupancy products for every reference site.

    Output shape ``(len(HEIGHT_FIELDS), G, 2W+1)``; scalar fields are
    broadcast along the last axis.
    """
    occ = record.occ.astype(np.int64)
    flux = record.flux
    G, L = occ.shape
    W = window
    xs = np.arange(-W, W + 1)
    a = np.arange(L)
    sites = (np.arange(-W - 1, L + W + 1)) % L
    spin_c = np.concatenate([np.zeros((G, 1), np.int64), np.cumsum(2 * occ[:, sites] - 1, axis=1)], axis=1)
    eta_c = np.concatenate([np.zeros((G, 1), np.int64), np.cumsum(occ[:, sites], axis=1)], axis=1)
    off = W + 1  # column of site 0 in the extended arrays

    def prefix(c, idx):
        return c[:, idx + off]

    # M^a(x) = sum of spins over (a, a+x] for x>0, minus over (a+x, a] for x<0
    M = prefix(spin_c, (a[:, None] + xs[None, :] + 1)) - prefix(spin_c, a[:, None] + 1)
    N0 = flux[:, a]
    h = 2 * N0[:, :, None] - M
    Nx = flux[:, (a[:, None] + xs[None, :]) % L]
    ex = occ[:, (a[:, None] + xs[None, :]) % L]
    absx = np.abs(xs)
    B = prefix(eta_c, a[:, None] + absx[None, :] + 1) - prefix(eta_c, a[:, None] - absx[None, :] + 1)
    ones = np.ones(2 * W + 1, dtype=np.int64)
    out = np.empty((len(HEIGHT_FIELDS), G, 2 * W + 1), dtype=np.int64)
    out[0] = h.sum(axis=1)
    out[1] = (h * h).sum(axis=1)
    out[2] = N0.sum(axis=1)[:, None] * ones
    out[3] = (N0[:, :, None] * Nx).sum(axis=1)
    out[4] = occ.sum(axis=1)[:, None] * ones
    out[5] = (N0[:, :, None] * ex).sum(axis=1)
    out[6] = (N0[:, :, None] * B).sum(axis=1)
    out[7] = B.sum(axis=1)
    return out


def collect_heights(config: SimConfig, replicas: int, window: int | None = None,
                    threads: int = 1, first: int = 0) -> Ensemble:
    """Stationary first-class runs reduced to ring sums for the height estimators."""
    L = config.ring_size
    W = window if window is not None else L // 4 - 1
    if W >= L // 4:
        raise WindowTooWide(f"window {W} must stay below L/4 = {L // 4}")
    rows = np.stack(run_ensemble(config, "stationary", replicas, threads,
                                 partial(_height_summary, window=W), first))
    grid = np.asarray(config.grid, dtype=float)
    if grid[0] > 0:
        grid = np.concatenate([[0.0], grid])
    data = {name: rows[:, i] for i, name in enumerate(HEIGHT_FIELDS)}
    return Ensemble(config, "height", data, {"times": grid, "window": W, "L": L})


# --------------------------------------------------------------------- two-point

@dataclass
class TwoPointField:
    t: float
    xs: np.ndarray
    values: np.ndarray
    se: np.ndarray
    chi: float
    replicas: int

    def mass(self) -> float:
        return float(self.values.sum())

    def first_moment(self) -> float:
        return float(np.dot(self.xs, self.values) / self.chi)

    def as_dict(self) -> dict[int, float]:
        return {int(x): float(v) for x, v in zip(self.xs, self.values)}


def two_point(ens: Ensemble, rho: float, t: float, ring: int | None = None) -> TwoPointField:
    """S(x,t) = chi * P(X(t) = x) from second-class tracks, with binomial SE.

    ``ring`` reduces positions mod ``ring`` (for comparison with ring oracles).
    """
    if ens.replicas == 0:
        raise EmptyEnsemble("no replicas")
    X = ens.data["X"][:, ens.column(t)]
    if ring is not None:
        X = X % ring
        xs = np.arange(ring)
    else:
        xs = np.arange(X.min(), X.max() + 1)
    counts = np.bincount(X - xs[0], minlength=xs.shape[0])[: xs.shape[0]]
    n = X.shape[0]
    p = counts / n
    chi = chi_of(rho)
    return TwoPointField(t, xs, chi * p, chi * np.sqrt(p * (1 - p) / n), chi, n)


# --------------------------------------------------------------------- diffusivity

@dataclass
class DiffusivityCurve:
    grid: np.ndarray
    values: np.ndarray
    se: np.ndarray
    method: str
    replicas: int = 0

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.se = np.asarray(self.se, dtype=float)
        if self.method not in ("variance", "green_kubo", "height", "exact", "synthetic"):
            raise ValueError(f"unknown method tag {self.method!r}")

    @property
    def tD(self) -> np.ndarray:
        return self.grid * self.values

    def at(self, t: float) -> tuple[float, float]:
        i = int(np.flatnonzero(np.isclose(self.grid, t))[0])
        return float(self.values[i]), float(self.se[i])


def _variance_with_se(x: np.ndarray) -> tuple[float, float]:
    n = x.shape[0]
    xc = x - x.mean()
    var = float(np.dot(xc, xc) / (n - 1))
    m4 = float(np.mean(xc ** 4))
    se = math.sqrt(max(m4 - var * var, 0.0) / n)
    return var, se


def diffusivity_variance(ens: Ensemble, rho: float, law: JumpLaw,
                         grid: Sequence[float] | None = None) -> DiffusivityCurve:
    """D(t) = Var(X(t))/t with delta-method SE from the fourth central moment."""
    if ens.replicas < 2:
        raise EmptyEnsemble("need at least two replicas")
    grid = list(ens.times if grid is None else grid)
    vals, ses = [], []
    for t in grid:
        if t <= 0:
            raise DegenerateTime("D(t) needs t > 0")
        var, se = _variance_with_se(ens.data["X"][:, ens.column(t)].astype(float))
        vals.append(var / t)
        ses.append(se / t)
    return DiffusivityCurve(np.array(grid), np.array(vals), np.array(ses), "variance", ens.replicas)


def green_kubo_D(ens: Ensemble, rho: float, law: JumpLaw, ts: Sequence[float]) -> DiffusivityCurve:
    """D(t) = sum z^2 p + (2 chi / t) int_0^t (t - u) C(u) du by trapezoidal quadrature."""
    if ens.kind != "current":
        raise NotStationary(f"ensemble of kind {ens.kind!r} carries no current correlations")
    if ens.config.conditioning:
        raise NotStationary("green_kubo_D needs an unconditioned stationary ensemble")
    chi = chi_of(rho)
    u = ens.times
    c = ens.data["c"]
    vals, ses = [], []
    for t in ts:
        if t <= 0:
            raise DegenerateTime("D(t) needs t > 0")
        m = int(np.flatnonzero(np.isclose(u, t))[0])
        weights = np.zeros(u.shape[0])
        du = np.diff(u[: m + 1])
        kern = t - u[: m + 1]
        weights[:m] += 0.5 * du * kern[:-1]
        weights[1:m + 1] += 0.5 * du * kern[1:]
        per_rep = (2.0 * chi / t) * (c @ weights)
        vals.append(law.second_moment() + float(per_rep.mean()))
        ses.append(float(per_rep.std(ddof=1) / math.sqrt(per_rep.shape[0])))
    return DiffusivityCurve(np.array(ts, float), np.array(vals), np.array(ses), "green_kubo", ens.replicas)


# --------------------------------------------------------------------- heights

def _pooled_cov(sum_pq, sum_p, sum_q, n):
    return (sum_pq - sum_p * sum_q / n) / (n - 1)


@dataclass
class HeightField:
    t: float
    xs: np.ndarray
    v: np.ndarray
    v_se: np.ndarray
    cov_NN: np.ndarray
    cov_Neta: np.ndarray
    cov_NB: np.ndarray


class HeightStats:
    """Pooled (replica x ring position) moments of a height ensemble."""

    def __init__(self, ens: Ensemble):
        if ens.kind != "height":
            raise ValueError("expected a height ensemble")
        self.ens = ens
        self.L = ens.extra["L"]
        self.W = ens.extra["window"]
        self.xs = np.arange(-self.W, self.W + 1)

    def _sums(self, g: int, sl: slice) -> dict[str, np.ndarray]:
        return {k: v[sl, g].sum(axis=0).astype(np.float64) for k, v in self.ens.data.items()}

    def moments(self, t: float, sl: slice = slice(None)) -> dict[str, np.ndarray]:
        g = self.ens.column(t)
        s = self._sums(g, sl)
        reps = self.ens.data["Sh"][sl].shape[0]
        n = reps * self.L
        v = _pooled_cov(s["Shh"], s["Sh"], s["Sh"], n)
        cov_NN = _pooled_cov(s["SNN"], s["SN"], s["SN"], n)
        cov_Neta = _pooled_cov(s["SNeta"], s["SN"], s["Seta"], n)
        cov_NB = _pooled_cov(s["SNB"], s["SN"], s["SB"], n)
        return {"v": v, "cov_NN": cov_NN, "cov_Neta": cov_Neta, "cov_NB": cov_NB}

    def field(self, t: float) -> HeightField:
        m = self.moments(t)
        se = batch_se(lambda sl: self.moments(t, sl)["v"], self.ens.replicas)
        return HeightField(t, self.xs, m["v"], se, m["cov_NN"], m["cov_Neta"], m["cov_NB"])

    def stat(self, t: float, fn: Callable[[dict], np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
        """Value and batch-means SE of any function of the pooled moments."""
        value = fn(self.moments(t))
        se = batch_se(lambda sl: fn(self.moments(t, sl)), self.ens.replicas)
        return value, se


def second_difference(v: np.ndarray) -> np.ndarray:
    return v[2:] - 2 * v[1:-1] + v[:-2]


def stov_residuals(hs: HeightStats, tp: TwoPointField, t: float) -> dict:
    """8 S(x,t) - (v(x+1) - 2 v(x) + v(x-1)) per interior window site, with combined SE."""
    d2, d2_se = hs.stat(t, lambda m: second_difference(m["v"]))
    xs = hs.xs[1:-1]
    S = np.array([tp.as_dict().get(int(x), 0.0) for x in xs])
    S_se = np.array([dict(zip(tp.xs.tolist(), tp.se.tolist())).get(int(x), 0.0) for x in xs])
    resid = 8 * S - d2
    se = np.sqrt((8 * S_se) ** 2 + d2_se ** 2)
    return {"xs": xs, "residual": resid, "se": se}


def lemma41_check(hs: HeightStats, rho: float, t: float, max_abs_x: int | None = None) -> dict:
    """Residual of v = 4 chi |x| + 4 Cov(N0, Nx) - 4 sgn(x) Cov(N0, sum eta) per site."""
    chi = chi_of(rho)
    xs = hs.xs

    def resid(m):
        return m["v"] - (4 * chi * np.abs(xs) + 4 * m["cov_NN"] - 4 * np.sign(xs) * m["cov_NB"])

    r, se = hs.stat(t, resid)
    keep = np.ones_like(xs, dtype=bool) if max_abs_x is None else np.abs(xs) <= max_abs_x
    return {"xs": xs[keep], "residual": r[keep], "se": se[keep]}


def truncation_bound(law: JumpLaw, rho: float, t: float, W: int) -> float:
    """Upper bound on the part of D(t) left out by summing over |x - c t| <= W.

    Summing the second difference of v by parts, the omitted part equals
    chi^{-1} t^{-1} sum_{|y| > W} (|y| - W - 1)(|y| - W) S(y, t) / 2 per side
    (y measured from the centre).  A second-class particle moves at total
    rate at most 2 by steps of at most R, so its distance from the centre is
    dominated by Y = R Poisson(2t) + |(1-2 rho) b t|, giving the bound
    E[(Y - W)_+^2] / t.
    """
    shift = abs((1 - 2 * rho) * law.b * t)
    mean = 2.0 * t
    kmax = int(mean + 20 * math.sqrt(mean + 1) + 20)
    k = np.arange(kmax + 1)
    pmf = poisson.pmf(k, mean)
    excess = np.clip(law.R * k + shift - W, 0, None)
    return float(np.dot(pmf, excess ** 2) / t)


def height_window(law: JumpLaw, rho: float, t: float, tol: float) -> int:
    W = 1
    while truncation_bound(law, rho, t, W) > tol:
        W += 1
    return W


def height_diffusivity(hs: HeightStats, rho: float, t: float, law: JumpLaw | None = None,
                       tail_tol: float = 1e-3) -> DiffusivityCurve:
    """D(t) = (4 chi t)^{-1} sum_x [v(x,t) - 4 chi |x - (1-2 rho) b t|] over a finite window.

    The window is the smallest one whose :func:`truncation_bound` is below
    ``tail_tol``; the sites outside it only add sampling noise.  If that
    window does not fit in the recorded one, the truncation is rejected.
    """
    if t <= 0:
        raise DegenerateTime("D(t) needs t > 0")
    law = law or hs.ens.config.law
    chi = chi_of(rho)
    center = (1 - 2 * rho) * law.b * t
    W = height_window(law, rho, t, tail_tol)
    if W + abs(center) > hs.W:
        raise WindowMassLoss(
            f"truncation bound {truncation_bound(law, rho, t, hs.W - int(abs(center))):.3g} at the "
            f"recorded window {hs.W} exceeds {tail_tol}"
        )
    xs = hs.xs
    inside = np.abs(xs - center) <= W

    def D_of(m):
        return float(np.sum((m["v"] - 4 * chi * np.abs(xs - center))[inside]) / (4 * chi * t))

    D, se = hs.stat(t, D_of)
    return DiffusivityCurve(np.array([t]), np.array([D]), np.array([float(se)]), "height",
                            hs.ens.replicas)


def abs_moment_check(hs: HeightStats, tp: TwoPointField, rho: float, t: float) -> dict:
    """sum_x |x - x0| S(x,t) against Var(h_t(x0)) / 4 with x0 = floor((1-2rho)t).

    The relation follows from 8 S = second difference of v by summation by
    parts against |x - x0|.
    """
    x0 = math.floor((1 - 2 * rho) * t)
    lhs = float(np.sum(np.abs(tp.xs - x0) * tp.values))
    n = tp.replicas
    chi = tp.chi
    p = tp.values / chi
    m1 = np.sum(np.abs(tp.xs - x0) * p)
    m2 = np.sum((tp.xs - x0) ** 2 * p)
    lhs_se = chi * math.sqrt(max(m2 - m1 * m1, 0.0) / n)
    idx = int(np.flatnonzero(hs.xs == x0)[0])
    rhs, rhs_se = hs.stat(t, lambda m: m["v"][idx] / 4)
    return {"lhs": lhs, "lhs_se": lhs_se, "rhs": float(rhs), "rhs_se": float(rhs_se)}


@dataclass
class DecayReport:
    t: float
    xs: np.ndarray
    cov_Neta: np.ndarray
    cov_NN: np.ndarray
    se_Neta: np.ndarray
    se_NN: np.ndarray
    slopes: dict
    decaying: bool


def _wls_slope(x, y, se_y):
    w = 1.0 / se_y ** 2
    X = np.stack([np.ones_like(x), x], axis=1)
    A = X.T @ (w[:, None] * X)
    beta = np.linalg.solve(A, X.T @ (w * y))
    cov = np.linalg.inv(A)
    return float(beta[1]), float(math.sqrt(cov[1, 1]))


def covariance_decay(hs: HeightStats, t: float, lo: float | None = None,
                     hi: float | None = None) -> DecayReport:
    """Exponential decay of |Cov(N_t(0), eta_x(t))| and |Cov(N_t(0), N_t(x))| in |x|.

    Fits log|Cov| against |x| on ``[lo, hi]`` (default ``[3t, 6t]``) using
    the sites where the covariance is at least two SE away from zero; decay
    is asserted when the fitted slope plus 1.645 SE is negative.
    """
    lo = 3 * t if lo is None else lo
    hi = 6 * t if hi is None else hi
    xs = hs.xs
    (ce, cn), (se_e, se_n) = (
        hs.stat(t, lambda m: np.stack([m["cov_Neta"], m["cov_NN"]]))
    )
    slopes = {}
    ok = True
    sel_range = (np.abs(xs) >= lo) & (np.abs(xs) <= hi)
    for name, c, se in (("eta", ce, se_e), ("N", cn, se_n)):
        sel = sel_range & (np.abs(c) > 2 * se)
        if np.count_nonzero(np.unique(np.abs(xs[sel]))) < 2:
            # covariances already at the noise floor across the fit range
            slopes[name] = {"slope": float("nan"), "se": float("nan"), "points": int(sel.sum())}
            continue
        s, s_se = _wls_slope(np.abs(xs[sel]).astype(float), np.log(np.abs(c[sel])),
                             se[sel] / np.abs(c[sel]))
        slopes[name] = {"slope": s, "se": s_se, "points": int(sel.sum())}
        ok &= s + 1.645 * s_se < 0
    return DecayReport(t, xs, ce, cn, se_e, se_n, slopes, bool(ok))


# --------------------------------------------------------------------- lemmas

def conditional_mean(ens: Ensemble, rho: float, law: JumpLaw, t: float) -> tuple[float, float]:
    """E[X~(t) | conditioning] with SE, X~ = X - (1-2rho) b t."""
    X = ens.data["X"][:, ens.column(t)].astype(float) - (1 - 2 * rho) * law.b * t
    return float(X.mean()), float(X.std(ddof=1) / math.sqrt(X.shape[0]))


def conditional_mean_identities(conditioned: Mapping[tuple[int, int], Ensemble], rho: float, law: JumpLaw,
                  t: float, z: int) -> dict:
    """Residuals of the two conditional-mean identities at site ``z``."""
    try:
        m1, s1 = conditional_mean(conditioned[(z, 1)], rho, law, t)
        m0, s0 = conditional_mean(conditioned[(z, 0)], rho, law, t)
        mm, sm = conditional_mean(conditioned[(-z, 1)], rho, law, t)
    except KeyError as exc:
        raise MissingConditionedEnsemble(f"missing conditioned ensemble {exc}") from None
    iden1 = (1 - rho) * m0 + rho * m1
    iden1_se = math.hypot((1 - rho) * s0, rho * s1)
    iden2 = m1 - mm
    iden2_se = math.hypot(s1, sm)
    return {"iden1": iden1, "iden1_se": iden1_se, "iden2": iden2, "iden2_se": iden2_se,
            "E_given_1": m1, "E_given_0": m0, "E_given_minus_1": mm}


def _var_diff(X_hi, X_lo, sl=slice(None)):
    return float(np.var(X_hi[sl], ddof=1) - np.var(X_lo[sl], ddof=1))


def tDt_derivative(unconditioned: Ensemble, conditioned: Mapping[tuple[int, int], Ensemble],
                   rho: float, law: JumpLaw, t: float) -> dict:
    """Finite-difference derivative of t D(t) against the conditional-mean formula.

    lhs: centred difference of Var X with step t/4, plus the Richardson value
    built from steps t/4 and t/8 as a consistency check.
    """
    rhs = law.second_moment()
    var_rhs = 0.0
    for z in sorted({abs(zz) for zz in law.offsets if zz != 0}):
        weight = z * (law.p(z) - law.p(-z))
        if law.p(z) + law.p(-z) == 0 or weight == 0:
            continue
        if (z, 1) not in conditioned:
            raise MissingConditionedEnsemble(f"no ensemble conditioned on eta_{z}(0) = 1")
        m, s = conditional_mean(conditioned[(z, 1)], rho, law, t)
        rhs -= 2 * rho * weight * m
        var_rhs += (2 * rho * weight * s) ** 2

    X = unconditioned.data["X"].astype(float)
    n = X.shape[0]

    def fd(h, sl=slice(None)):
        hi = X[:, unconditioned.column(t + h)]
        lo = X[:, unconditioned.column(t - h)]
        return _var_diff(hi, lo, sl) / (2 * h)

    h = t / 4
    lhs = fd(h)
    lhs_se = float(batch_se(lambda sl: np.array(fd(h, sl)), n))
    richardson = None
    try:
        richardson = (4 * fd(h / 2) - fd(h)) / 3
    except KeyError:
        pass
    return {"lhs": lhs, "lhs_se": lhs_se, "rhs": rhs, "rhs_se": math.sqrt(var_rhs),
            "richardson": richardson, "step": h}


def monotonicity_report(curve: DiffusivityCurve, n_se: float = 2.0) -> dict:
    """t D(t) non-decreasing along the grid within ``n_se`` combined standard errors."""
    tD = curve.grid * curve.values
    tD_se = curve.grid * curve.se
    steps = []
    ok = True
    for i in range(len(tD) - 1):
        comb = math.hypot(tD_se[i], tD_se[i + 1])
        passed = bool(tD[i + 1] >= tD[i] - n_se * comb)
        ok &= passed
        steps.append({"t0": float(curve.grid[i]), "t1": float(curve.grid[i + 1]),
                      "tD0": float(tD[i]), "tD1": float(tD[i + 1]), "combined_se": comb,
                      "pass": passed})
    return {"verdict": bool(ok), "steps": steps}


# --------------------------------------------------------------------- three-class

def order_formula(T: np.ndarray, p_plus: float, p_minus: float) -> np.ndarray:
    """P(A(t) < B(t) | contact time T) for the nearest-neighbour coupling."""
    s = p_plus + p_minus
    return (p_minus * np.exp(-T * s) + p_plus) / s


def three_class_report(ens: Ensemble, law: JumpLaw, t: float, n_bins: int = 8) -> dict:
    """E[A] vs E[B] and binned P(A<B | T) against the explicit formula."""
    g = ens.column(t)
    A = ens.data["A"][:, g].astype(float)
    B = ens.data["B"][:, g].astype(float)
    T = ens.data["contact"][:, g]
    n = A.shape[0]
    mean_A, mean_B = float(A.mean()), float(B.mean())
    diff = B - A
    diff_se = float(diff.std(ddof=1) / math.sqrt(n))
    se_A = float(A.std(ddof=1) / math.sqrt(n))
    se_B = float(B.std(ddof=1) / math.sqrt(n))
    below = (A < B).astype(float)
    f = order_formula(T, law.p(1), law.p(-1))
    edges = np.unique(np.quantile(T, np.linspace(0, 1, n_bins + 1)))
    bins = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (T >= lo) & ((T < hi) | (hi == edges[-1]))
        k = int(sel.sum())
        if k < 30:
            continue
        emp = float(below[sel].mean())
        pred = float(f[sel].mean())
        # binomial SE of the empirical fraction under the predicted law
        se = math.sqrt(max(float(np.mean(f[sel] * (1 - f[sel]))), 1e-12) / k)
        bins.append({"T_lo": float(lo), "T_hi": float(hi), "count": k, "empirical": emp,
                     "predicted": pred, "se": se})
    return {"t": t, "mean_A": mean_A, "mean_B": mean_B, "se_A": se_A, "se_B": se_B,
            "diff": float(diff.mean()), "diff_se": diff_se, "bins": bins}


# --------------------------------------------------------------------- pathwise

def pathwise_identities(record: StationaryRecord, window: int) -> dict[str, int]:
    """Largest violation (in integer units) of two pathwise height identities.

    ``current``: N_t(0) - N_t(x) = (M_t(x) - M_0(x)) / 2 for nearest-neighbour
    totally asymmetric dynamics.
    ``increment``: h_t(x+1) - h_t(x) = 1 - 2 eta_{x+1}(t).
    """
    from .simulator.runs import height_observer

    hs = height_observer(record, window)
    dM = 2 * (hs.N[:, [window]] - hs.N) - (hs.M - hs.M[[0]])
    inc = np.diff(hs.h, axis=1) - (1 - 2 * hs.eta[:, 1:])
    return {"current": int(np.abs(dM).max()), "increment": int(np.abs(inc).max())}
