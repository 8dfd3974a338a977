"""Laplace transforms, exponent fits and Tauberian conversions of D(t) curves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma as gamma_fn, gammaincc

from .errors import BadOrder, GridMismatch, InsufficientSpan, TailDominates
from .model import JumpLaw

TAIL_EXPONENT_SHIFT = 0.1
N_BOOT = 1000
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


# --------------------------------------------------------------------- transforms

@dataclass(frozen=True)
class TailModel:
    """f(t) ~ amplitude * t**exponent beyond the sampled horizon."""

    amplitude: float
    exponent: float

    def integral(self, lam: float, T: float) -> float:
        """int_T^inf e^{-lam t} a t^k dt = a lam^{-(k+1)} Gamma(k+1, lam T)."""
        k = self.exponent
        if k <= -1:
            raise ValueError("tail exponent must exceed -1")
        return float(self.amplitude * lam ** (-(k + 1)) * gamma_fn(k + 1) * gammaincc(k + 1, lam * T))

    def shifted(self, delta: float, T: float) -> "TailModel":
        """Same value at T, exponent moved by ``delta``."""
        k = self.exponent + delta
        return TailModel(self.amplitude * T ** (self.exponent - k), k)


def fit_tail(ts: np.ndarray, ys: np.ndarray) -> TailModel:
    """Power law fitted on the last decade of the samples."""
    T = ts[-1]
    sel = (ts >= T / 10) & (ts > 0) & (ys > 0)
    if np.count_nonzero(sel) < 2:
        raise InsufficientSpan("need two positive samples in the last decade to fit a tail")
    k, log_a = np.polyfit(np.log(ts[sel]), np.log(ys[sel]), 1)
    return TailModel(float(math.exp(log_a)), float(k))


@dataclass
class LaplaceValue:
    lam: float
    value: float
    error: float
    tail: float = 0.0


@dataclass
class LaplaceCurve:
    lambdas: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    tail_fraction: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        order = np.argsort(-np.asarray(self.lambdas, dtype=float))
        self.lambdas = np.asarray(self.lambdas, dtype=float)[order]
        self.values = np.asarray(self.values, dtype=float)[order]
        self.errors = np.asarray(self.errors, dtype=float)[order]
        if self.tail_fraction.size:
            self.tail_fraction = np.asarray(self.tail_fraction, dtype=float)[order]


def _segment_integral(interp: Callable, lam: float, knots: np.ndarray) -> float:
    a, b = knots[:-1], knots[1:]
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.exp(-lam * t) * interp(t)
    return float(np.sum(half * (vals @ _GL_WEIGHTS)))


def _refined_knots(ts: np.ndarray, lam: float) -> np.ndarray:
    """Sample knots, subdivided where a segment spans more than 1/lam."""
    pieces = [ts[:1]]
    for a, b in zip(ts[:-1], ts[1:]):
        n = max(1, math.ceil((b - a) * lam))
        pieces.append(np.linspace(a, b, n + 1)[1:])
    return np.concatenate(pieces)


def laplace_transform(f, lam: float, tail: TailModel | str | None = None,
                      T: float | None = None) -> LaplaceValue:
    """int_0^inf e^{-lam t} f(t) dt for a callable or a sampled curve ``(ts, ys)``.

    Samples are interpolated monotonically (PCHIP) on ``[ts[0], ts[-1]]``
    and integrated with Gauss-Legendre rules per segment; the reported
    error combines the gap to linear interpolation with the tail-model
    sensitivity (exponent moved by +-0.1).  ``tail`` may be a
    :class:`TailModel`, ``"fit"`` (power law on the last decade) or None;
    with None the tail is still estimated by the fitted power law but
    :class:`TailDominates` is raised when it exceeds half of the total.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    if callable(f):
        upper = math.inf if T is None else T
        val, err = quad(lambda s: math.exp(-s) * f(s / lam), 0.0, upper * lam if T else math.inf,
                        epsabs=0.0, epsrel=1e-12, limit=500)
        return LaplaceValue(lam, val / lam, err / lam)

    ts, ys = (np.asarray(a, dtype=float) for a in f)
    if ts.ndim != 1 or ts.shape != ys.shape or ts.size < 2:
        raise ValueError("samples must be two equal-length 1-d arrays")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("sample times must be strictly increasing")
    knots = _refined_knots(ts, lam)
    pchip = PchipInterpolator(ts, ys)
    body = _segment_integral(pchip, lam, knots)
    linear = _segment_integral(lambda t: np.interp(t, ts, ys), lam, knots)
    head = 0.0
    if ts[0] > 0:
        # below the first sample: linear ramp from f(0) ~ 0 (tD vanishes at 0)
        head = _segment_integral(lambda t: ys[0] * t / ts[0], lam, np.array([0.0, ts[0]]))
    quad_err = abs(body - linear)
    Tend = ts[-1]
    model = fit_tail(ts, ys) if tail in (None, "fit") else tail
    tail_val = model.integral(lam, Tend)
    sens = max(abs(model.shifted(d, Tend).integral(lam, Tend) - tail_val)
               for d in (-TAIL_EXPONENT_SHIFT, TAIL_EXPONENT_SHIFT))
    total = head + body + tail_val
    if tail is None and tail_val > 0.5 * abs(total):
        raise TailDominates(
            f"tail beyond T={Tend} carries {tail_val / total:.0%} of the transform at lambda={lam}"
        )
    return LaplaceValue(lam, total, quad_err + sens, tail_val)


def laplace_curve(ts, ys, lambdas: Sequence[float], tail: TailModel | str | None = "fit") -> LaplaceCurve:
    vals = [laplace_transform((ts, ys), lam, tail) for lam in lambdas]
    return LaplaceCurve(
        np.array([v.lam for v in vals]), np.array([v.value for v in vals]),
        np.array([v.error for v in vals]),
        np.array([v.tail / v.value if v.value else 0.0 for v in vals]),
    )


# --------------------------------------------------------------------- fits

@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    ci: tuple[float, float]
    n: int

    @property
    def ci_width(self) -> float:
        return self.ci[1] - self.ci[0]


def _wls(lx, ly, w):
    W = w.sum()
    mx, my = np.dot(w, lx) / W, np.dot(w, ly) / W
    sxx = np.dot(w, (lx - mx) ** 2)
    if sxx == 0:
        return None
    slope = np.dot(w, (lx - mx) * (ly - my)) / sxx
    return slope, my - slope * mx


def exponent_fit(xs, ys, weights=None, n_boot: int = N_BOOT, seed: int = 0,
                 level: float = 0.95) -> ExponentFit:
    """Weighted least squares of log y on log x with a case-resampling bootstrap CI."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 4:
        raise InsufficientSpan(f"need at least 4 points, got {xs.size}")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log fit needs positive data")
    if xs.max() / xs.min() < 10 * (1 - 1e-12):
        raise InsufficientSpan(f"x range {xs.min():g}..{xs.max():g} spans less than a decade")
    w = np.ones_like(xs) if weights is None else np.asarray(weights, dtype=float)
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = _wls(lx, ly, w)
    rng = np.random.default_rng(seed)
    boots = []
    for _ in range(n_boot):
        idx = rng.integers(0, xs.size, xs.size)
        fit = _wls(lx[idx], ly[idx], w[idx])
        if fit is not None:
            boots.append(fit[0])
    q = (1 - level) / 2
    lo, hi = (np.quantile(boots, [q, 1 - q]) if boots else (slope, slope))
    return ExponentFit(float(slope), float(intercept), (float(min(lo, slope)), float(max(hi, slope))),
                       int(xs.size))


# --------------------------------------------------------------------- Tauberian

@dataclass(frozen=True)
class UpperBound:
    c2: float
    beta: float
    t0: float

    def __call__(self, t):
        return self.c2 * np.asarray(t, dtype=float) ** self.beta


def tauberian_upper(c1: float, beta: float, lambda0: float) -> UpperBound:
    """Pointwise bound v(t) <= e c1 t^beta for t > 1/lambda0 from a Laplace upper bound."""
    if not (c1 > 0 and lambda0 > 0 and beta >= 0):
        raise ValueError("c1 and lambda0 must be positive, beta non-negative")
    return UpperBound(math.e * c1, beta, 1.0 / lambda0)


@dataclass(frozen=True)
class LowerBound:
    form: str          # "power" or "power_log"
    c4: float
    alpha: float
    beta: float
    c: float
    K: float
    t1: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.c4 * t ** self.beta
        if self.form == "power_log":
            out = out * np.log(t) ** (-(1 + self.beta))
        return out

    def Lambda(self, t: float) -> float:
        """lambda * t at the prescribed lambda."""
        if self.alpha == self.beta:
            return self.K
        return self.K + (self.alpha - self.beta) * (math.log(t) + self.c * math.log(math.log(t)))


def _lower_factor(c2, c3, alpha, beta, Lam):
    """Bracket g with v(t) >= g t^beta at lam t = Lam, or -inf where invalid."""
    if Lam <= alpha:
        return -math.inf
    c2p = c2 * Lam / (Lam - alpha)
    return c3 * Lam ** (-(1 + beta)) - c2p * math.exp(-Lam) / Lam


def tauberian_lower(c2: float, c3: float, alpha: float, beta: float, c: float | None = None,
                    K: float = 1.0, lambda0: float = math.inf, t0: float = 0.0) -> LowerBound:
    """Pointwise lower-bound form from a Laplace lower bound and a power upper bound.

    From ``c3 lam^{-(1+beta)} <= t v(t) + c2' lam^{-1} e^{-lam t} t^alpha`` with
    ``c2' = c2 lam t / (lam t - alpha)`` and ``lam = Lambda(t) / t``.  The
    ``log log t`` constant ``c`` defaults to ``1 + beta / (alpha - beta)``, the
    smallest round value for which the exponential term is of lower order.
    When ``alpha == beta`` and the bracket is not positive at ``K``, ``K`` is
    increased until it is.
    """
    if alpha < beta:
        raise BadOrder(f"alpha={alpha} must be >= beta={beta}")
    if not (c2 > 0 and c3 > 0 and beta > 0):
        raise ValueError("c2, c3 and beta must be positive")
    if alpha == beta:
        k = K
        g = _lower_factor(c2, c3, alpha, beta, k)
        while not g > 0:
            k *= 1.25
            g = _lower_factor(c2, c3, alpha, beta, k)
            if k > 1e4:
                raise ValueError("no positive lower bound for these constants")
        t1 = max(t0, k / lambda0 if math.isfinite(lambda0) else 0.0)
        return LowerBound("power", g, alpha, beta, float("nan"), k, t1)

    c = 1.0 + beta / (alpha - beta) if c is None else c
    tmpl = LowerBound("power_log", 0.0, alpha, beta, c, K, 0.0)

    def g(t):
        lt = math.log(t)
        if lt <= 1:
            return -math.inf
        Lam = tmpl.Lambda(t)
        return _lower_factor(c2, c3, alpha, beta, Lam) * lt ** (1 + beta)

    if c * (alpha - beta) <= beta:
        # the exponential term is not of lower order and the bracket tends to -inf
        raise ValueError(f"c={c} too small: need c (alpha - beta) > beta")
    limit = c3 * (alpha - beta) ** (-(1 + beta))
    grid = np.exp(np.linspace(1.01, 700.0, 4000))
    vals = np.array([g(t) for t in grid])
    # first time after which the factor stays above half its limit
    bad = np.flatnonzero(vals < 0.5 * limit)
    start = bad[-1] + 1 if bad.size else 0
    if start >= grid.size:
        raise ValueError("lower bound never becomes positive on the scanned range")
    t1 = max(float(grid[start]), t0)
    if math.isfinite(lambda0):
        # the transform bound is only assumed for lam < lambda0
        while tmpl.Lambda(t1) / t1 >= lambda0:
            t1 *= 1.5
    c4 = min(float(np.min(vals[grid >= t1])), limit)
    return LowerBound("power_log", c4, alpha, beta, c, K, t1)


# --------------------------------------------------------------------- verdicts

@dataclass
class Bands:
    exponent: tuple[float, float] = (-2.45, -2.25)
    ratio: tuple[float, float] = (0.2, 5.0)
    ratio_lambdas: tuple[float, float] = (1.0 / 800.0, 1.0)
    n_ratio: int = 25


def _transform_exponent(ts, tD, T: float) -> dict:
    lams = np.geomspace(1.0 / T, 16.0 / T, 9)
    curve = laplace_curve(ts, tD, lams, tail="fit")
    fit = exponent_fit(curve.lambdas, curve.values)
    return {"slope": fit.slope, "ci": list(fit.ci), "lambdas": curve.lambdas.tolist(),
            "transform": curve.values.tolist(), "error": curve.errors.tolist(),
            "tail_fraction": curve.tail_fraction.tolist()}


def weak_sense_verdict(grid, D, law: JumpLaw, tasep_grid=None, tasep_D=None,
                       bands: Bands | None = None) -> dict:
    """Transform exponents, the law-vs-TASEP transform ratio band and pass/fail flags."""
    law.require_drift()
    bands = bands or Bands()
    if tasep_grid is None or tasep_D is None:
        raise GridMismatch("no TASEP baseline curve supplied")
    grid = np.asarray(grid, dtype=float)
    tgrid = np.asarray(tasep_grid, dtype=float)
    if grid.shape != tgrid.shape or not np.allclose(grid, tgrid, rtol=0, atol=1e-12):
        raise GridMismatch("law and TASEP curves are sampled on different grids")
    D = np.asarray(D, dtype=float)
    tD_law = grid * D
    tD_tasep = grid * np.asarray(tasep_D, dtype=float)
    T = float(grid[-1])
    exp_law = _transform_exponent(grid, tD_law, T)
    exp_tasep = _transform_exponent(grid, tD_tasep, T)
    lams = np.geomspace(bands.ratio_lambdas[0], bands.ratio_lambdas[1], bands.n_ratio)
    law_curve = laplace_curve(grid, tD_law, lams, tail="fit")
    tasep_curve = laplace_curve(grid, tD_tasep, lams, tail="fit")
    ratio = law_curve.values / tasep_curve.values
    lo, hi = bands.exponent
    rlo, rhi = bands.ratio
    return {
        "law": law.as_dict(),
        "exponent": {
            "law": exp_law, "tasep": exp_tasep, "band": [lo, hi],
            "pass_law": bool(lo <= exp_law["slope"] <= hi),
            "pass_tasep": bool(lo <= exp_tasep["slope"] <= hi),
        },
        "ratio": {
            "lambdas": law_curve.lambdas.tolist(), "values": ratio.tolist(),
            "min": float(ratio.min()), "max": float(ratio.max()), "band": [rlo, rhi],
            "pass": bool(ratio.min() >= rlo and ratio.max() <= rhi),
        },
    }
