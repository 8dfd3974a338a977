"""The acceptance suite: one function per criterion, each returning a result line.

Every criterion writes its tables under ``<out>/cNN`` with deterministic
formatting; wall-clock times go to ``timing.json`` only, so a rerun with the
same seed reproduces every other file byte for byte.
"""
from __future__ import annotations

import filecmp
import math
import shutil
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis as an
from . import estimators as est
from . import oracle as orc
from . import resolvent as rs
from .io import RECORD_COLUMNS, dumps, law_token, write_csv, write_json
from .model import TASEP, Density, JumpLaw, chi_of, make_jump_law
from .simulator import SimConfig
from .simulator.runs import stationary_run

DEFAULT_SEED = 20261017
BLOCK = est.STREAM_BLOCK

LONG_T = 800.0
LONG_CHECKPOINTS = (50.0, 100.0, 200.0, 400.0, 800.0)
LONG_REPLICAS = 20000
AEP_REPLICAS = 5000


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] criterion {self.number:2d} {self.name}: {self.summary} ({self.seconds:.1f}s)"


class Context:
    def __init__(self, out: Path, threads: int = 1, seed: int = DEFAULT_SEED):
        self.out = Path(out)
        self.threads = threads
        self.seed = seed
        self.cache: dict = {}

    def dir(self, n: int) -> Path:
        d = self.out / f"c{n:02d}"
        d.mkdir(parents=True, exist_ok=True)
        return d

    def csv(self, n: int, name: str, columns, rows, extra=None) -> Path:
        return write_csv(self.dir(n) / name, columns, rows, f"acceptance-c{n:02d}", self.seed, extra)

    def json(self, n: int, name: str, obj) -> Path:
        return write_json(self.dir(n) / name, obj, f"acceptance-c{n:02d}", self.seed)


def _z(resid, se, floor=1e-12):
    resid = np.asarray(resid, dtype=float)
    se = np.asarray(se, dtype=float)
    return np.abs(resid) / np.maximum(se, floor)


def _within(resid, se, k, atol=1e-9):
    return np.abs(np.asarray(resid, float)) <= k * np.asarray(se, float) + atol


# --------------------------------------------------------------------- 1

def c01_oracle_exactness(ctx: Context) -> CriterionResult:
    t0 = time.perf_counter()
    rho, L = 0.5, 10
    chi = chi_of(rho)
    G = orc.build_generator(L, TASEP)
    rows, worst_mass, worst_mean = [], 0.0, 0.0
    for t in (0.5, 1.0, 2.0):
        S = orc.exact_two_point(L, rho, TASEP, t, G)
        mass_err = abs(S.sum() - chi)
        mean_err = abs(orc.first_moment(S, chi) - (1 - 2 * rho) * TASEP.b * t)
        worst_mass, worst_mean = max(worst_mass, mass_err), max(worst_mean, mean_err)
        rows += [("exact", t, x, float(S[x]), 0.0, 0, ctx.seed) for x in range(L)]
    ctx.csv(1, "two_point_exact.csv", RECORD_COLUMNS, rows)
    secs = time.perf_counter() - t0
    ok = worst_mass <= 1e-8 and worst_mean <= 1e-8 and secs < 60
    return CriterionResult(1, "oracle exactness", ok,
                           f"max |sum S - chi| = {worst_mass:.2e}, max |first moment - (1-2rho)bt| = "
                           f"{worst_mean:.2e} (tol 1e-8), runtime {secs:.1f}s < 60s",
                           {"mass": worst_mass, "mean": worst_mean})


# --------------------------------------------------------------------- 2

def c02_mc_vs_oracle(ctx: Context, replicas: int = 100_000) -> CriterionResult:
    t0 = time.perf_counter()
    L, rho, t = 12, 0.5, 2.0
    cfg = SimConfig(law=TASEP, rho=Density.of(rho), T=t, seed=ctx.seed, L=L, grid=(t,), periodic=True)
    ens = est.collect_tracks(cfg, replicas, ctx.threads)
    tp = est.two_point(ens, rho, t, ring=L)
    exact = orc.exact_two_point(L, rho, TASEP, t)
    chi = chi_of(rho)
    p = exact / chi
    se = chi * np.sqrt(p * (1 - p) / replicas)
    z = _z(tp.values - exact, se)
    frac = float(np.mean(z <= 4))
    ctx.csv(2, "two_point_mc_vs_exact.csv", ("x", "estimate", "se", "exact", "z"),
            [(x, float(tp.values[x]), float(se[x]), float(exact[x]), float(z[x])) for x in range(L)])
    secs = time.perf_counter() - t0
    ok = frac >= 0.95 and secs < 300
    return CriterionResult(2, "MC vs oracle two-point", ok,
                           f"{frac:.0%} of {L} sites within 4 SE (max z {z.max():.2f}), {replicas} replicas, "
                           f"runtime {secs:.0f}s < 300s", {"fraction": frac, "z": z.tolist()})


# --------------------------------------------------------------------- 3

def c03_resolvent(ctx: Context) -> CriterionResult:
    t0 = time.perf_counter()
    lams = [10.0 ** -e for e in range(1, 9)]
    q_res, q_rows = 0.0, []
    for lam in lams:
        params = rs.gamma_of(lam)
        q = rs.q_kernel(params)
        Sq = rs.s_apply(q).values[: q.values.shape[0] - 1]
        resid = lam * q.values[:-1] - Sq
        resid[0] -= 1.0
        absolute = float(np.max(np.abs(resid)))
        # normwise backward error: |r| / (|lam - S| |q| + |delta_0|), with |lam - S|_inf = lam + 4
        backward = absolute / ((lam + 4.0) * float(np.max(np.abs(q.values))) + 1.0)
        q_res = max(q_res, backward)
        q_rows.append((lam, absolute, backward))
    ctx.csv(3, "q_residual.csv", ("lambda", "abs_residual", "backward_error"), q_rows)
    rows, worst, ratios = [], 0.0, {}
    for k in range(1, 6):
        vals = []
        for lam in lams:
            r = rs.prop22_value(k, lam)
            d = abs(r.value_closed - r.value_numeric)
            worst = max(worst, d)
            vals.append(r.value_closed)
            rows.append((k, lam, r.value_closed, r.value_numeric, d, r.c1, r.c2))
        ratios[k] = max(vals) / min(vals)
    ctx.csv(3, "vk_resolvent.csv", ("k", "lambda", "closed", "numeric", "abs_diff", "c1", "c2"), rows)
    secs = time.perf_counter() - t0
    ok = q_res < 1e-12 and worst <= 1e-10 and max(ratios.values()) < 2 and secs < 10
    return CriterionResult(3, "resolvent closed forms", ok,
                           f"q backward error {q_res:.1e} < 1e-12, closed vs numeric {worst:.1e} <= 1e-10, "
                           f"max/min per k {', '.join(f'{v:.3f}' for v in ratios.values())} < 2, "
                           f"runtime {secs:.2f}s < 10s",
                           {"q_residual": q_res, "agreement": worst, "ratios": ratios})


# --------------------------------------------------------------------- 4

def c04_sector_scaling(ctx: Context) -> CriterionResult:
    fit = rs.s_norm_scaling(rs.current_kernel(TASEP), np.geomspace(1e-8, 1e-2, 13))
    ctx.csv(4, "current_scaling.csv", ("lambda", "value"), zip(fit.lambdas, fit.values),
            {"slope": repr(fit.slope)})
    ok = abs(fit.slope + 0.5) <= 0.02
    return CriterionResult(4, "S-sector scaling", ok, f"slope {fit.slope:.4f} in -0.500 +- 0.020",
                           {"slope": fit.slope})


# --------------------------------------------------------------------- 5, 6

def long_grid() -> tuple[float, ...]:
    g = set(np.round(np.geomspace(0.05, LONG_T, 80), 6).tolist()) | set(LONG_CHECKPOINTS)
    return tuple(sorted(g))


def long_curve(ctx: Context, law: JumpLaw, replicas: int, block: int) -> est.DiffusivityCurve:
    key = ("long", law.entries, replicas)
    if key not in ctx.cache:
        cfg = SimConfig(law=law, rho=Density.of(0.5), T=LONG_T, seed=ctx.seed, grid=long_grid())
        ens = est.collect_tracks(cfg, replicas, ctx.threads, first=block * BLOCK)
        ctx.cache[key] = est.diffusivity_variance(ens, 0.5, law)
    return ctx.cache[key]


def _curve_csv(ctx, n, name, curve, law):
    ctx.csv(n, name, RECORD_COLUMNS,
            ((curve.method, float(t), None, float(v), float(s), curve.replicas, ctx.seed)
             for t, v, s in zip(curve.grid, curve.values, curve.se)),
            {"law": law_token(law), "rho": "0.5"})


def c05_superdiffusive(ctx: Context, replicas: int = LONG_REPLICAS) -> CriterionResult:
    t0 = time.perf_counter()
    curve = long_curve(ctx, TASEP, replicas, 1)
    _curve_csv(ctx, 5, "tasep_diffusivity.csv", curve, TASEP)
    idx = [int(np.flatnonzero(np.isclose(curve.grid, t))[0]) for t in LONG_CHECKPOINTS]
    D = curve.values[idx]
    se = curve.se[idx]
    fit = an.exponent_fit(np.array(LONG_CHECKPOINTS), D, weights=(D / se) ** 2)
    growth = D[-1] / D[0]
    verdict = an.weak_sense_verdict(curve.grid, curve.values, TASEP, curve.grid, curve.values)
    tslope = verdict["exponent"]["tasep"]["slope"]
    ctx.json(5, "verdict.json", {"fit": {"slope": fit.slope, "ci": list(fit.ci)}, "growth": growth,
                                 "verdict": verdict})
    secs = time.perf_counter() - t0
    ok = (0.25 <= fit.slope <= 0.40 and growth > 16 ** 0.25 and -2.45 <= tslope <= -2.25
          and secs <= 3600)
    return CriterionResult(5, "superdiffusive growth", ok,
                           f"D exponent {fit.slope:.3f} (CI {fit.ci[0]:.3f}..{fit.ci[1]:.3f}) in [0.25, 0.40], "
                           f"D(800)/D(50) = {growth:.3f} > {16 ** 0.25:.0f}, transform exponent {tslope:.3f} "
                           f"in [-2.45, -2.25], {replicas} replicas, runtime {secs:.0f}s",
                           {"slope": fit.slope, "growth": growth, "transform_slope": tslope})


AEP_LAW = make_jump_law({1: "2/3", -1: "1/3"})


def c06_comparison_band(ctx: Context, replicas: int = AEP_REPLICAS,
                        tasep_replicas: int = LONG_REPLICAS) -> CriterionResult:
    tasep = long_curve(ctx, TASEP, tasep_replicas, 1)
    aep = long_curve(ctx, AEP_LAW, replicas, 2)
    _curve_csv(ctx, 6, "aep_diffusivity.csv", aep, AEP_LAW)
    verdict = an.weak_sense_verdict(aep.grid, aep.values, AEP_LAW, tasep.grid, tasep.values)
    ctx.json(6, "verdict.json", verdict)
    r = verdict["ratio"]
    return CriterionResult(6, "TASEP comparison band", r["pass"],
                           f"transform ratio over lambda in [1/800, 1] spans [{r['min']:.3f}, {r['max']:.3f}] "
                           f"within [0.2, 5]", {"min": r["min"], "max": r["max"]})


# --------------------------------------------------------------------- 7

NN_LAW = make_jump_law({1: 0.7, -1: 0.3})


def c07_monotonicity(ctx: Context, replicas: int = 20000) -> CriterionResult:
    grid = (1.0, 2.0, 4.0, 8.0, 16.0)
    cfg = SimConfig(law=NN_LAW, rho=Density.of(0.5), T=16.0, seed=ctx.seed, grid=grid)
    curve = est.diffusivity_variance(est.collect_tracks(cfg, replicas, ctx.threads, first=3 * BLOCK),
                                     0.5, NN_LAW)
    _curve_csv(ctx, 7, "nn_diffusivity.csv", curve, NN_LAW)
    rep = est.monotonicity_report(curve)
    # negative control: the same grid with t D(t) decreasing by 10% per step
    tD = curve.tD[0] * 0.9 ** np.arange(len(grid))
    synthetic = est.DiffusivityCurve(np.array(grid), tD / np.array(grid), curve.se, "synthetic")
    neg = est.monotonicity_report(synthetic)
    ctx.json(7, "monotonicity.json", {"curve": rep, "negative_control": neg})
    ok = rep["verdict"] and not neg["verdict"]
    return CriterionResult(7, "monotonicity of tD(t)", ok,
                           f"p(1)=0.7 curve monotone: {rep['verdict']}, synthetic decreasing curve "
                           f"rejected: {not neg['verdict']}", {})


# --------------------------------------------------------------------- 8

def c08_lemmas(ctx: Context, replicas: int = 100_000) -> CriterionResult:
    from .experiments import derivative_grid

    rho, law = 0.5, TASEP
    grid = tuple(sorted(set(derivative_grid([2.0])) | {1.0, 4.0}))
    base_cfg = SimConfig(law=law, rho=Density.of(rho), T=4.0, seed=ctx.seed, grid=grid)
    base = est.collect_tracks(base_cfg, replicas, ctx.threads, first=4 * BLOCK)
    cond = {}
    for i, key in enumerate(((1, 1), (1, 0), (-1, 1))):
        cfg = base_cfg.with_(conditioning=(key,))
        cond[key] = est.collect_tracks(cfg, replicas, ctx.threads, first=(5 + i) * BLOCK)
    rows, ok = [], True
    for t in (1.0, 4.0):
        r = est.conditional_mean_identities(cond, rho, law, t, 1)
        p1 = bool(_within(r["iden1"], r["iden1_se"], 3))
        p2 = bool(_within(r["iden2"], r["iden2_se"], 3))
        ok &= p1 and p2
        rows.append((t, r["iden1"], r["iden1_se"], r["iden2"], r["iden2_se"], p1, p2))
    ctx.csv(8, "conditional_means.csv", ("t", "iden1", "iden1_se", "iden2", "iden2_se", "pass1", "pass2"), rows)
    d = est.tDt_derivative(base, {(1, 1): cond[(1, 1)]}, rho, law, 2.0)
    comb = math.hypot(d["lhs_se"], d["rhs_se"])
    p3 = abs(d["lhs"] - d["rhs"]) <= 3 * comb
    ok &= p3
    ctx.json(8, "tD_derivative.json", {**d, "combined_se": comb, "pass": p3})
    z31 = max(max(abs(r[1]) / r[2], abs(r[3]) / r[4]) for r in rows)
    return CriterionResult(8, "conditional-mean identities", bool(ok),
                           f"iden1/iden2 max z {z31:.2f} at t in {{1, 4}}; tD' at t=2: lhs {d['lhs']:.4f} vs "
                           f"rhs {d['rhs']:.4f}, |diff|/SE = {abs(d['lhs'] - d['rhs']) / comb:.2f} <= 3", {})


# --------------------------------------------------------------------- 9

def c09_three_class(ctx: Context, replicas: int = 20000) -> CriterionResult:
    rows, bins, ok = [], [], True
    worst_bin = 0.0
    for i, p1 in enumerate((1.0, 0.7)):
        law = make_jump_law({1: p1, -1: 1 - p1})
        cfg = SimConfig(law=law, rho=Density.of(0.5), T=8.0, seed=ctx.seed, grid=(2.0, 8.0))
        ens = est.collect_pairs(cfg, replicas, ctx.threads, first=(8 + i) * BLOCK)
        for t in (2.0, 8.0):
            r = est.three_class_report(ens, law, t)
            p_mean = r["mean_A"] <= r["mean_B"] + 2 * r["diff_se"]
            ok &= p_mean
            rows.append((p1, t, r["mean_A"], r["mean_B"], r["diff"], r["diff_se"], p_mean))
            for b in r["bins"]:
                zb = abs(b["empirical"] - b["predicted"]) / max(b["se"], 1e-12)
                pb = abs(b["empirical"] - b["predicted"]) <= 3 * b["se"] + 1e-12
                worst_bin = max(worst_bin, zb if b["se"] > 1e-9 else 0.0)
                ok &= pb
                bins.append((p1, t, b["T_lo"], b["T_hi"], b["count"], b["empirical"], b["predicted"],
                              b["se"], pb))
    ctx.csv(9, "means.csv", ("p1", "t", "mean_A", "mean_B", "diff", "diff_se", "pass"), rows)
    ctx.csv(9, "order_bins.csv", ("p1", "t", "T_lo", "T_hi", "count", "empirical", "predicted", "se", "pass"),
            bins)
    return CriterionResult(9, "three-class coupling", bool(ok),
                           f"E[A] <= E[B] + 2 SE in all {len(rows)} cases; {len(bins)} order bins, "
                           f"max |emp - formula|/SE = {worst_bin:.2f} <= 3", {})


# --------------------------------------------------------------------- 10

def c10_heights(ctx: Context, replicas: int = 20000, track_replicas: int = 100_000) -> CriterionResult:
    rho, law = 0.5, TASEP
    grid = (2.0, 4.0, 8.0)
    cfg = SimConfig(law=law, rho=Density.of(rho), T=8.0, seed=ctx.seed, grid=grid,
                    observers=frozenset({"height"}))
    window = max(est.height_window(law, rho, 8.0, 1e-3), 20) + 1
    # pathwise identities on individual trajectories
    path = {"current": 0, "increment": 0}
    for r in range(50):
        rec = stationary_run(cfg, 10 * BLOCK + r)
        for k, v in est.pathwise_identities(rec, window).items():
            path[k] = max(path[k], v)
    hs = est.HeightStats(est.collect_heights(cfg, replicas, window, ctx.threads, first=11 * BLOCK))
    tracks = est.collect_tracks(cfg.with_(observers=frozenset({"track"})), track_replicas, ctx.threads,
                                first=12 * BLOCK)
    tp = est.two_point(tracks, rho, 4.0)
    st = est.stov_residuals(hs, tp, 4.0)
    W4 = est.height_window(law, rho, 4.0, 1e-3)
    keep = np.abs(st["xs"]) <= W4
    stov_ok = bool(np.all(_within(st["residual"][keep], st["se"][keep], 3)))
    stov_z = float(np.max(_z(st["residual"][keep], st["se"][keep])))
    l41 = est.lemma41_check(hs, rho, 4.0, 20)
    l41_ok = bool(np.all(_within(l41["residual"], l41["se"], 3)))
    l41_z = float(np.max(_z(l41["residual"], l41["se"])[l41["se"] > 0]))
    var_curve = est.diffusivity_variance(tracks, rho, law, [2.0, 8.0])
    agree, drows = True, []
    for t in (2.0, 8.0):
        h = est.height_diffusivity(hs, rho, t, law)
        dv, sv = var_curve.at(t)
        comb = math.hypot(h.se[0], sv)
        a = abs(h.values[0] - dv) <= 3 * comb
        agree &= a
        drows.append((t, float(h.values[0]), float(h.se[0]), dv, sv, comb, a))
    ctx.csv(10, "stov.csv", ("x", "residual", "se"), zip(st["xs"], st["residual"], st["se"]))
    ctx.csv(10, "covariance_identity.csv", ("x", "residual", "se"), zip(l41["xs"], l41["residual"], l41["se"]))
    ctx.csv(10, "height_vs_variance.csv",
            ("t", "height_D", "height_se", "variance_D", "variance_se", "combined_se", "pass"), drows)
    ctx.json(10, "pathwise.json", path)
    ok = path["current"] == 0 and path["increment"] == 0 and stov_ok and l41_ok and agree
    dtxt = "; ".join(f"t={r[0]:g}: {r[1]:.3f}+-{r[2]:.3f} vs {r[3]:.3f}+-{r[4]:.3f}" for r in drows)
    return CriterionResult(10, "height identities", bool(ok),
                           f"pathwise violations {path['current']}/{path['increment']}; stov max z {stov_z:.2f} "
                           f"(|x| <= {W4}); covariance identity max z {l41_z:.2f} (|x| <= 20); D height vs variance {dtxt}",
                           {})


# --------------------------------------------------------------------- 11

def c11_green_kubo(ctx: Context, replicas: int = 20000, track_replicas: int = 100_000) -> CriterionResult:
    rho, law = 0.5, TASEP
    ts = (1.0, 2.0, 4.0)
    u = tuple(np.round(np.arange(0.05, 4.0 + 1e-9, 0.05), 10).tolist())
    cfg = SimConfig(law=law, rho=Density.of(rho), T=4.0, seed=ctx.seed, grid=u,
                    observers=frozenset({"current"}))
    gk = est.green_kubo_D(est.collect_currents(cfg, replicas, ctx.threads, first=13 * BLOCK), rho, law, ts)
    tcfg = SimConfig(law=law, rho=Density.of(rho), T=4.0, seed=ctx.seed, grid=ts)
    var = est.diffusivity_variance(est.collect_tracks(tcfg, track_replicas, ctx.threads, first=14 * BLOCK),
                                   rho, law)
    rows, ok = [], True
    for t in ts:
        g, gs = gk.at(t)
        v, vs = var.at(t)
        comb = math.hypot(gs, vs)
        a = abs(g - v) <= 3 * comb
        ok &= a
        rows.append((t, g, gs, v, vs, comb, a))
    ctx.csv(11, "green_kubo_vs_variance.csv",
            ("t", "gk_D", "gk_se", "variance_D", "variance_se", "combined_se", "pass"), rows)
    txt = "; ".join(f"t={r[0]:g}: {r[1]:.4f}+-{r[2]:.4f} vs {r[3]:.4f}+-{r[4]:.4f}" for r in rows)
    return CriterionResult(11, "Green-Kubo vs variance", bool(ok), txt, {})


# --------------------------------------------------------------------- 12

def c12_tauberian(ctx: Context) -> CriterionResult:
    from scipy.special import gamma

    worst = 0.0
    rows = []
    for lam in (1.0, 0.1, 0.01):
        v = an.laplace_transform(lambda t: t ** (4 / 3), lam).value
        target = gamma(7 / 3) * lam ** (-7 / 3)
        rel = abs(v / target - 1)
        worst = max(worst, rel)
        rows.append((lam, v, target, rel))
    ctx.csv(12, "laplace_power.csv", ("lambda", "transform", "gamma_value", "rel_err"), rows)
    beta = 1 / 3
    ts = np.geomspace(1.5, 1e6, 200)
    # upper: int e^{-lam t} t^beta dt = Gamma(1+beta) lam^{-(1+beta)} for every lam
    up = an.tauberian_upper(gamma(1 + beta), beta, 1.0)
    up_ok = abs(up.c2 - math.e * gamma(1 + beta)) < 1e-15 and bool(np.all(ts[ts > up.t0] ** beta <= up(ts[ts > up.t0])))
    lo_eq = an.tauberian_lower(1.0, gamma(1 + beta), beta, beta)
    sel = ts > lo_eq.t1
    lo_eq_ok = lo_eq.form == "power" and lo_eq.c4 > 0 and bool(np.all(ts[sel] ** beta >= lo_eq(ts[sel])))
    # alpha > beta: v(t) = t^beta still satisfies v <= t^alpha for t >= 1
    lo_log = an.tauberian_lower(1.0, gamma(1 + beta), 0.5, beta)
    big = np.geomspace(max(lo_log.t1, 3.0), 1e300, 200)
    lo_log_ok = lo_log.form == "power_log" and lo_log.c4 > 0 and bool(np.all(big ** beta >= lo_log(big)))
    ctx.json(12, "tauberian.json", {
        "upper": {"c2": up.c2, "t0": up.t0},
        "lower_equal": {"c4": lo_eq.c4, "K": lo_eq.K, "form": lo_eq.form},
        "lower_log": {"c4": lo_log.c4, "c": lo_log.c, "t1": lo_log.t1, "form": lo_log.form},
    })
    ok = worst < 1e-6 and up_ok and lo_eq_ok and lo_log_ok
    return CriterionResult(12, "Tauberian utilities", bool(ok),
                           f"Laplace of t^(4/3) rel err {worst:.1e} < 1e-6; upper c2 = e c1 holds: {up_ok}; "
                           f"lower forms c4 t^b (c4={lo_eq.c4:.3f}) and c4 t^b (log t)^-(1+b) "
                           f"(c4={lo_log.c4:.3f}) hold on t^b: {lo_eq_ok and lo_log_ok}", {})


# --------------------------------------------------------------------- 13

QUICK_CONFIG = """\
[run]
experiment = diffusivity
seed = {seed}
replicas = 4000
horizon = 16
grid = 1, 2, 4, 8, 16
rho = 0.5

[law]
1 = 1
"""


def _same_tree(a: Path, b: Path, skip=("timing.json",)) -> tuple[bool, list[str]]:
    names_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file() and p.name not in skip)
    names_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file() and p.name not in skip)
    if names_a != names_b:
        return False, ["file lists differ"]
    diff = [str(n) for n in names_a if not filecmp.cmp(a / n, b / n, shallow=False)]
    return not diff, diff


def c13_reproducibility(ctx: Context) -> CriterionResult:
    from .experiments import run_experiment
    from .io import RunManifest, parse_config

    cfg = parse_config(QUICK_CONFIG.format(seed=ctx.seed))
    tmp = Path(tempfile.mkdtemp(prefix="aepkit-repro-"))
    try:
        dirs = []
        for threads in (1, 2):
            d = tmp / f"simulate-threads{threads}"
            m = RunManifest("simulate:diffusivity", cfg.hash, cfg.seed, run_experiment(cfg, d, threads))
            m.write(d)
            dirs.append(d)
        same_sim, diff_sim = _same_tree(*dirs)
        subs = []
        for threads in (1, 2):
            sub = Context(tmp / f"acceptance-threads{threads}", threads, ctx.seed)
            c01_oracle_exactness(sub)
            c03_resolvent(sub)
            c02_mc_vs_oracle(sub, replicas=4000)
            subs.append(sub.out)
        same_acc, diff_acc = _same_tree(*subs)
        shutil.copytree(dirs[0], ctx.dir(13) / "simulate", dirs_exist_ok=True)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    ok = same_sim and same_acc
    return CriterionResult(13, "reproducibility", ok,
                           f"simulate outputs identical across 1 and 2 workers: {same_sim}; acceptance "
                           f"outputs (criteria 1-3) identical across reruns: {same_acc}",
                           {"diff": diff_sim + diff_acc})


CRITERIA: dict[int, Callable[[Context], CriterionResult]] = {
    1: c01_oracle_exactness, 2: c02_mc_vs_oracle, 3: c03_resolvent, 4: c04_sector_scaling,
    5: c05_superdiffusive, 6: c06_comparison_band, 7: c07_monotonicity, 8: c08_lemmas,
    9: c09_three_class, 10: c10_heights, 11: c11_green_kubo, 12: c12_tauberian,
    13: c13_reproducibility,
}


def run_criterion(ctx: Context, n: int) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        res = CRITERIA[n](ctx)
    except Exception as exc:  # an error is a failed criterion, not an aborted suite
        res = CriterionResult(n, CRITERIA[n].__name__[4:].replace("_", " "), False,
                              f"raised {type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res


def run_acceptance(out: Path, threads: int = 1, only=None, seed: int | None = None,
                   echo: Callable[[str], None] = print) -> list[CriterionResult]:
    ctx = Context(out, threads, DEFAULT_SEED if seed is None else seed)
    results = []
    for n in sorted(only or CRITERIA):
        res = run_criterion(ctx, n)
        echo(res.line())
        results.append(res)
    ctx.out.mkdir(parents=True, exist_ok=True)
    (ctx.out / "results.json").write_text(dumps({
        "seed": ctx.seed,
        "criteria": {r.number: {"name": r.name, "pass": r.passed, "summary": r.summary.split(", runtime")[0]}
                     for r in results},
    }))
    (ctx.out / "timing.json").write_text(dumps({r.number: round(r.seconds, 2) for r in results}))
    return results
