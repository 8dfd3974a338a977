"""Config-driven experiments: simulate, reduce, and write tables."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import estimators as est
from .io import RECORD_COLUMNS, ExperimentConfig, law_token, write_csv
from .model import Density, JumpLaw
from .simulator import SimConfig


def sim_config(cfg: ExperimentConfig, grid, observers=("track",), conditioning=()) -> SimConfig:
    return SimConfig(
        law=cfg.jump_law(), rho=Density.of(cfg.rho), T=cfg.horizon, seed=cfg.seed, L=cfg.ring,
        grid=tuple(sorted(set(grid))), observers=frozenset(observers),
        conditioning=tuple(conditioning),
    )


def curve_rows(curve: est.DiffusivityCurve, seed: int):
    for t, v, s in zip(curve.grid, curve.values, curve.se):
        yield (curve.method, float(t), None, float(v), float(s), curve.replicas, seed)


def write_curve(path: Path, curve: est.DiffusivityCurve, cfg: ExperimentConfig, law: JumpLaw) -> Path:
    return write_csv(path, RECORD_COLUMNS, curve_rows(curve, cfg.seed), cfg.hash, cfg.seed,
                     {"law": law_token(law), "rho": repr(cfg.rho)})


def derivative_grid(ts) -> list[float]:
    grid = set()
    for t in ts:
        for h in (0.0, t / 4, t / 8):
            grid.update({t - h, t + h})
    return sorted(grid)


def conditioned_ensembles(cfg: ExperimentConfig, law: JumpLaw, grid, replicas: int,
                          threads: int) -> dict[tuple[int, int], est.Ensemble]:
    """Second-class ensembles conditioned on eta_z(0) for the offsets used by the identities."""
    out = {}
    block = 1
    for z in sorted({abs(zz) for zz in law.offsets if zz != 0}):
        for key in ((z, 1), (z, 0), (-z, 1)):
            sc = sim_config(cfg, grid, conditioning=(key,))
            out[key] = est.collect_tracks(sc, replicas, threads, first=block * est.STREAM_BLOCK)
            block += 1
    return out


def run_experiment(cfg: ExperimentConfig, out_dir: Path, threads: int | None = None) -> list[Path]:
    threads = cfg.threads if threads is None else threads
    law = cfg.jump_law()
    extra = {"law": law_token(law), "rho": repr(cfg.rho)}
    out_dir = Path(out_dir)
    written: list[Path] = []

    if cfg.experiment == "diffusivity":
        ens = est.collect_tracks(sim_config(cfg, cfg.grid), cfg.replicas, threads)
        curve = est.diffusivity_variance(ens, cfg.rho, law)
        written.append(write_curve(out_dir / "diffusivity.csv", curve, cfg, law))
        t = cfg.grid[-1]
        tp = est.two_point(ens, cfg.rho, t)
        rows = (("two_point", t, int(x), float(v), float(s), tp.replicas, cfg.seed)
                for x, v, s in zip(tp.xs, tp.values, tp.se))
        written.append(write_csv(out_dir / "two_point.csv", RECORD_COLUMNS, rows, cfg.hash, cfg.seed, extra))

    elif cfg.experiment == "green_kubo":
        u = np.round(np.arange(cfg.dt, cfg.horizon + cfg.dt / 2, cfg.dt), 12)
        grid = sorted(set(u.tolist()) | set(cfg.grid))
        ens = est.collect_currents(sim_config(cfg, grid, ("current",)), cfg.replicas, threads)
        curve = est.green_kubo_D(ens, cfg.rho, law, cfg.grid)
        written.append(write_curve(out_dir / "green_kubo.csv", curve, cfg, law))

    elif cfg.experiment == "height":
        window = cfg.window or max(max(est.height_window(law, cfg.rho, t, 1e-3) for t in cfg.grid), 20) + 1
        ens = est.collect_heights(sim_config(cfg, cfg.grid, ("height",)), cfg.replicas, window, threads)
        hs = est.HeightStats(ens)
        curves = [est.height_diffusivity(hs, cfg.rho, t, law) for t in cfg.grid]
        curve = est.DiffusivityCurve(
            np.array([c.grid[0] for c in curves]), np.array([c.values[0] for c in curves]),
            np.array([c.se[0] for c in curves]), "height", ens.replicas)
        written.append(write_curve(out_dir / "height_diffusivity.csv", curve, cfg, law))
        rows = []
        for t in cfg.grid:
            r = est.lemma41_check(hs, cfg.rho, t)
            rows += [("covariance_identity", t, int(x), float(v), float(s), ens.replicas, cfg.seed)
                     for x, v, s in zip(r["xs"], r["residual"], r["se"])]
        written.append(write_csv(out_dir / "covariance_identity.csv", RECORD_COLUMNS, rows, cfg.hash, cfg.seed, extra))

    elif cfg.experiment == "derivative":
        grid = derivative_grid(cfg.grid)
        base = est.collect_tracks(sim_config(cfg, grid), cfg.replicas, threads)
        cond = conditioned_ensembles(cfg, law, cfg.grid, cfg.replicas, threads)
        rows = []
        for t in cfg.grid:
            r = est.tDt_derivative(base, cond, cfg.rho, law, t)
            rows.append((t, r["lhs"], r["lhs_se"], r["rhs"], r["rhs_se"], r["richardson"], r["step"],
                         cfg.replicas, cfg.seed))
        written.append(write_csv(
            out_dir / "tD_derivative.csv",
            ("t", "lhs", "lhs_se", "rhs", "rhs_se", "richardson", "step", "replicas", "seed"),
            rows, cfg.hash, cfg.seed, extra))
        rows = []
        for t in cfg.grid:
            for z in sorted({abs(zz) for zz in law.offsets if zz != 0}):
                r = est.conditional_mean_identities(cond, cfg.rho, law, t, z)
                rows.append((t, z, r["iden1"], r["iden1_se"], r["iden2"], r["iden2_se"], cfg.replicas, cfg.seed))
        written.append(write_csv(
            out_dir / "conditional_means.csv",
            ("t", "z", "iden1", "iden1_se", "iden2", "iden2_se", "replicas", "seed"),
            rows, cfg.hash, cfg.seed, extra))

    elif cfg.experiment == "three_class":
        ens = est.collect_pairs(sim_config(cfg, cfg.grid), cfg.replicas, threads)
        means, bins = [], []
        for t in cfg.grid:
            r = est.three_class_report(ens, law, t)
            means.append((t, r["mean_A"], r["se_A"], r["mean_B"], r["se_B"], r["diff"], r["diff_se"],
                          cfg.replicas, cfg.seed))
            bins += [(t, b["T_lo"], b["T_hi"], b["count"], b["empirical"], b["predicted"], b["se"])
                     for b in r["bins"]]
        written.append(write_csv(
            out_dir / "three_class.csv",
            ("t", "mean_A", "se_A", "mean_B", "se_B", "diff", "diff_se", "replicas", "seed"),
            means, cfg.hash, cfg.seed, extra))
        written.append(write_csv(
            out_dir / "order_bins.csv",
            ("t", "T_lo", "T_hi", "count", "empirical", "predicted", "se"),
            bins, cfg.hash, cfg.seed, extra))
    return written
