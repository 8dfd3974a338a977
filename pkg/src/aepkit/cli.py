"""Command-line front end.

Exit codes: 0 success, 1 runtime error, 2 config error, 3 verdict or
acceptance failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .errors import AepError, ConfigError, GoldenDrift
from .io import (
    RunManifest, dumps, load_config, parse_law_token, read_csv, write_csv, write_json,
)

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_FAIL = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    return [float(s) for s in text.split(",") if s.strip()]


def _ints(text: str) -> list[int]:
    return [int(s) for s in text.split(",") if s.strip()]


# --------------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    from .experiments import run_experiment

    cfg = load_config(args.config)
    out = Path(args.out or cfg.out_dir)
    threads = args.threads if args.threads is not None else cfg.threads
    print(f"aepkit {__version__} simulate: experiment={cfg.experiment} seed={cfg.seed} config={cfg.hash}")
    manifest = RunManifest("simulate:" + cfg.experiment, cfg.hash, cfg.seed)
    manifest.outputs = run_experiment(cfg, out, threads)
    manifest.write(out)
    for p in manifest.outputs:
        print(f"wrote {p}")
    return EXIT_OK


# --------------------------------------------------------------------- oracle

GOLDEN_TOL = 1e-10


def golden_values() -> dict:
    """Exact small-ring values regenerated by ``aepkit oracle``."""
    from . import oracle
    from .model import TASEP

    entries = {}
    for t in (0.5, 1.0, 2.0):
        S = oracle.exact_two_point(10, 0.5, TASEP, t)
        entries[f"two_point/L=10/rho=0.5/t={t}"] = {
            "op": "exact_two_point", "L": 10, "rho": 0.5, "t": t, "law": "1:1", "values": S.tolist()}
    for L, t in ((12, 1.0), (14, 2.0)):
        D = oracle.exact_diffusivity(L, 0.5, TASEP, t)
        entries[f"diffusivity/L={L}/rho=0.5/t={t}"] = {
            "op": "exact_diffusivity", "L": L, "rho": 0.5, "t": t, "law": "1:1", "values": [D]}
    for k, lam in ((1, 0.5), (2, 1.0)):
        phi = [((0, 1), 1.0), ((0, k + 1), -1.0)]
        val = oracle.ring_h1_seminorm(phi, lam, 14, TASEP, flavor="symmetric")
        entries[f"h1_symmetric/V_k={k}/L=14/lambda={lam}"] = {
            "op": "ring_h1_seminorm", "L": 14, "rho": 0.5, "lambda": lam, "flavor": "symmetric",
            "phi": f"eta_hat(0,1) - eta_hat(0,{k + 1})", "values": [val]}
    return {"tolerance": GOLDEN_TOL, "entries": entries}


def compare_golden(old: dict, new: dict, tol: float) -> list[str]:
    drift = []
    for name, entry in new["entries"].items():
        if name not in old.get("entries", {}):
            continue
        a = np.asarray(old["entries"][name]["values"], dtype=float)
        b = np.asarray(entry["values"], dtype=float)
        if a.shape != b.shape or np.max(np.abs(a - b)) > tol:
            drift.append(name)
    return drift


def cmd_oracle(args) -> int:
    out = Path(args.out)
    new = golden_values()
    if out.exists() and not args.force:
        old = json.loads(out.read_text())
        drift = compare_golden(old, new, float(old.get("tolerance", GOLDEN_TOL)))
        if drift:
            raise GoldenDrift(f"golden values drifted beyond tolerance: {', '.join(drift)} "
                              "(use --force to overwrite)")
    write_json(out, new, config_hash="oracle-golden", seed=None)
    print(f"wrote {out} ({len(new['entries'])} entries)")
    return EXIT_OK


# --------------------------------------------------------------------- resolvent

def cmd_resolvent(args) -> int:
    from . import resolvent as rs
    from .errors import NonPositiveLambda
    from .model import TASEP

    ks = _ints(args.k)
    lams = _floats(args.lambdas)
    bad = [lam for lam in lams if not lam > 0]
    if bad:
        raise NonPositiveLambda(f"lambda values must be positive, got {bad}")
    out = Path(args.out)
    tag = "resolvent"
    rows, bounds = [], []
    for k in ks:
        vals = []
        for lam in lams:
            r = rs.prop22_value(k, lam)
            vals.append(r.value_closed)
            rows.append((k, lam, r.value_closed, r.value_numeric, abs(r.value_closed - r.value_numeric),
                         r.gamma, r.c1, r.c2, r.c1_numeric, r.c2_numeric))
        vals = np.array(vals)
        bounds.append((k, float(vals.min()), float(vals.max()), float(vals.max() / vals.min())))
    fit = rs.s_norm_scaling(rs.current_kernel(TASEP), np.geomspace(1e-8, 1e-2, 13))
    files = [
        write_csv(out / "vk_sweep.csv",
                  ("k", "lambda", "closed", "numeric", "abs_diff", "gamma", "c1", "c2", "c1_numeric", "c2_numeric"),
                  rows, tag, 0),
        write_csv(out / "vk_bounds.csv", ("k", "min", "max", "max_over_min"), bounds, tag, 0),
        write_csv(out / "current_scaling.csv", ("kernel", "lambda", "value"),
                  [("tasep_current", lam, v) for lam, v in zip(fit.lambdas, fit.values)], tag, 0,
                  {"slope": repr(fit.slope)}),
    ]
    print(f"TASEP current resolvent slope {fit.slope:.4f} on lambda in [1e-8, 1e-2]")
    for k, lo, hi, ratio in bounds:
        print(f"k={k}: min {lo:.6g} max {hi:.6g} ratio {ratio:.4f}")
    m = RunManifest("resolvent", tag, 0, files)
    m.write(out)
    return EXIT_OK


# --------------------------------------------------------------------- report

DEMO_FILES = {"law": "demo_aep.csv", "tasep": "demo_tasep.csv", "monotone": "demo_monotone.csv"}


def _load_curve(path):
    from .estimators import DiffusivityCurve

    meta, rows = read_csv(path)
    rows = [r for r in rows if r["method"] != "two_point"]
    curve = DiffusivityCurve(
        np.array([float(r["t"]) for r in rows]), np.array([float(r["estimate"]) for r in rows]),
        np.array([float(r["se"]) for r in rows]), rows[0]["method"] if rows else "variance",
        int(rows[0]["replicas"]) if rows else 0)
    law = parse_law_token(meta["law"]) if "law" in meta else None
    return meta, curve, law


def build_report(law_path, tasep_path=None, monotone_path=None) -> dict:
    from .analysis import weak_sense_verdict
    from .errors import GridMismatch
    from .estimators import monotonicity_report

    meta, curve, law = _load_curve(law_path)
    if law is None:
        raise ConfigError(f"{law_path}: no law recorded in the header")
    if tasep_path is None:
        raise GridMismatch("no TASEP baseline curve supplied")
    tmeta, tcurve, _ = _load_curve(tasep_path)
    verdict = weak_sense_verdict(curve.grid, curve.values, law, tcurve.grid, tcurve.values)
    report = {"weak_sense": verdict,
              "inputs": {"law": {"config": meta.get("config"), "seed": meta.get("seed")},
                         "tasep": {"config": tmeta.get("config"), "seed": tmeta.get("seed")}}}
    mono = {}
    for name, c in (("law", curve), ("tasep", tcurve)):
        mono[name] = monotonicity_report(c)
    if monotone_path is not None:
        mmeta, mcurve, _ = _load_curve(monotone_path)
        mono["nearest_neighbour"] = monotonicity_report(mcurve)
        report["inputs"]["monotone"] = {"config": mmeta.get("config"), "seed": mmeta.get("seed")}
    report["monotonicity"] = mono
    report["pass"] = bool(verdict["ratio"]["pass"] and verdict["exponent"]["pass_tasep"]
                          and all(m["verdict"] for m in mono.values()))
    return report


def demo_path(name: str) -> Path:
    return Path(str(resources.files("aepkit") / "data" / DEMO_FILES[name]))


def cmd_report(args) -> int:
    if args.demo:
        law, tasep, mono = demo_path("law"), demo_path("tasep"), demo_path("monotone")
    else:
        law, tasep, mono = args.law, args.tasep, args.monotone
        if law is None:
            raise ConfigError("report needs --law (or --demo)")
    report = build_report(law, tasep, mono)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(dumps(report))
    print(f"wrote {out}: pass={report['pass']} ratio band "
          f"[{report['weak_sense']['ratio']['min']:.3f}, {report['weak_sense']['ratio']['max']:.3f}]")
    return EXIT_OK if report["pass"] else EXIT_FAIL


# --------------------------------------------------------------------- acceptance

def cmd_acceptance(args) -> int:
    from .acceptance import run_acceptance

    only = _ints(args.only) if args.only else None
    results = run_acceptance(Path(args.out), threads=args.threads or 1, only=only, seed=args.seed)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aepkit", description="Exclusion-process simulation and verification toolkit")
    p.add_argument("--version", action="version", version=f"aepkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a config-driven experiment")
    s.add_argument("config")
    s.add_argument("--out", default=None)
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("oracle", help="regenerate golden exact values")
    s.add_argument("--out", default="golden_oracle.json")
    s.add_argument("--force", action="store_true")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("resolvent", help="closed-form vs numeric resolvent sweep")
    s.add_argument("--k", default="1,2,3,4,5")
    s.add_argument("--lambdas", default="1e-1,1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8")
    s.add_argument("--out", default="resolvent_out")
    s.set_defaults(func=cmd_resolvent)

    s = sub.add_parser("report", help="weak-sense verdict and monotonicity over stored curves")
    s.add_argument("--law")
    s.add_argument("--tasep")
    s.add_argument("--monotone")
    s.add_argument("--demo", action="store_true", help="use the bundled demo curves")
    s.add_argument("--out", default="verdict.json")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("acceptance", help="run the acceptance criteria")
    s.add_argument("--out", default="acceptance_out")
    s.add_argument("--only", default=None, help="comma-separated criterion numbers")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=cmd_acceptance)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AepError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
