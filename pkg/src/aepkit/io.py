"""Experiment configs, deterministic CSV/JSON writers and run manifests."""
from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .errors import ConfigError
from .model import JumpLaw, _to_float, make_jump_law

EXPERIMENTS = ("diffusivity", "green_kubo", "height", "derivative", "three_class")
RECORD_COLUMNS = ("method", "t", "x", "estimate", "se", "replicas", "seed")


class ConfigParse(ConfigError):
    """A config file entry could not be parsed or validated."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int
    replicas: int
    horizon: float
    grid: tuple[float, ...]
    rho: float
    ring: int | None
    law: dict[int, str]
    window: int | None = None
    dt: float = 0.05
    out_dir: str = "out"
    threads: int = 1

    def jump_law(self) -> JumpLaw:
        return make_jump_law(self.law)

    def canonical(self) -> dict:
        """Fields that determine the results (thread count and paths excluded)."""
        d = asdict(self)
        d.pop("threads")
        d.pop("out_dir")
        d["law"] = {str(k): v for k, v in sorted(self.law.items())}
        d["grid"] = list(self.grid)
        return d

    @property
    def hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _parse_grid(text: str) -> tuple[float, ...]:
    text = text.strip()
    if text.startswith("geom(") and text.endswith(")"):
        lo, hi, n = (s.strip() for s in text[5:-1].split(","))
        return tuple(float(x) for x in np.geomspace(float(lo), float(hi), int(n)))
    return tuple(float(s) for s in text.replace(";", ",").split(",") if s.strip())


def _get(section: configparser.SectionProxy, key: str, conv, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigParse(f"[{section.name}] is missing required entry '{key}'")
        return default
    raw = section[key]
    try:
        return conv(raw)
    except (ValueError, TypeError) as exc:
        raise ConfigParse(f"[{section.name}] {key} = {raw!r}: {exc}") from None


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # keep law keys such as "-1" verbatim
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParse(f"{source}: {exc}") from None
    for name in ("run", "law"):
        if name not in cp:
            raise ConfigParse(f"{source}: missing section [{name}]")
    run = cp["run"]
    experiment = _get(run, "experiment", str, "diffusivity").strip()
    if experiment not in EXPERIMENTS:
        raise ConfigParse(f"[run] experiment = {experiment!r}: expected one of {', '.join(EXPERIMENTS)}")
    law: dict[int, str] = {}
    for key, raw in cp["law"].items():
        try:
            z = int(key)
        except ValueError:
            raise ConfigParse(f"[law] {key} = {raw!r}: offset must be an integer") from None
        law[z] = raw.strip()
    for z, raw in law.items():
        try:
            value = _to_float(raw)
        except (ValueError, ZeroDivisionError):
            raise ConfigParse(f"[law] {z} = {raw!r}: not a number") from None
        if not value >= 0 or not math.isfinite(value):
            raise ConfigParse(f"[law] {z} = {raw!r}: probabilities must be finite and non-negative")
    try:
        make_jump_law(law)
    except ConfigError as exc:
        raise ConfigParse(f"[law]: {exc}") from None
    horizon = _get(run, "horizon", float, required=True)
    grid = _get(run, "grid", _parse_grid, (horizon,))
    ring_raw = _get(run, "ring", str, "auto").strip()
    ring = None if ring_raw == "auto" else _get(run, "ring", int)
    out = cp["output"] if "output" in cp else None
    cfg = ExperimentConfig(
        experiment=experiment,
        seed=_get(run, "seed", int, required=True),
        replicas=_get(run, "replicas", int, required=True),
        horizon=horizon,
        grid=tuple(grid),
        rho=_get(run, "rho", float, 0.5),
        ring=ring,
        law=law,
        window=_get(run, "window", int, None),
        dt=_get(run, "dt", float, 0.05),
        out_dir=(out.get("dir", "out") if out is not None else "out"),
        threads=_get(run, "threads", int, 1),
    )
    if cfg.replicas < 2:
        raise ConfigParse(f"[run] replicas = {cfg.replicas}: need at least 2")
    if not 0 < cfg.rho < 1:
        raise ConfigParse(f"[run] rho = {cfg.rho}: must lie in (0, 1)")
    if any(t <= 0 or t > cfg.horizon for t in cfg.grid):
        raise ConfigParse(f"[run] grid: times must lie in (0, horizon={cfg.horizon}]")
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigParse(f"cannot read config {p}: {exc}") from None
    return parse_config(text, source=str(p))


# --------------------------------------------------------------------- writers

def fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))  # shortest string that round-trips exactly
    if x is None:
        return ""
    return str(x)


def header_line(config_hash: str, seed: int, extra: dict | None = None) -> str:
    tail = "".join(f" {k}={v}" for k, v in (extra or {}).items())
    return f"# aepkit {__version__} config={config_hash} seed={seed}{tail}\n"


def law_token(law: JumpLaw) -> str:
    return ",".join(f"{z}:{p!r}" for z, p in law.entries)


def parse_law_token(text: str) -> JumpLaw:
    entries = {}
    for part in text.split(","):
        z, p = part.split(":")
        entries[int(z)] = p
    return make_jump_law(entries)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]],
              config_hash: str, seed: int, extra: dict | None = None) -> Path:
    buf = io.StringIO()
    buf.write(header_line(config_hash, seed, extra))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def read_csv(path: Path) -> tuple[dict, list[dict]]:
    lines = Path(path).read_text().splitlines()
    meta = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        else:
            body.append(line)
    return meta, list(csv.DictReader(body))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: Path, obj, config_hash: str | None = None, seed: int | None = None) -> Path:
    payload = dict(obj)
    payload["_meta"] = {"tool": "aepkit", "version": __version__, "config": config_hash, "seed": seed}
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(payload))
    return path


def sha256_of(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


@dataclass
class RunManifest:
    operation: str
    config_hash: str
    seed: int
    outputs: list[Path] = field(default_factory=list)
    version: str = __version__
    started: float = field(default_factory=time.time)

    def write(self, out_dir: Path) -> Path:
        """Write ``manifest.json`` (reproducible) and ``timing.json`` (wall-clock)."""
        out_dir.mkdir(parents=True, exist_ok=True)
        manifest = {
            "tool": "aepkit", "version": self.version, "operation": self.operation,
            "config": self.config_hash, "seed": self.seed,
            "outputs": {p.name: sha256_of(p) for p in sorted(self.outputs)},
        }
        path = out_dir / "manifest.json"
        path.write_text(dumps(manifest))
        finished = time.time()
        (out_dir / "timing.json").write_text(dumps({
            "operation": self.operation,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(self.started)),
            "finished": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(finished)),
            "seconds": round(finished - self.started, 3),
        }))
        return path
