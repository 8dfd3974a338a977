import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aepkit import cli
from aepkit.errors import ConfigError
from aepkit.io import (
    ConfigParse, law_token, parse_config, parse_law_token, read_csv, write_csv,
)
from aepkit.model import make_jump_law

GOLDEN = Path(__file__).parent / "golden" / "golden_oracle.json"

GOOD = """
[run]
experiment = diffusivity
seed = 3
replicas = 40
horizon = 2
grid = 1, 2
rho = 0.5
threads = 1

[law]
1 = 2/3
-1 = 1/3
"""


def write(tmp_path, text, name="cfg.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_good_config():
    cfg = parse_config(GOOD)
    assert cfg.grid == (1.0, 2.0) and cfg.ring is None
    assert cfg.jump_law().b == pytest.approx(1 / 3)


def test_geometric_grid():
    cfg = parse_config(GOOD.replace("grid = 1, 2", "grid = geom(0.1, 2, 5)"))
    assert len(cfg.grid) == 5 and cfg.grid[-1] == pytest.approx(2.0)


@pytest.mark.parametrize("old, new, needle", [
    ("1 = 2/3", "1 = abc", "[law] 1"),
    ("1 = 2/3", "1 = 3/3", "[law]"),
    ("-1 = 1/3", "-1 = -1/3", "[law] -1"),
    ("experiment = diffusivity", "experiment = nope", "experiment"),
    ("grid = 1, 2", "grid = 1, 3", "grid"),
    ("rho = 0.5", "rho = 1.5", "rho"),
    ("replicas = 40", "replicas = many", "replicas"),
    ("[law]", "[laws]", "[law]"),
])
def test_bad_config_names_entry(old, new, needle):
    with pytest.raises(ConfigParse) as info:
        parse_config(GOOD.replace(old, new))
    assert needle in str(info.value)
    assert isinstance(info.value, ConfigError)


def test_hash_ignores_threads_and_output():
    a = parse_config(GOOD)
    b = parse_config(GOOD.replace("threads = 1", "threads = 4") + "\n[output]\ndir = elsewhere\n")
    c = parse_config(GOOD.replace("seed = 3", "seed = 4"))
    assert a.hash == b.hash != c.hash


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_csv_roundtrip_exact(values):
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        p = write_csv(Path(d) / "x.csv", ("i", "v"), enumerate(values), "abc", 9, {"k": "w"})
        meta, rows = read_csv(p)
    assert meta["config"] == "abc" and meta["seed"] == "9" and meta["k"] == "w"
    assert [float(r["v"]) for r in rows] == values


@given(st.dictionaries(st.integers(-4, 4).filter(bool), st.integers(1, 9), min_size=1, max_size=4))
def test_law_token_roundtrip(weights):
    total = sum(weights.values())
    law = make_jump_law({z: Fraction(w, total) for z, w in weights.items()})
    assert parse_law_token(law_token(law)) == law


# --------------------------------------------------------------------- CLI

def test_simulate_invalid_law_exit_code(tmp_path, capsys):
    p = write(tmp_path, GOOD.replace("1 = 2/3", "1 = 0.9"))
    assert cli.main(["simulate", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG
    assert "[law]" in capsys.readouterr().err


def test_simulate_reproducible_across_threads(tmp_path):
    p = write(tmp_path, GOOD)
    assert cli.main(["simulate", str(p), "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert cli.main(["simulate", str(p), "--out", str(tmp_path / "b"), "--threads", "2"]) == 0
    for name in ("diffusivity.csv", "two_point.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "timing.json").exists()


@pytest.mark.parametrize("lams", ["0", "1e-3,-1"])
def test_resolvent_rejects_nonpositive_lambda(tmp_path, lams):
    assert cli.main(["resolvent", "--lambdas", lams, "--out", str(tmp_path)]) == cli.EXIT_CONFIG


def test_resolvent_sweep(tmp_path):
    assert cli.main(["resolvent", "--k", "1,2", "--lambdas", "1e-1,1e-4", "--out", str(tmp_path)]) == 0
    _, rows = read_csv(tmp_path / "vk_sweep.csv")
    assert len(rows) == 4 and all(float(r["abs_diff"]) <= 1e-10 for r in rows)
    meta, _ = read_csv(tmp_path / "current_scaling.csv")
    assert float(meta["slope"]) == pytest.approx(-0.5, abs=0.02)


def test_bundled_golden_values_match():
    old = json.loads(GOLDEN.read_text())
    assert cli.compare_golden(old, cli.golden_values(), old["tolerance"]) == []


def test_oracle_drift_detection(tmp_path):
    out = tmp_path / "golden.json"
    out.write_text(GOLDEN.read_text())
    assert cli.main(["oracle", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    key = next(iter(data["entries"]))
    data["entries"][key]["values"][0] += 1e-6
    out.write_text(json.dumps(data))
    assert cli.main(["oracle", "--out", str(out)]) == cli.EXIT_RUNTIME
    assert cli.main(["oracle", "--out", str(out), "--force"]) == 0
    assert cli.main(["oracle", "--out", str(out)]) == 0


def test_report_demo(tmp_path):
    out = tmp_path / "verdict.json"
    assert cli.main(["report", "--demo", "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["pass"] and rep["weak_sense"]["ratio"]["pass"]
    assert set(rep["monotonicity"]) == {"law", "tasep", "nearest_neighbour"}


def test_report_grid_mismatch(tmp_path):
    law = cli.demo_path("law")
    short = tmp_path / "short.csv"
    lines = cli.demo_path("tasep").read_text().splitlines()
    short.write_text("\n".join(lines[:-1]) + "\n")
    assert cli.main(["report", "--law", str(law), "--tasep", str(short),
                     "--out", str(tmp_path / "v.json")]) == cli.EXIT_RUNTIME


def test_report_needs_input(tmp_path):
    assert cli.main(["report", "--out", str(tmp_path / "v.json")]) == cli.EXIT_CONFIG
