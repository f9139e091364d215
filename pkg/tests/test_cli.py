import json

import numpy as np
import pytest

from dualma.cli import EXIT_CONFIG, EXIT_OK, EXIT_PROPERTY, main, run
from dualma.config import ConfigError, RunConfig, parse_config
from dualma.report import SCHEMA_VERSION, dumps

GOLDEN = """
[run]
subcommand = solve
N = 33
seed = 4

[problem]
n = 3
p = 1
q = 3

[domain]
kind = disk
R = 1
"""


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_parse_config():
    cfg = parse_config(GOLDEN)
    assert cfg.N == 33 and cfg.seed == 4 and cfg.params.regime == "subcritical"
    assert cfg.build_domain().R == 1.0


def test_parse_polygon_and_cusp():
    cfg = parse_config("[problem]\nn=3\np=0\nq=3\neps=1e-3\n[domain]\nkind = cusp-hull\na = 0.8\n")
    assert cfg.build_domain().b == pytest.approx(2 / 3)
    cfg = parse_config("[domain]\nkind = polygon\nvertices = -1 -1; 1 -1; 0 1\n")
    assert cfg.build_domain().measure == pytest.approx(2.0)


@pytest.mark.parametrize("text", [
    "[problem]\nn = 3\np = 0.5\nq = 2\neps = 0.1\n",
    "[run]\nsubcommand = dance\n",
    "[tolerances]\nnewton = -1\n",
    "[domain]\nkind = hexagon\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text).validate()


def test_invalid_regime_exit_3(tmp_path, capsys):
    p = _write(tmp_path, "[problem]\nn = 3\np = 0.5\nq = 2\neps = 0.1\n")
    assert main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert "no regime" in capsys.readouterr().err


def test_solve_report_deterministic(tmp_path):
    p = _write(tmp_path, GOLDEN)
    assert main(["solve", "--config", str(p), "--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(["solve", "--config", str(p), "--out", str(tmp_path / "b")]) == EXIT_OK
    ra = (tmp_path / "a" / "report.json").read_bytes()
    rb = (tmp_path / "b" / "report.json").read_bytes()
    doc_a, doc_b = json.loads(ra), json.loads(rb)
    doc_a["config"]["out"] = doc_b["config"]["out"] = None
    assert doc_a == doc_b
    assert doc_a["schema"] == SCHEMA_VERSION and doc_a["properties"]["converged"]["passed"]
    assert (tmp_path / "a" / "field.csv").exists()


def test_selftest(tmp_path):
    assert run(RunConfig(subcommand="selftest", out=str(tmp_path))) == EXIT_OK


def test_property_failure_exit_1(tmp_path):
    text = GOLDEN.replace("subcommand = solve", "subcommand = holder\nband = 0.1 0.2").replace("N = 33", "N = 129")
    p = _write(tmp_path, text)
    assert main(["holder", "--config", str(p), "--out", str(tmp_path / "h")]) == EXIT_PROPERTY
    rep = json.loads((tmp_path / "h" / "report.json").read_text())
    assert not rep["properties"]["exponent_band"]["passed"]
    assert (tmp_path / "h" / "profile.csv").read_text().startswith("d,abs_u")


def test_report_float_format():
    text, timings = dumps({"a": 0.1, "wall_time": 3.0, "b": [np.float64(1 / 3), np.nan], "c": True})
    assert '"a": 0.10000000000000001' in text
    assert "wall_time" not in text and timings == {"wall_time": 3.0}
    assert json.loads(text)["b"][1] == "nan"
