import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from nvscatter.cli import main, parse_config, ConfigError
from nvscatter.fieldio import read_provenance
from nvscatter.report import ReportSchemaError, render_csv, report_render


def _run(tmp_path, cfg, name="out", extra=()):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(cfg) if isinstance(cfg, dict) else cfg)
    out = tmp_path / name
    code = main(["--config", str(p), "--out", str(out), *extra])
    return code, out


def test_roots_at_rest(tmp_path):
    code, out = _run(tmp_path, {"command": "roots"})
    assert code == 0
    lines = (out / "roots.csv").read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    rows = list(csv.DictReader(lines[1:]))
    assert len(rows) == 6
    assert all(abs(float(r["modulus"]) - 1) < 1e-12 for r in rows)


def test_zero_amplitude_scatter(tmp_path):
    code, out = _run(tmp_path, {"command": "scatter", "potential": {"amplitude": 0.0}})
    assert code == 0
    rep = json.loads((out / "report.json").read_text())
    vals = [v for row in rep["tables"]["quads"] for k, v in row.items() if not k.startswith("lam")]
    assert vals and all(v == 0 for v in vals)


@pytest.mark.parametrize("cfg,key", [
    ('{"command": "scatter",', "command"),
    ({"command": "scatter", "bogus": 1}, "bogus"),
    ({"command": "fly"}, "command"),
    ({"grid": {"N": 15}}, "grid"),
    ({"tolerances": {"shift": -1}}, "tolerances.shift"),
    ({"params": {"dt": 0}}, "params.dt"),
    ({"potential": {"family": "box"}}, "potential"),
    ({"lambdas": {"points": [[0, 0]]}}, "lambdas.points[0]"),
])
def test_config_errors_exit_2(tmp_path, capsys, cfg, key):
    code, _ = _run(tmp_path, cfg)
    assert code == 2
    assert key in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o")]) == 2


def test_determinism(tmp_path):
    cfg = {"command": "roots", "params": {"random_velocities": 20}}
    _, a = _run(tmp_path, cfg, "a", ["--seed", "7"])
    _, b = _run(tmp_path, cfg, "b", ["--seed", "7"])
    _, c = _run(tmp_path, cfg, "c", ["--seed", "8"])
    for f in ("report.json", "summary.txt", "roots.csv"):
        assert (a / f).read_bytes() == (b / f).read_bytes()
    assert (a / "roots.csv").read_bytes() != (c / "roots.csv").read_bytes()


def test_sweep_lambda_set():
    cfg = parse_config(json.dumps({"energy": 1, "lambdas": {"sweep": {"rmin": 0.05, "rmax": 30, "count": 40}}}))
    from nvscatter.cli import lambda_set
    lams = lambda_set(cfg)
    assert len(lams) == 40
    assert min(abs(abs(l) - 1) for l in lams) >= 0.05 - 1e-12
    with pytest.raises(ConfigError):
        parse_config(json.dumps({"lambdas": {"sweep": {"rmin": 2, "rmax": 1, "count": 3}}}))


def test_nvsim_artifacts_carry_hash(tmp_path):
    code, out = _run(tmp_path, {"command": "nvsim", "grid": {"R": 10.0, "N": 32}})
    assert code == 0
    h = json.loads((out / "report.json").read_text())["config_hash"]
    assert read_provenance(out / "v_final.nvsf")["config_hash"] == h
    assert (out / "mass.csv").read_text().startswith(f"# config_hash={h}\n")


def test_audit_command(tmp_path):
    code, out = _run(tmp_path, {"command": "audit", "grid": {"R": 6.0, "N": 32}})
    assert code == 0
    text = (out / "summary.txt").read_text()
    assert "not a soliton" in text and text.count("[FAIL]") + text.count("[ok  ]") == 3


def test_console_script(tmp_path):
    p = tmp_path / "r.json"
    p.write_text('{"command": "roots"}')
    r = subprocess.run([sys.executable, "-m", "nvscatter.cli", "--config", str(p), "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "status: PASS" in r.stdout


def test_render_empty_and_twice():
    rep = {"command": "scatter", "config_hash": "x", "passed": True, "summary": {}, "tables": {"quads": []}}
    text, tables = report_render(rep)
    assert tables["quads"].splitlines() == ["# config_hash=x", "lam_re,lam_im,a_re,a_im,b_re,b_im,alpha_re,alpha_im,"
                                            "beta_re,beta_im"]
    assert report_render(rep) == (text, tables)


def test_render_schema_mismatch():
    with pytest.raises(ReportSchemaError):
        render_csv("roots", [{"c_re": 0.0, "colour": 1}])
    with pytest.raises(ReportSchemaError):
        report_render({"tables": {}})


def test_audit_table_schema():
    steps = [{"step": s, "value": 1.0, "tol": 1e-6, "passed": False} for s in ("b", "a", "v")]
    text, tables = report_render({"command": "audit", "tables": {"audit": steps}})
    assert tables["audit"].splitlines()[0] == "step,value,tol,passed"
    assert len(tables["audit"].splitlines()) == 4
