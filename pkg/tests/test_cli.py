import csv
import json
import subprocess
import sys

import pytest

from loopsoup.cli import main, parse_grid
from loopsoup.core import ConfigError

GEN = {"interval": [0, 10], "kappa": {"density": [[0, 10, 0.5, 0]]}}


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps({"generator": GEN}))
    return str(p)


def read(path):
    with open(path) as fh:
        header = fh.readline()
        rows = list(csv.DictReader(fh))
    return header, rows


def test_sample_dpp_is_reproducible(tmp_path, config):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sample-dpp", "--config", config, "--seed", "42", "--replicas", "4", "--out", str(a)]) == 0
    assert main(["sample-dpp", "--config", config, "--seed", "42", "--replicas", "4", "--out", str(b)]) == 0
    assert (a / "dpp.csv").read_bytes() == (b / "dpp.csv").read_bytes()
    header, rows = read(a / "dpp.csv")
    assert header.startswith("# loopsoup dpp schema=1")
    ids = [int(r["replica_id"]) for r in rows]
    assert ids == sorted(ids) and set(ids) == {0, 1, 2, 3}


def test_sample_field_shape(tmp_path, config):
    out = tmp_path / "f"
    assert main(["sample-field", "--config", config, "--alpha", "0.5", "--grid", "0:10:0.01",
                 "--replicas", "2", "--out", str(out)]) == 0
    _, rows = read(out / "field.csv")
    assert sum(r["replica_id"] == "0" for r in rows) == 1001
    assert sum(r["replica_id"] == "1" for r in rows) == 1001


def test_identity_coupling(tmp_path, config):
    lam = tmp_path / "lam.json"
    lam.write_text(json.dumps({"components": []}))
    out = tmp_path / "c"
    assert main(["couple", "--config", config, "--lambda-file", str(lam), "--seed", "5", "--replicas", "3",
                 "--out", str(out)]) == 0
    _, rows = read(out / "couple.csv")
    for rid in "012":
        pts = {k: sorted(float(r["x"]) for r in rows if r["replica_id"] == rid and r["kind"] == k)
               for k in ("Y", "Z", "Y~", "Z~")}
        assert pts["Y"] == pts["Y~"] and pts["Z"] == pts["Z~"]


def test_coupling_contains_cuts(tmp_path, config):
    lam = tmp_path / "lam.json"
    lam.write_text(json.dumps({"components": [{"kappa": {"density": [[0, 10, 0.5, 0]]}, "q": [0, 1]}]}))
    out = tmp_path / "c"
    assert main(["couple", "--config", config, "--lambda-file", str(lam), "--replicas", "3", "--out", str(out)]) == 0
    _, rows = read(out / "couple.csv")
    for rid in "012":
        z = {r["x"] for r in rows if r["replica_id"] == rid and r["kind"] == "Z"}
        zt = {r["x"] for r in rows if r["replica_id"] == rid and r["kind"] == "Z~"}
        assert z <= zt


def test_sample_loops_and_kernels(tmp_path, config):
    assert main(["sample-loops", "--alpha", "1", "--dt", "1e-3", "--replicas", "2", "--out", str(tmp_path)]) == 0
    _, rows = read(tmp_path / "loops.csv")
    assert rows and all(float(r["max"]) >= float(r["min"]) for r in rows)
    assert main(["kernels", "--config", config, "--grid", "0:10:0.5", "--out", str(tmp_path)]) == 0
    _, rows = read(tmp_path / "kernels.csv")
    assert len(rows) == 21
    mid = rows[10]
    assert float(mid["green_diag"]) == pytest.approx(float(mid["u_up"]) * float(mid["u_down"]))


@pytest.mark.parametrize("doc", ["{not json", '{"generator": {"interval": [3, 1]}}', "[1, 2]"])
def test_config_errors_exit_2(tmp_path, doc, capsys):
    p = tmp_path / "bad.json"
    p.write_text(doc)
    assert main(["sample-dpp", "--config", str(p), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert main(["sample-dpp", "--config", str(tmp_path / "nope.json")]) == 2


def test_json_error_reports_position(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "seed": 1,\n  oops\n}')
    main(["sample-dpp", "--config", str(p)])
    assert "line 3" in capsys.readouterr().err


def test_unknown_suite_lists_suites(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--suite", "nope"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert "core" in err and "coupling" in err


def test_verify_writes_report(tmp_path, capsys):
    code = main(["verify", "--suite", "core", "--out", str(tmp_path)])
    report = json.loads((tmp_path / "report.json").read_text())
    assert code == (0 if report["passed"] else 1)
    assert report["rows"][0]["name"] == "green_exactness"
    assert "PASS green_exactness" in capsys.readouterr().out


def test_grid_parsing():
    assert parse_grid("0:10:0.01").size == 1001
    for bad in ("0:10", "1:0:0.1", "0:1:0.3"):
        with pytest.raises(ConfigError):
            parse_grid(bad)


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "loopsoup", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip()
