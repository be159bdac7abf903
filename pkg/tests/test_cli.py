import json
import subprocess
import sys

import pytest


def run_cli(*args, **kw):
    return subprocess.run([sys.executable, "-m", "greenlab.cli", *args],
                          capture_output=True, text=True, **kw)


def test_automaton_check(tmp_path):
    out = tmp_path / "a"
    res = run_cli("automaton", "--check", "--kind", "free", "--size", "2",
                  "--out", str(out))
    assert res.returncode == 0, res.stderr
    rep = json.loads((out / "automaton.json").read_text())
    assert rep["states"] == 5             # F_2 word acceptor
    assert (out / "automaton_edges.tsv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["status"] == "ok"


def test_llt_fit_smoke(tmp_path):
    out = tmp_path / "llt"
    res = run_cli("llt-fit", "--profile", "smoke", "--kind", "free",
                  "--size", "2", "--out", str(out))
    assert res.returncode == 0, res.stderr
    fit = json.loads((out / "llt_fit.json").read_text())
    assert fit["exponent"] == pytest.approx(1.5, abs=0.02)


def test_rerun_is_deterministic(tmp_path):
    manifests = []
    for name in ("one", "two"):
        out = tmp_path / name
        res = run_cli("green", "--profile", "smoke", "--kind", "free",
                      "--size", "2", "--r", "0.9", "--out", str(out),
                      "--cache", str(tmp_path / "cache"))
        assert res.returncode == 0, res.stderr
        manifests.append(json.loads((out / "manifest.json").read_text()))
    assert manifests[0]["outputs"] == manifests[1]["outputs"]
    assert manifests[0]["config_hash"] == manifests[1]["config_hash"]


def test_crit_radius_syntax(tmp_path):
    out = tmp_path / "g"
    res = run_cli("green", "--profile", "smoke", "--kind", "free",
                  "--size", "2", "--r", "crit*0.5", "--out", str(out))
    assert res.returncode == 0, res.stderr
    rep = json.loads((out / "green.json").read_text())
    assert rep["r"] == pytest.approx(0.5 * 2 / 3 ** 0.5)


def test_error_record(tmp_path):
    out = tmp_path / "bad"
    res = run_cli("green", "--profile", "smoke", "--kind", "free",
                  "--size", "2", "--r", "-3", "--out", str(out))
    assert res.returncode == 2
    err = json.loads((out / "error.json").read_text())
    assert err["error"] == "ValueError"
    assert err["subcommand"] == "green"


def test_config_file(tmp_path):
    cfg = tmp_path / "exp.ini"
    cfg.write_text("[experiment]\nkind = free\nsize = 2\nM = 4\nr = 0.5\n")
    out = tmp_path / "cfg"
    res = run_cli("green", "--profile", "smoke", "--config", str(cfg),
                  "--out", str(out))
    assert res.returncode == 0, res.stderr
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["M"] == 4
