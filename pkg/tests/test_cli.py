import json
import subprocess
import sys

import pytest

from gridmetric.cli import main, resolve_config


def run(*args):
    return subprocess.run([sys.executable, "-m", "gridmetric.cli", *args], capture_output=True, text=True)


def test_unknown_flag_exits_2():
    r = run("fpp-profile", "--no-such-flag")
    assert r.returncode == 2


def test_missing_subcommand_exits_2():
    assert run().returncode == 2


def test_manifest_and_replay(tmp_path):
    out = tmp_path / "a"
    assert main(["fpp-profile", "--n", "120", "--trials", "2", "--angles", "5", "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["subcommand"] == "fpp-profile"
    assert set(man["outputs"]) == {"profile.csv", "summary.json"}
    assert man["config"]["n"] == 120
    assert "+" in man["version"] and man["wall_time_s"] >= 0
    r = run("replay", str(out / "manifest.json"), "--out", str(tmp_path / "b"))
    assert r.returncode == 0, r.stderr
    assert json.loads(r.stdout)["identical"] is True
    for f in man["outputs"]:
        assert (out / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": 150, "trials": 3, "dist": "uniform:0,1"}))
    got = resolve_config(["fpp-profile", "--config", str(cfg), "--trials", "5"])
    assert got["n"] == 150
    assert got["dist"] == "uniform:0,1"
    assert got["trials"] == 5
    assert got["angles"] == 33


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["fpp-profile", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigError"


def test_runtime_error_report(tmp_path):
    out = tmp_path / "e"
    r = run("fpp-ball", "--dist", "weibull:1,1", "--out", str(out))
    assert r.returncode == 1
    rep = json.loads((out / "error.json").read_text())
    assert rep["subcommand"] == "fpp-ball" and "weibull" in rep["message"]
    assert json.loads(r.stderr.strip().splitlines()[-1]) == rep


@pytest.mark.parametrize("argv,files", [
    (["highway-build", "--n", "3000"], {"segments.csv", "audit.json"}),
    (["highway-verify", "--n", "3000", "--pairs", "10", "--max-sep", "200"], {"verify.csv", "summary.json"}),
    (["pinwheel-build", "--window", "120"], {"tiling.json", "embedding.json", "audit.json"}),
    (["pinwheel-stretch", "--window", "150", "--pairs", "20", "--bins", "4"], {"stretch.csv", "stretch_pairs.csv"}),
    (["fpp-ball", "--radius", "30"], {"ball.csv", "summary.json"}),
    (["fpp-errlp", "--radius", "30"], {"errlp.csv", "fit.json"}),
    (["mono-eps", "--n", "120", "--trials", "2", "--tol", "0.05"], {"eps.json"}),
    (["optimize", "--budget", "1", "--inner", "1", "--eval-n", "100", "--eval-trials", "2",
      "--eval-angles", "5"], {"history.csv", "best.json"}),
])
def test_subcommands_write_outputs(tmp_path, argv, files):
    out = tmp_path / "o"
    assert main([*argv, "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert set(man["outputs"]) == files
    for f in files:
        assert (out / f).stat().st_size > 0


def test_json_format(tmp_path):
    out = tmp_path / "o"
    assert main(["highway-build", "--n", "3000", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads((out / "segments.json").read_text())
    assert doc["levels"] == [4]  # floor(3000 ** 0.2)
