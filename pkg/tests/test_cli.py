import csv
import json
import subprocess
import sys

import pytest

from macdecode import verify
from macdecode.cli import main
from macdecode.report import COLUMNS


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[-1] == f"# rows={len(lines) - 2}"
    return list(csv.DictReader(lines[:-1]))


def test_simulate_noiseless_zero_ser(tmp_path):
    out = tmp_path / "r.csv"
    rc = main(["simulate", "--n", "8", "--alpha", "1.0", "--sigma", "0", "--decoder", "isq",
               "--trials", "10", "--seed", "7", "--out", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert len(rows) == 1 and float(rows[0]["ser_point"]) == 0.0
    assert list(rows[0].keys()) == COLUMNS


def test_simulate_twice_byte_identical(tmp_path):
    args = ["simulate", "--n", "8,12", "--alpha", "0.5", "--sigma", "0.2", "--decoder",
            "isq,risq,amp", "--trials", "15", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "4"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_rows_and_mirrors(tmp_path):
    out, jl, gp = tmp_path / "r.csv", tmp_path / "r.jsonl", tmp_path / "r.gp"
    rc = main(["simulate", "--n", "64", "--alpha", "0.5", "--sigma", "0.1", "--decoder",
               "risq,amp", "--trials", "200", "--seed", "1", "--out", str(out), "--jsonl", str(jl),
               "--gnuplot", str(gp)])
    assert rc == 0
    rows = read_rows(out)
    assert [r["decoder"] for r in rows] == ["risq", "amp"]
    for r in rows:
        assert float(r["ser_ci_low"]) <= float(r["ser_point"]) <= float(r["ser_ci_high"])
        assert r["symbols_total"] == str(64 * 200)
    recs = [json.loads(line) for line in jl.read_text().splitlines()]
    assert [list(r) for r in recs] == [COLUMNS, COLUMNS]
    assert str(out) in gp.read_text()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_values": [6], "sigma_values": [0.0], "alpha": 1.0,
                               "decoders": ["ml"], "trials": 3}))
    out = tmp_path / "r.csv"
    assert main(["simulate", "--config", str(cfg), "--trials", "4", "--out", str(out)]) == 0
    assert read_rows(out)[0]["trials"] == "4"


def test_config_error_names_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n_values": [6], "sigma_values": [0.0], "alpha": 1.0,
                               "trails": 3}))
    assert main(["simulate", "--config", str(cfg)]) == 2
    assert "trails" in capsys.readouterr().err
    assert main(["simulate", "--n", "8", "--sigma", "0", "--alpha", "1", "--k-fraction", "2"]) == 2
    assert "k_fraction" in capsys.readouterr().err


def test_strict_guard_skip(tmp_path, capsys):
    args = ["simulate", "--n", "30", "--alpha", "1", "--sigma", "0", "--decoder", "ml,isq",
            "--trials", "2", "--out", str(tmp_path / "r.csv")]
    assert main(args) == 0
    assert main(args + ["--strict"]) == 4
    assert "skip: ml" in capsys.readouterr().err
    assert len(read_rows(tmp_path / "r.csv")) == 1


def test_bounds_outputs(capsys):
    def table(args):
        assert main(["bounds"] + args) == 0
        return {k: float(v) for k, v in (ln.split() for ln in capsys.readouterr().out.splitlines())}
    assert table(["--k-prime", "1", "--n", "2", "--p", "0.3"])["union_bound"] == pytest.approx(0.15)
    assert table(["--n", "10", "--alpha", "0.4"])["threshold"] == pytest.approx(2.302585093)
    t = table(["--epsilon", "0.25", "--a", "2", "--n", "16", "--k-prime", "0.25"])
    assert t["grid_union_bound"] == pytest.approx(16 * 2.0 ** -80, rel=1e-8)
    t = table(["--n", "64", "--alpha", "0.5", "--sigma", "0.2"])
    assert {"threshold", "tail_bound", "union_bound", "per_user_bound"} <= set(t)


def test_bounds_range_error(capsys):
    assert main(["bounds", "--n", "10", "--k-prime", "1.5", "--p", "0.1"]) == 2
    assert "k_prime" in capsys.readouterr().err


def test_sweep_verdict_lines(tmp_path, capsys):
    out = tmp_path / "s.csv"
    rc = main(["sweep", "--n", "16,32,64", "--alpha", "0.6", "--sigma", "0.1", "--decoder",
               "risq", "--trials", "20", "--seed", "3", "--out", str(out)])
    assert rc == 0
    text = capsys.readouterr().out
    verdicts = [ln for ln in text.splitlines() if "non-increasing within CI:" in ln]
    assert len(verdicts) == 1
    assert verdicts[0].strip() in ("non-increasing within CI: true",
                                   "non-increasing within CI: false")


def test_sweep_two_decoders_two_verdicts(tmp_path, capsys):
    rc = main(["sweep", "--n", "16,32", "--alpha", "0.4", "--sigma", "0", "--decoder",
               "amp,risq", "--trials", "10", "--out", str(tmp_path / "s.csv")])
    assert rc == 0
    assert capsys.readouterr().out.count("non-increasing within CI:") == 2


def test_sweep_needs_two_n(capsys):
    assert main(["sweep", "--n", "16", "--alpha", "0.6", "--sigma", "0.1"]) == 2
    assert "n_values" in capsys.readouterr().err


def test_verify_exit_codes(monkeypatch, capsys):
    assert main(["verify", "mgf"]) == 0
    assert "PASS" in capsys.readouterr().out
    monkeypatch.setitem(verify.RUNNERS, "mgf",
                        lambda: [verify.PropertyResult("forced", False, "")])
    assert main(["verify", "mgf"]) == 3


def test_verify_determinism_suite():
    assert all(r.passed for r in verify.determinism(trials=5))


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "macdecode", "bounds", "--n", "10", "--alpha",
                          "0.4"], capture_output=True, text=True)
    assert res.returncode == 0 and "threshold" in res.stdout
