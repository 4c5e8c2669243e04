import csv
import json
import os
import subprocess
import sys

import pytest

from cfe import cli, schemes
from cfe.reference import reference_config
from cfe.study import NOT_APPLICABLE, ConvergenceRow, check_trend, scaled_grid_spec, worker_count


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_run_writes_outputs(write_config, tmp_path):
    cfg = write_config(reference_config("frozen"))
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    ledger = _rows(out / "ledger.csv")
    assert len({r["M0"] for r in ledger}) == 1
    assert len({r["M1"] for r in ledger}) == 1
    assert all(float(r["accumulated_loss"]) == 0.0 for r in ledger)
    assert (out / "snapshots" / "1.000000.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"] == reference_config("frozen")
    assert manifest["summary"]["accumulated_loss"] == 0.0
    assert len(manifest["config_sha256"]) == 64


def test_manifest_hash_is_stable(write_config, tmp_path):
    cfg = write_config(reference_config("frozen"))
    hashes = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        cli.main(["run", "--config", str(cfg), "--out", str(out)])
        hashes.append(json.loads((out / "manifest.json").read_text())["config_sha256"])
    assert hashes[0] == hashes[1]


def test_output_dir_from_config(write_config, tmp_path):
    raw = reference_config("frozen")
    raw["output_dir"] = "results"
    assert cli.main(["run", "--config", str(write_config(raw))]) == 0
    assert (tmp_path / "results" / "ledger.csv").exists()


def test_run_constant_coag_matches_oracle(write_config, tmp_path):
    cfg = write_config(reference_config("constant_coag"))
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    for r in _rows(out / "ledger.csv"):
        t = float(r["t"])
        assert abs(float(r["M0"]) * (2 + t) / 2 - 1) < 0.01
        assert abs(float(r["M1"]) - 1) < 0.005


def test_malformed_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kernel": {"family": "zero"},\n "T": }')
    assert cli.main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "line 2, column 7" in capsys.readouterr().err


def test_invalid_config_exit_2(write_config, tmp_path):
    raw = reference_config("frozen")
    raw["T"] = -1
    assert cli.main(["run", "--config", str(write_config(raw)), "--out", str(tmp_path / "o")]) == 2


def test_solver_error_exit_3(write_config, tmp_path, capsys):
    raw = reference_config("frozen")
    raw.update(kernel={"family": "constant_frag", "c": 50}, grid={"type": "uniform", "R": 10, "cells": 10},
               initial={"type": "monodisperse_cell", "cell": 9, "mass": 1}, T=1,
               step={"method": "euler", "dt": 1.0, "dt_min": 0.5, "positivity": "reject", "sample_every": 1.0})
    assert cli.main(["run", "--config", str(write_config(raw)), "--out", str(tmp_path / "o")]) == 3
    assert "StiffnessError" in capsys.readouterr().err


def test_usage_errors_exit_2():
    assert cli.main([]) == 2
    assert cli.main(["run"]) == 2


def test_converge_length_one_exit_2(write_config, tmp_path):
    cfg = write_config(reference_config("truncation_sweep"))
    assert cli.main(["converge", "--config", str(cfg), "--R", "10", "--out", str(tmp_path)]) == 2
    assert cli.main(["converge", "--config", str(cfg), "--R", "20,10", "--out", str(tmp_path)]) == 2
    assert cli.main(["converge", "--config", str(cfg), "--R", "10,x", "--out", str(tmp_path)]) == 2


def test_converge_scheme_mismatch_exit_2(write_config, tmp_path):
    raw = reference_config("truncation_sweep")
    raw["scheme"] = "conservative"
    assert cli.main(["converge", "--config", str(write_config(raw)), "--R", "10,20", "--out", str(tmp_path)]) == 2


def test_converge_gelation_plateau(write_config, tmp_path):
    raw = reference_config("gelation")
    raw["grid"] = {"type": "geometric", "R": 50, "cells": 100}
    raw["step"]["sample_every"] = 0.5
    out = tmp_path / "conv"
    assert cli.main(["converge", "--config", str(write_config(raw)), "--R", "50,100,200", "--out", str(out)]) == 0
    rows = _rows(out / "convergence.csv")
    assert list(rows[0]) == ["R", "final_M1", "final_accumulated_loss", "loss_fraction", "note"]
    assert [float(r["R"]) for r in rows] == [50.0, 100.0, 200.0]
    assert all(r["note"] == NOT_APPLICABLE for r in rows)
    fractions = [float(r["loss_fraction"]) for r in rows]
    assert min(fractions) > 0.05
    assert fractions[-1] == pytest.approx(fractions[-2], rel=0.2)


def test_check_trend():
    mk = lambda *fr: [ConvergenceRow(10.0 * 2**k, 4, 1.0, f, f) for k, f in enumerate(fr)]
    assert check_trend(mk(0.1, 0.01, 0.001)) == []
    assert check_trend(mk(0.1, 0.104, 0.01)) == []
    assert len(check_trend(mk(0.1, 0.2, 0.01))) == 1
    assert len(check_trend(mk(0.1, 0.1))) == 1
    assert check_trend(mk(0.0, 0.0, 0.0)) == []


def test_scaled_grid_spec():
    spec = {"type": "geometric", "R": 10, "cells": 40}
    assert scaled_grid_spec(spec, 80) == {"type": "geometric", "R": 80, "cells": 320}


def test_worker_count(monkeypatch):
    monkeypatch.setenv("CFE_THREADS", "2")
    assert worker_count(5) == 2
    assert worker_count(1) == 1
    monkeypatch.setenv("CFE_THREADS", "zero")
    with pytest.raises(Exception):
        worker_count(3)


def test_verify_missing_cases_file(tmp_path):
    assert cli.main(["verify", "--cases", str(tmp_path / "missing.json")]) == 2


def test_verify_unknown_check(tmp_path):
    path = tmp_path / "cases.json"
    path.write_text(json.dumps({"checks": ["oracle:nonexistent"]}))
    assert cli.main(["verify", "--cases", str(path)]) == 2


def test_verify_subset_passes(tmp_path, capsys):
    path = tmp_path / "cases.json"
    path.write_text(json.dumps({"checks": ["oracle:frozen", "convex:xlog1p", "ledger:identity"]}))
    assert cli.main(["verify", "--cases", str(path)]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 3


def test_verify_catches_broken_self_pair_factor(tmp_path, monkeypatch, fresh_operators):
    monkeypatch.setattr(schemes, "_SELF_PAIR_WEIGHT", 1.0)
    schemes._cached.cache_clear()
    path = tmp_path / "cases.json"
    path.write_text(json.dumps({"checks": ["ledger:identity", "ledger:conservative_drift"]}))
    assert cli.main(["verify", "--cases", str(path)]) == 1


def test_console_script_entry_point(tmp_path):
    result = subprocess.run([sys.executable, "-m", "cfe.cli", "--version"], capture_output=True, text=True)
    assert result.returncode == 0
    assert result.stdout.startswith("cfe ")


def test_verify_full_suite_passes(capsys):
    assert cli.main(["verify"]) == 0
    assert "FAIL" not in capsys.readouterr().out
