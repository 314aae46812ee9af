import json
import subprocess
import sys
from pathlib import Path

import pytest

from metastab.cli import main

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def run_cli(args):
    return main(list(args))


def test_analyze_double_well(tmp_path, capsys):
    rc = run_cli(["analyze", "--config", str(CONFIG_DIR / "double_well.cfg"),
                  "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "landscape.json").read_text())
    assert len(doc["critical_points"]) == 3
    assert len(doc["edges"]) == 1
    assert doc["assumptions"]["a1_pi_pass"]
    out = capsys.readouterr().out
    assert "critical points (3)" in out


def test_analyze_multi_well_ordering(tmp_path):
    rc = run_cli(["analyze", "--config", str(CONFIG_DIR / "multi_well.cfg"),
                  "--out", str(tmp_path)])
    assert rc == 0
    doc = json.loads((tmp_path / "landscape.json").read_text())
    order = doc["minima_order"]
    assert len(order) == 4
    # m1 is a global minimum
    energies = [m["energy"] for m in doc["critical_points"]
                if m["morse_index"] == 0]
    assert order[0]["energy"] <= min(energies) + 1e-12
    assert "delta_gap" in doc


def test_constants_sweep_and_ratio_column(tmp_path):
    rc = run_cli(["constants", "--config", str(CONFIG_DIR / "double_well.cfg"),
                  "--eps", "0.1 0.05", "--grid", "2048",
                  "--out", str(tmp_path)])
    assert rc == 0
    lines = (tmp_path / "ek_sweep.csv").read_text().splitlines()
    header = lines[0].split(",")
    assert header[:6] == ["epsilon", "inv_rho", "inv_alpha_times2",
                          "ratio_rho_alpha", "dominant_i", "dominant_j"]
    assert "fd_gap" in header
    assert len(lines) == 3
    ratios = [float(l.split(",")[-1]) for l in lines[1:]]
    # ratio column trends toward 1
    assert abs(ratios[-1] - 1.0) <= abs(ratios[0] - 1.0)


def test_constants_no_oracle(tmp_path):
    rc = run_cli(["constants", "--config", str(CONFIG_DIR / "double_well.cfg"),
                  "--eps", "0.1", "--no-oracle", "--out", str(tmp_path)])
    assert rc == 0
    header = (tmp_path / "ek_sweep.csv").read_text().splitlines()[0]
    assert "fd_gap" not in header


def test_constants_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        rc = run_cli(["constants", "--config",
                      str(CONFIG_DIR / "double_well.cfg"),
                      "--eps", "0.1 0.07", "--grid", "1024",
                      "--out", str(out)])
        assert rc == 0
    assert (a / "ek_sweep.csv").read_bytes() == (b / "ek_sweep.csv").read_bytes()


def test_fault_injection_fails_validation(tmp_path):
    rc = run_cli(["constants", "--config", str(CONFIG_DIR / "double_well.cfg"),
                  "--eps", "0.1", "--grid", "1024",
                  "--inject-fault", "lambda-sign", "--out", str(tmp_path)])
    assert rc == 1


def test_validate_filter(tmp_path, capsys):
    rc = run_cli(["validate", "--config", str(CONFIG_DIR / "double_well.cfg"),
                  "--filter", "means", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "means" in out
    assert "transport" not in out


def test_malformed_config(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[potential]\nsource = (x1^2 - 1)^2 +\ndim = 1\n"
                   "[domain]\nlo = -2\nhi = 2\n")
    rc = run_cli(["analyze", "--config", str(bad), "--out", str(tmp_path)])
    assert rc == 2


def test_missing_config():
    rc = run_cli(["analyze", "--config", "/nonexistent.cfg"])
    assert rc == 2


def test_bad_grid_rejected(tmp_path):
    rc = run_cli(["constants", "--config", str(CONFIG_DIR / "double_well.cfg"),
                  "--grid", "1000", "--out", str(tmp_path)])
    assert rc == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "metastab.cli", "analyze",
         "--config", str(CONFIG_DIR / "double_well.cfg"),
         "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "critical points" in proc.stdout
