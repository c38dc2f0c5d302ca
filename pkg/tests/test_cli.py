import csv
import json
from pathlib import Path

import numpy as np
import pytest

from biham.cli import EXIT_ERROR, EXIT_FAIL, EXIT_OK, main

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "golden" / "tn_hierarchy.txt"

LSE = """\
equation: lse
seed: 3
grid: {L: 20.0, N: 128}
physics: {potential: harmonic}
initial: {kind: gaussian, center: 1.0}
integrator: {dt: 1.0e-3, steps: 400, stride: 50}
monitors: [H0, H1, H2]
thresholds: {H0: 1.0e-11, H1: 1.0e-5}
check: {states: 4}
"""

NLS = """\
equation: nls
grid: {L: 50.0, N: 256}
physics: {hbar: 1.0, mass: 0.5, b: -2.0}
initial: {kind: sech, phase_slope: 0.5}
integrator: {dt: 1.0e-3, steps: 300, stride: 100}
monitors: [K-1, K0, K1]
thresholds: {K-1: 1.0e-11}
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_simulate_writes_csv_and_report(tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", write(tmp_path, LSE), "--out", str(out)]) == EXIT_OK
    header, data = read_csv(out / "trajectory.csv")
    assert header == ["t", "H0", "H1", "H2"]
    assert len(data) == 9 and data[-1, 0] == pytest.approx(0.4)
    assert np.ptp(data[:, 1]) < 1e-12
    report = json.loads((out / "report.json").read_text())
    for key in ("config", "seed", "drift", "involution", "recursion", "thresholds", "passed"):
        assert key in report
    assert report["seed"] == 3 and report["passed"] is True
    assert report["thresholds"]["drift H0"]["passed"]


def test_simulate_nls_conserves_mass(tmp_path):
    out = tmp_path / "nls"
    assert main(["simulate", "--config", write(tmp_path, NLS), "--out", str(out)]) == EXIT_OK
    header, data = read_csv(out / "trajectory.csv")
    assert header == ["t", "K-1", "K0", "K1"]
    assert np.ptp(data[:, 1]) < 1e-12


def test_simulate_is_deterministic(tmp_path):
    cfg = write(tmp_path, LSE)
    out = tmp_path / "same"
    main(["simulate", "--config", cfg, "--out", str(out)])
    first = [(out / n).read_bytes() for n in ("trajectory.csv", "report.json")]
    main(["simulate", "--config", cfg, "--out", str(out)])
    assert [(out / n).read_bytes() for n in ("trajectory.csv", "report.json")] == first


def test_seed_override_is_recorded(tmp_path):
    out = tmp_path / "seeded"
    main(["simulate", "--config", write(tmp_path, LSE), "--out", str(out), "--seed", "11"])
    assert json.loads((out / "report.json").read_text())["seed"] == 11


def test_threshold_breach_exits_one(tmp_path):
    text = LSE.replace("H1: 1.0e-5", "H1: 1.0e-30")
    assert main(["simulate", "--config", write(tmp_path, text),
                 "--out", str(tmp_path / "o")]) == EXIT_FAIL


def test_broken_config_exits_two_without_output(tmp_path, capsys):
    out = tmp_path / "broken"
    cfg = write(tmp_path, LSE.replace("steps: 400", "steps: 0"))
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_ERROR
    assert "integrator.steps" in capsys.readouterr().err
    assert not out.exists()
    cfg = write(tmp_path, "grid: {L: 20\n", "syntax.yaml")
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == EXIT_ERROR
    assert "line" in capsys.readouterr().err
    assert main(["simulate"]) == EXIT_ERROR


@pytest.mark.parametrize("kind", ["involution", "recursion", "madelung"])
def test_checks_pass_on_lse(tmp_path, kind):
    out = tmp_path / kind
    assert main(["check", kind, "--config", write(tmp_path, LSE), "--out", str(out)]) == EXIT_OK
    report = json.loads((out / f"check_{kind}.json").read_text())
    assert report["passed"] and report["thresholds"]


def test_madelung_check_rejects_nls(tmp_path):
    assert main(["check", "madelung", "--config", write(tmp_path, NLS),
                 "--out", str(tmp_path / "m")]) == EXIT_ERROR


def test_nls_recursion_check(tmp_path):
    out = tmp_path / "rec"
    cfg = str(ROOT / "configs" / "nls_recursion.yaml")
    assert main(["check", "recursion", "--config", cfg, "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "check_recursion.json").read_text())
    assert report["recursion"]["constant"] == pytest.approx(1.0, abs=1e-6)


def test_hierarchy_listing(capsys):
    assert main(["hierarchy", "TK", "psi_x", "1"]) == EXIT_OK
    assert capsys.readouterr().out == "1: psi_xxx + psi*psi_x\n"
    assert main(["hierarchy", "TG", "psi_x", "1"]) == EXIT_OK
    assert capsys.readouterr().out.rstrip().endswith("[nonlocal]")


def test_hierarchy_golden(tmp_path, capsys):
    assert main(["hierarchy", "TN", "-i*psi", "4", "--golden", str(GOLDEN)]) == EXIT_OK
    assert capsys.readouterr().out == GOLDEN.read_text()
    wrong = tmp_path / "wrong.txt"
    wrong.write_text("1: psi\n")
    assert main(["hierarchy", "TN", "-i*psi", "4", "--golden", str(wrong)]) == EXIT_FAIL


@pytest.mark.parametrize("argv", [
    ["hierarchy", "TN", "psi", "0"],
    ["hierarchy", "TX", "psi", "2"],
    ["hierarchy", "TK", "psi", "2"],
    ["hierarchy", "TN", "phi", "2"],
])
def test_hierarchy_usage_errors(argv):
    assert main(argv) == EXIT_ERROR


def test_report_subset(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path), "--only", "7"]) == EXIT_OK
    line = capsys.readouterr().out.strip()
    assert line.startswith("[PASS] criterion  7")
    data = json.loads((tmp_path / "acceptance.json").read_text())
    assert [c["number"] for c in data["criteria"]] == [7] and data["passed"]
    assert (tmp_path / "acceptance.csv").read_text().startswith("criterion,")
    assert main(["report", "--out", str(tmp_path), "--only", "11"]) == EXIT_ERROR
