from pathlib import Path

import pytest

from mdlvq.cli import main


def write(tmp_path: Path, name: str, text: str) -> str:
    p = tmp_path / name
    p.write_text(text)
    return str(p)


BASE = """\
lattice = Z2
K = 2
p = 0.05, 0.05
rate_target = 6.0
n = 20000
seed = 7
"""

CFG_1D = """\
lattice = Z1
K = 2
p = 0.5, 0.5
indices = 3, 5
nu = 1.0
n = 5000
seed = 7
"""

CFG_FOURWAY = """\
lattice = Z2
K = 4
p = 0.025, 0.05, 0.075, 0.05
rate_target = 8.0
seed = 7
"""


def test_design_command(tmp_path, capsys):
    cfg = write(tmp_path, "exp.cfg", BASE)
    out = tmp_path / "design.csv"
    assert main(["design", "--config", cfg, "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "snapped (5, 5)" in text
    body = out.read_text().splitlines()
    assert body[0].startswith("# mdlvq")
    assert any(line.startswith("# config_hash=") for line in body)
    assert "tau_star" in body[4]


def test_design_four_descriptions_reports_expansion(tmp_path, capsys):
    cfg = write(tmp_path, "exp.cfg", CFG_FOURWAY)
    assert main(["design", "--config", cfg, "--out",
                 str(tmp_path / "d.csv")]) == 0
    out = capsys.readouterr().out
    assert "1.5874" in out  # 2^(2/3)


def test_design_lossless_channel_is_infeasible(tmp_path, capsys):
    cfg = write(tmp_path, "exp.cfg",
                "lattice = Z2\np = 0.0, 0.0\nrate_target = 6.0\n")
    assert main(["design", "--config", cfg,
                 "--out", str(tmp_path / "d.csv")]) == 2


def test_assign_command_golden_size_and_determinism(tmp_path, capsys):
    cfg = write(tmp_path, "exp.cfg", CFG_1D)
    out1, out2 = tmp_path / "a1.txt", tmp_path / "a2.txt"
    assert main(["assign", "--config", cfg, "--out", str(out1)]) == 0
    assert main(["assign", "--config", cfg, "--out", str(out2)]) == 0
    b1 = out1.read_bytes()
    assert b1 == out2.read_bytes()
    lines = b1.decode().splitlines()
    assert lines[0] == "mdlvq-assignment v1; lattice=Z1; K=2; N=3,5; nu=1.0; psi=1.0"
    assert len(lines) == 1 + 15
    text = capsys.readouterr().out
    assert "total cost" in text and "side distortion" in text


def test_assign_identity_table(tmp_path):
    cfg = write(tmp_path, "exp.cfg",
                "lattice = Z2\np = 0.1, 0.1\nindices = 1, 1\nnu = 1.0\n")
    out = tmp_path / "id.txt"
    assert main(["assign", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[1] == "0,0,0,0,0,0"


def test_assign_cap_exceeded(tmp_path):
    cfg = write(tmp_path, "exp.cfg",
                "lattice = Z2\np = 0.1, 0.1\nindices = 29, 29\nnu = 1.0\ncap = 100\n")
    assert main(["assign", "--config", cfg, "--out", str(tmp_path / "x.txt")]) == 2


def test_simulate_writes_csv_and_figure(tmp_path):
    cfg = write(tmp_path, "exp.cfg", BASE)
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    assert out.exists() and out.with_suffix(".png").exists()
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "record,subset,count,value,std_err,predicted"
    assert any(r.startswith("total,") for r in rows)
    assert any(r.startswith("subset,0|1,") for r in rows)
    assert any(r.startswith("side_entropy,") for r in rows)


def test_simulate_deterministic_output(tmp_path):
    cfg = write(tmp_path, "exp.cfg", BASE)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", cfg, "--out", str(a)]) == 0
    assert main(["simulate", "--config", cfg, "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_sweep_command(tmp_path):
    cfg = write(tmp_path, "exp.cfg", BASE)
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out),
                 "--sweep-param", "p0", "--sweep-values", "0.02,0.05"]) == 0
    assert out.exists() and out.with_suffix(".png").exists()
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0].startswith("p0,nu,N_0,N_1,empirical")
    assert len(rows) == 3


def test_sweep_bad_param(tmp_path):
    cfg = write(tmp_path, "exp.cfg", BASE)
    assert main(["sweep", "--config", cfg, "--sweep-param", "q1",
                 "--sweep-values", "0.1"]) == 1
    assert main(["sweep", "--config", cfg, "--sweep-param", "p0",
                 "--sweep-values", "nope"]) == 1


def test_rejects_zero_vectors(tmp_path):
    cfg = write(tmp_path, "exp.cfg", BASE.replace("n = 20000", "n = 1"))
    # n given on the command line cannot be zero either
    assert main(["simulate", "--config", cfg, "--n", "0",
                 "--out", str(tmp_path / "s.csv")]) == 1


def test_verify_failure_exit_code(monkeypatch):
    from mdlvq import cli
    from mdlvq.verify import CheckResult
    monkeypatch.setattr(cli, "run_all",
                        lambda: [CheckResult("stub", False, "forced")])
    assert main(["verify"]) == 3


def test_verify_command_passes(capsys):
    assert main(["verify"]) == 0
    out = capsys.readouterr().out
    assert out.count("[PASS]") == 4
    assert "N= 29" in out or "N=29" in out  # the trend ratio table is printed


def test_missing_config_file(tmp_path):
    assert main(["design", "--config", str(tmp_path / "nope.cfg")]) == 1


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path, "exp.cfg", "lattice = Q9\np = 0.1\nrate_target = 2\n")
    assert main(["design", "--config", cfg]) == 1


def test_usage_error_exit_code():
    assert main(["design"]) == 1  # missing --config
