import json
from pathlib import Path

import pytest

from nullwave.cli import main
from nullwave.io import read_csv
from nullwave.pipeline import SUMMARY_FIELDS

SMALL = """\
scenario:
  nonlinearity: model
  epsilon: {eps}
  dr: 0.05
  t_end: 12
  output_every: 0.25
diagnostics:
  inequalities: [energy_weighted, poincare, klainerman_sobolev]
  fits: [sup_dphi]
  ks_samples: 4
  residual_stride: 4
output:
  directory: {out}
"""

BLOWUP = """\
scenario:
  nonlinearity: semilinear
  epsilon: 0.8
  profile: {kind: shell}
  velocity: outgoing
  polarity: -1
  dr: 0.04
  t_end: 20
  output_every: 0.2
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_completes_and_writes_files(tmp_path):
    cfg = write(tmp_path, "c.yaml", SMALL.format(eps=0.01, out=tmp_path / "o"))
    assert main(["--quiet", "run", "--config", cfg]) == 0
    out = tmp_path / "o"
    manifest = json.loads((out / "manifest.json").read_text())
    for f in manifest["files"]:
        assert (out / f).is_file()
    assert manifest["termination"]["status"] == "Completed"
    header, rows = read_csv(out / "trajectory.csv")
    assert header == ["t", "r", "phi", "dphi_dt", "dphi_dr", "dphi_dq", "H_LL"]
    assert read_csv(out / "eikonal_fields.csv")[0] == ["t", "r", "rho", "rho_q_fd", "rho_q_factor", "valid"]
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary) == set(SUMMARY_FIELDS)
    assert summary["energy_holds"] and summary["poincare_holds"]


def test_run_is_deterministic(tmp_path):
    codes = []
    for tag in ("a", "b"):
        cfg = write(tmp_path, f"{tag}.yaml", SMALL.format(eps=0.01, out=tmp_path / "same"))
        codes.append(main(["--quiet", "run", "--config", cfg, "--out", str(tmp_path / tag)]))
    assert codes == [0, 0]
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == sorted(p.name for p in (tmp_path / "b").iterdir())
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes(), n


def test_blowup_exit_code(tmp_path):
    cfg = write(tmp_path, "b.yaml", BLOWUP)
    assert main(["--quiet", "run", "--config", cfg, "--out", str(tmp_path / "b")]) == 2
    s = json.loads((tmp_path / "b" / "summary.json").read_text())
    assert s["termination"] == "BlowUp"
    assert abs(s["r_star"] - s["t_star"]) < 2


def test_bad_config_exit_code(tmp_path, caplog):
    cfg = write(tmp_path, "bad.yaml", "scenario:\n  epsilon: 0.01\n  dx: 0.1\n")
    assert main(["run", "--config", cfg]) == 1
    err = caplog.text
    assert f"{cfg}:3:" in err and "scenario.dx" in err


def test_missing_config_exit_code(tmp_path):
    assert main(["--quiet", "run", "--config", str(tmp_path / "nope.yaml")]) == 1


def test_classify(capsys):
    assert main(["classify", "tt,tt,1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["kind"] == "BlowUp"
    assert main(["--quiet", "classify", "tt,tt,1; t"]) == 1


def test_sweep_row_matches_run(tmp_path):
    base = SMALL.format(eps=0.01, out=tmp_path / "unused").replace("\n", "\n  ")
    sweep = write(tmp_path, "s.yaml", "base:\n  " + base + "\nepsilons: [0.01]\n")
    assert main(["--quiet", "sweep", "--config", sweep, "--out", str(tmp_path / "sw")]) == 0
    cfg = write(tmp_path, "c.yaml", SMALL.format(eps=0.01, out=tmp_path / "run"))
    assert main(["--quiet", "run", "--config", cfg]) == 0
    header, rows = read_csv(tmp_path / "sw" / "sweep.csv")
    assert header[:2] == ["epsilon", "exit_code"]
    assert main(["--quiet", "report", str(tmp_path / "run"), "--out", str(tmp_path / "rep.csv")]) == 0
    _, rep = read_csv(tmp_path / "rep.csv")
    single = dict(zip(header, rows[0]))
    ran = dict(zip(("run",) + SUMMARY_FIELDS, rep[0]))
    assert all(single[k] == ran[k] for k in SUMMARY_FIELDS)
    assert (tmp_path / "sw" / "eps_0.01" / "summary.json").read_bytes() == (tmp_path / "run" / "summary.json").read_bytes()


@pytest.mark.parametrize("extra", ["epsilons: []\n", "epsilons: [0.01]\nparallel: 0\n"])
def test_sweep_bad_config(tmp_path, extra):
    sweep = write(tmp_path, "s.yaml", "base: {}\n" + extra)
    assert main(["--quiet", "sweep", "--config", sweep]) == 1


def test_sweep_parallel_flag_validated(tmp_path):
    sweep = write(tmp_path, "s.yaml", "base: {}\nepsilons: [0.01]\n")
    assert main(["--quiet", "sweep", "--config", sweep, "--parallel", "0"]) == 1


def test_report_missing_run(tmp_path):
    assert main(["--quiet", "report", str(tmp_path / "missing"), "--out", str(tmp_path / "r.csv")]) == 1
