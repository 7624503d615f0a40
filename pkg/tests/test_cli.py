import json
import os

import numpy as np
import pytest

from cylflow.cli import main
from cylflow.io import read_csv_records


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = str(tmp_path_factory.mktemp("cli") / "run")
    code = run_cli(
        "simulate",
        "--nx", "32", "--ny", "32", "--lambda", "8",
        "--t-end", "0.2", "--diag-step", "0.02",
        "--kind", "shear_eigenmode", "--target-romega", "2.0",
        "--out", out,
    )
    assert code == 0
    return out


class TestSimulate:
    def test_outputs_exist(self, sim_dir):
        assert os.path.exists(os.path.join(sim_dir, "diagnostics.csv"))
        assert os.path.exists(os.path.join(sim_dir, "config.txt"))
        assert os.path.exists(os.path.join(sim_dir, "run.json"))
        snaps = os.listdir(os.path.join(sim_dir, "snapshots"))
        assert len([n for n in snaps if n.endswith(".bin")]) == 11

    def test_decay_recorded(self, sim_dir):
        recs = read_csv_records(os.path.join(sim_dir, "diagnostics.csv"))
        assert recs[0].sup_omega == pytest.approx(2.0, rel=1e-12)
        assert recs[-1].sup_omega == pytest.approx(2.0 * np.exp(-4 * np.pi**2 * 0.2), rel=1e-8)

    def test_bitwise_deterministic(self, sim_dir, tmp_path):
        out2 = str(tmp_path / "run2")
        assert run_cli(
            "simulate",
            "--nx", "32", "--ny", "32", "--lambda", "8",
            "--t-end", "0.2", "--diag-step", "0.02",
            "--kind", "shear_eigenmode", "--target-romega", "2.0",
            "--out", out2, "--no-snapshots",
        ) == 0
        a = open(os.path.join(sim_dir, "diagnostics.csv"), "rb").read()
        b = open(os.path.join(out2, "diagnostics.csv"), "rb").read()
        assert a == b

    def test_config_file_with_overrides(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("nx = 32\nny = 32\nlambda = 8.0\nt_end = 0.05\nkind = shear_eigenmode\ntarget_romega = 1.0\n")
        out = str(tmp_path / "run3")
        assert run_cli("simulate", "--config", str(cfg), "--seed", "4", "--out", out, "--no-snapshots") == 0
        text = open(os.path.join(out, "config.txt")).read()
        assert "seed = 4" in text and "nx = 32" in text


class TestReport:
    def test_report_from_run_dir(self, sim_dir, tmp_path):
        rep_path = str(tmp_path / "report.json")
        code = run_cli(
            "report",
            "--run-dir", sim_dir,
            "--c3", "1.0",
            "--t-grid", "0.1,0.2",
            "--tau", "0.1",
            "--laminar-window", "0.02,0.18",
            "--out", rep_path,
        )
        assert code == 0
        rep = json.load(open(rep_path))
        assert rep["provenance"]["M"] == pytest.approx(2.0, rel=1e-12)
        assert all(row["ratio"] <= 1.0 for row in rep["localized_energy"])
        assert rep["laminar"]["uhat_rate"] == pytest.approx(4 * np.pi**2, rel=0.01)


class TestAdvdiff:
    def test_envelope_and_lplq(self, tmp_path):
        out = str(tmp_path / "adv")
        code = run_cli(
            "advdiff",
            "--drift", "steady_shear_u1", "--amplitude", "1.0",
            "--nx", "96", "--ny", "24", "--lambda", "12",
            "--dt-acc", "2e-3",
            "--p-list", "1", "--q-list", "inf", "--times", "0.2,0.5",
            "--envelope-times", "0.5", "--envelope-lambda", "0.9",
            "--out", out,
        )
        assert code == 0
        lines = open(os.path.join(out, "lplq.csv")).read().splitlines()
        assert lines[0] == "p,q,t,ratio"
        assert len(lines) == 3
        env = open(os.path.join(out, "envelope.csv")).read().splitlines()
        assert env[0] == "t,slope,K2_est,lambda_eff,passed"
        assert env[1].endswith(",1")


class TestKernelTable:
    def test_csv_shape(self, capsys):
        assert run_cli("kernel-table", "--x1", "0.5:1.5:3", "--x2", "0:1:5") == 0
        outlines = capsys.readouterr().out.splitlines()
        assert outlines[0] == "x1,x2,K,gradperpK_1,gradperpK_2"
        assert len(outlines) == 1 + 15

    def test_singular_points_are_nan(self, capsys):
        assert run_cli("kernel-table", "--x1", "0:0:1", "--x2", "0:0:1") == 0
        row = capsys.readouterr().out.splitlines()[1]
        assert "nan" in row


class TestFitRates:
    def test_fit_from_csv(self, sim_dir, capsys):
        code = run_cli(
            "fit-rates",
            "--csv", os.path.join(sim_dir, "diagnostics.csv"),
            "--column", "sup_omega",
            "--t-lo", "0", "--t-hi", "0.2",
        )
        assert code == 0
        out = json.loads(capsys.readouterr().out)
        assert out["exponent_or_rate"] == pytest.approx(4 * np.pi**2, rel=1e-6)


class TestVerifyInequalities:
    def test_runs_and_writes(self, tmp_path):
        out = str(tmp_path / "ineq")
        const = str(tmp_path / "constants.json")
        code = run_cli(
            "verify-inequalities",
            "--samples", "80", "--poincare-samples", "10",
            "--nx", "32", "--ny", "32", "--lambda", "8",
            "--out", out, "--constants", const,
        )
        assert code == 0
        summary = json.load(open(os.path.join(out, "summary.json")))
        assert summary["poincare_max"] <= 1.0 + 1e-10
        assert json.load(open(const))["C_nash"]["value"] == summary["nash_max_ratio"]
