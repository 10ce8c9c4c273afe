import csv

import numpy as np
import pytest

from qndsim.cli import main
from qndsim.scenario_io import bundled_scenario_path

QND = str(bundled_scenario_path("qubit-qnd"))
VIOLATING = str(bundled_scenario_path("qubit-violating"))


class TestCheck:
    def test_qnd_holds(self, capsys):
        assert main(["check", QND]) == 0
        out = capsys.readouterr().out
        assert "eq4_defect" in out and "eq5_defect" in out

    def test_violating_fails(self):
        assert main(["check", VIOLATING]) == 1

    def test_truncated_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"schema": 1,')
        assert main(["check", str(bad)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "absent.json")]) == 2

    def test_quiet_suppresses_stdout(self, capsys):
        main(["check", QND, "--quiet"])
        assert capsys.readouterr().out == ""


class TestEvolve:
    def test_zero_t_end_single_row(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert main(["evolve", QND, "--t-end", "0", "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert len(rows) == 2  # header + one state
        assert rows[0][0] == "time"
        assert float(rows[1][0]) == 0.0

    def test_qnd_constancy_in_csv(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert main(
            ["evolve", QND, "--t-end", "2", "--dt", "0.1", "--out", str(out)]
        ) == 0
        rows = list(csv.reader(out.open()))
        first = np.array([float(x) for x in rows[1][1:]])
        for row in rows[2:]:
            assert np.allclose([float(x) for x in row[1:]], first, atol=1e-8)

    def test_exact_and_stepped_agree(self, tmp_path):
        out_e = tmp_path / "exact.csv"
        out_s = tmp_path / "stepped.csv"
        args = ["evolve", VIOLATING, "--t-end", "1", "--dt", "0.001"]
        assert main(args + ["--exact", "--out", str(out_e)]) == 0
        assert main(args + ["--stepped", "--out", str(out_s)]) == 0
        last_e = list(csv.reader(out_e.open()))[-1]
        last_s = list(csv.reader(out_s.open()))[-1]
        a = np.array([float(x) for x in last_e[1:]])
        b = np.array([float(x) for x in last_s[1:]])
        assert np.linalg.norm(a - b) <= 1e-8

    def test_prints_conservation_summary(self, capsys):
        assert main(["evolve", QND, "--t-end", "1"]) == 0
        out = capsys.readouterr().out
        assert "terminal trace deviation" in out
        assert "purity drift" in out


class TestMeasure:
    def test_qnd_sharp_and_repeatable(self, tmp_path, capsys):
        out = tmp_path / "rec.csv"
        code = main(
            ["measure", QND, "--repeats", "5", "--trials", "1000", "--out", str(out)]
        )
        assert code == 0
        text = capsys.readouterr().out
        assert "reading_variance = 0" in text
        assert "repeat_changes = 0" in text
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["trial", "time", "i", "lambda", "reading"]
        assert len(rows) == 1001

    def test_violating_disperses(self, capsys):
        assert main(["measure", VIOLATING, "--trials", "500"]) == 0
        text = capsys.readouterr().out
        variance = float(
            [l for l in text.splitlines() if l.startswith("reading_variance")][0]
            .split("=")[1]
            .split("(")[0]
        )
        assert variance > 0

    def test_single_trial_flagged_degenerate(self, capsys):
        assert main(["measure", QND, "--trials", "1"]) == 0
        assert "degenerate" in capsys.readouterr().out

    def test_repeat_record_export(self, tmp_path):
        rep = tmp_path / "rep.csv"
        assert main(
            ["measure", QND, "--repeats", "4", "--repeat-out", str(rep)]
        ) == 0
        rows = list(csv.reader(rep.open()))
        assert len(rows) == 5
        lams = {row[3] for row in rows[1:]}
        assert len(lams) == 1


class TestSweep:
    def test_eta_zero_all_sharp(self, tmp_path):
        out = tmp_path / "sweep.csv"
        code = main(
            [
                "sweep", "--eta-grid", "0", "--seeds", "0:10",
                "--trials", "30", "--out", str(out), "--quiet",
            ]
        )
        assert code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 10
        for row in rows:
            assert float(row["reading_variance"]) == 0.0

    def test_header_contract(self, tmp_path):
        out = tmp_path / "sweep.csv"
        main(["sweep", "--eta-grid", "0", "--seeds", "0:2", "--trials", "10",
              "--out", str(out), "--quiet"])
        header = out.open().readline().strip()
        assert header == (
            "eta,seed,eq4_defect,eq5_defect,constancy_dev,repeat_changes,"
            "reading_variance,sigma_analytic,sigma_empirical"
        )

    def test_bitwise_determinism(self, tmp_path):
        args = [
            "sweep", "--eta-grid", "0,0.5,1", "--seeds", "0:4",
            "--trials", "25", "--quiet",
        ]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_empty_seed_list_is_input_error(self):
        assert main(["sweep", "--seeds", "", "--quiet"]) == 2

    def test_bad_eta_is_input_error(self):
        assert main(["sweep", "--eta-grid", "2.0", "--seeds", "0:2", "--quiet"]) == 2
