import csv
import json
import os

import numpy as np
import pytest

from armasel import ArmaCoefficients, simulate
from armasel.cli import _parse_grid_arg, main
from armasel.criteria import CRITERIA
from armasel.selection import CandidateGrid


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_series_csv(path, n=100, seed=7, phi=(0.5,)):
    series = simulate(ArmaCoefficients(list(phi), [], 1.0), n, seed=seed)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("value\n")
        for v in series.values:
            fh.write(f"{float(v)!r}\n")
    return path


class TestParsing:
    def test_grid_spans(self):
        assert _parse_grid_arg("1..5,0..5") == CandidateGrid((1, 5), (0, 5))
        assert _parse_grid_arg("2,3") == CandidateGrid((2, 2), (3, 3))

    @pytest.mark.parametrize("bad", ["1..5", "a..b,0..5", "1..5,0..5,9"])
    def test_grid_errors(self, bad):
        with pytest.raises(ValueError, match="bad grid"):
            _parse_grid_arg(bad)

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.strip() == "armasel 0.1.0"


class TestSimulate:
    def test_stdout_table(self, capsys):
        code, out, _ = run_cli(capsys, "simulate", "--phi", "0.5", "--n", "5", "--seed", "3")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "t,value"
        assert len(lines) == 6
        assert [row.split(",")[0] for row in lines[1:]] == ["0", "1", "2", "3", "4"]

    def test_deterministic(self, capsys):
        argv = ("simulate", "--phi", "0.5", "--theta", "0.2", "--n", "20", "--seed", "11")
        _, out1, _ = run_cli(capsys, *argv)
        _, out2, _ = run_cli(capsys, *argv)
        assert out1 == out2

    def test_out_writes_file(self, tmp_path, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--n", "4", "--seed", "9", "--out", str(tmp_path)
        )
        assert code == 0
        path = tmp_path / "simulate_seed9.csv"
        assert out.strip() == str(path)
        assert path.read_text(encoding="utf-8").splitlines()[0] == "t,value"

    def test_markdown_format(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "--n", "2", "--seed", "1", "--format", "markdown"
        )
        assert code == 0
        assert out.splitlines()[0] == "| t | value |"


class TestFit:
    def test_fit_roundtrip(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=200, seed=21)
        code, out, _ = run_cli(
            capsys, "fit", "--input", series, "-p", "1", "-q", "0", "--objective", "css"
        )
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["p", "q", "phi", "theta", "sigma2", "loglik", "css",
                           "converged", "n_obs"]
        record = dict(zip(rows[0], rows[1]))
        assert record["p"] == "1" and record["q"] == "0"
        assert record["converged"] == "True" and record["n_obs"] == "200"
        assert 0.2 < float(record["phi"]) < 0.8
        assert np.isfinite(float(record["loglik"]))

    def test_missing_input_errors(self, capsys):
        code, out, err = run_cli(capsys, "fit", "--input", "no_such.csv", "-p", "1", "-q", "0")
        assert code == 1 and out == ""
        assert err.startswith("error: ")

    def test_bad_column_errors(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=30)
        code, _, err = run_cli(
            capsys, "fit", "--input", series, "--column", "open", "-p", "1", "-q", "0"
        )
        assert code == 1
        assert "column 'open' not found" in err


class TestSelect:
    def test_tables_on_stdout(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=120, seed=33)
        code, out, _ = run_cli(
            capsys, "select", "--input", series, "--grid", "1..2,0..1", "--objective", "css"
        )
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "p,q," + ",".join(CRITERIA)
        chosen_header = lines.index("criterion,p,q")
        assert chosen_header == 5  # 4 candidate rows precede it
        chosen = dict()
        for line in lines[chosen_header + 1 :]:
            name, p, q = line.split(",")
            chosen[name] = (int(p), int(q))
        assert set(chosen) == set(CRITERIA)

    def test_out_files(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=80, seed=34)
        out_dir = tmp_path / "tables"
        code, out, _ = run_cli(
            capsys, "select", "--input", series, "--grid", "1..1,0..1",
            "--objective", "css", "--out", str(out_dir),
        )
        assert code == 0
        assert (out_dir / "select_scores.csv").exists()
        assert (out_dir / "select_chosen.csv").exists()
        assert str(out_dir / "select_scores.csv") in out

    def test_unscorable_table_emitted(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=6, seed=35)
        code, out, _ = run_cli(
            capsys, "select", "--input", series, "--grid", "1..5,0..0", "--objective", "css"
        )
        assert code == 0
        assert "p,q,reason" in out
        assert "insufficient data" in out

    def test_bad_grid_exits_one(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=30)
        code, _, err = run_cli(capsys, "select", "--input", series, "--grid", "oops")
        assert code == 1
        assert err.startswith("error: bad grid")

    def test_no_scorable_model_exits_one(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=6, seed=36)
        code, _, err = run_cli(capsys, "select", "--input", series, "--grid", "5..5,5..5")
        assert code == 1
        assert "no scorable model" in err


class TestBacktest:
    def test_summary_row(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=100, seed=41)
        code, out, _ = run_cli(
            capsys, "backtest", "--input", series, "-p", "1", "-q", "0",
            "--train", "80", "--objective", "css",
        )
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == ["p", "q", "n_train", "n_test", "refit_each_step", "mspe"]
        record = dict(zip(rows[0], rows[1]))
        assert record["n_train"] == "80" and record["n_test"] == "20"
        assert record["refit_each_step"] == "False"
        assert float(record["mspe"]) > 0.0

    def test_steps_table(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=60, seed=42)
        code, out, _ = run_cli(
            capsys, "backtest", "--input", series, "-p", "1", "-q", "0",
            "--train", "50", "--horizon", "5", "--steps", "--objective", "css",
        )
        assert code == 0
        assert "step,observed,forecast,squared_error" in out
        step_lines = out.splitlines()[out.splitlines().index(
            "step,observed,forecast,squared_error") + 1 :]
        assert len(step_lines) == 5

    def test_bad_split_errors(self, tmp_path, capsys):
        series = write_series_csv(str(tmp_path / "y.csv"), n=30, seed=43)
        code, _, err = run_cli(
            capsys, "backtest", "--input", series, "-p", "1", "-q", "0", "--train", "30"
        )
        assert code == 1
        assert "train size must split the series" in err
        code, _, err = run_cli(
            capsys, "backtest", "--input", series, "-p", "1", "-q", "0",
            "--train", "20", "--horizon", "20",
        )
        assert code == 1
        assert "horizon exceeds available observations" in err


SIM_YAML = """\
label: cli-sim
master_seed: 5
replications: 2
n_in: 30
n_out: 5
dgp:
  fixed:
    - {phi: [0.5], sigma2: 1.0}
grid:
  p: [1, 1]
  q: [0, 0]
"""


class TestExperimentSim:
    def test_runs_and_emits(self, tmp_path, capsys):
        cfg = tmp_path / "sim.yaml"
        cfg.write_text(SIM_YAML, encoding="utf-8")
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            capsys, "experiment", "sim", "--config", str(cfg), "--out", str(out_dir)
        )
        assert code == 0
        paths = out.splitlines()
        assert [os.path.basename(p) for p in paths] == [
            "cli-sim_seed5_report.json",
            "cli-sim_seed5_win_counts.csv",
            "cli-sim_seed5_mspe.csv",
            "cli-sim_seed5_records.jsonl",
        ]
        assert all(os.path.exists(p) for p in paths)
        with open(paths[0], encoding="utf-8") as fh:
            report = json.load(fh)
        assert report["master_seed"] == 5
        assert len(report["scenarios"]) == 1

    def test_seed_override_changes_stem(self, tmp_path, capsys):
        cfg = tmp_path / "sim.yaml"
        cfg.write_text(SIM_YAML, encoding="utf-8")
        code, out, _ = run_cli(
            capsys, "experiment", "sim", "--config", str(cfg), "--seed", "99",
            "--out", str(tmp_path / "out"),
        )
        assert code == 0
        assert "cli-sim_seed99_report.json" in out

    def test_figure_data_flag(self, tmp_path, capsys):
        cfg = tmp_path / "sim.yaml"
        cfg.write_text(SIM_YAML, encoding="utf-8")
        code, out, _ = run_cli(
            capsys, "experiment", "sim", "--config", str(cfg), "--figure-data",
            "--out", str(tmp_path / "out"),
        )
        assert code == 0
        assert any(p.endswith("_figure_mspe_by_t.csv") for p in out.splitlines())

    def test_missing_config_errors(self, capsys):
        code, _, err = run_cli(capsys, "experiment", "sim", "--config", "no_such.yaml")
        assert code == 1
        assert err.startswith("error: ")


class TestExperimentFinance:
    def make_config(self, tmp_path):
        levels = tmp_path / "levels.csv"
        returns = simulate(ArmaCoefficients([0.4], [], 1.0), 100, seed=51)
        values = 100.0 * np.exp(0.01 * np.cumsum(returns.values))
        with open(levels, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("close\n")
            for v in values:
                fh.write(f"{float(v)!r}\n")
        cfg = tmp_path / "fin.yaml"
        cfg.write_text(
            "label: cli-fin\n"
            "master_seed: 2\n"
            f"assets:\n  - name: demo\n    path: {levels}\n"
            "segmentation:\n"
            "  segment_length: 30\n  horizon: 10\n  segment_count: 2\n"
            "grid:\n  p: [1, 1]\n  q: [0, 0]\n",
            encoding="utf-8",
        )
        return cfg

    def test_runs_and_emits(self, tmp_path, capsys):
        cfg = self.make_config(tmp_path)
        out_dir = tmp_path / "out"
        code, out, _ = run_cli(
            capsys, "experiment", "finance", "--config", str(cfg), "--out", str(out_dir)
        )
        assert code == 0
        paths = out.splitlines()
        assert any(p.endswith("cli-fin_seed2_report.json") for p in paths)
        with open(paths[0], encoding="utf-8") as fh:
            report = json.load(fh)
        assert [s["label"] for s in report["scenarios"]] == ["demo"]
        assert report["scenarios"][0]["metric"] == "log_mspe"


class TestReportCommand:
    def test_reemission_matches_original(self, tmp_path, capsys):
        cfg = tmp_path / "sim.yaml"
        cfg.write_text(SIM_YAML, encoding="utf-8")
        first = tmp_path / "first"
        code, out, _ = run_cli(
            capsys, "experiment", "sim", "--config", str(cfg), "--out", str(first)
        )
        assert code == 0
        json_path = next(p for p in out.splitlines() if p.endswith("_report.json"))
        second = tmp_path / "second"
        code, out2, _ = run_cli(
            capsys, "report", "--input", json_path, "--out", str(second)
        )
        assert code == 0
        for path in out2.splitlines():
            twin = os.path.join(first, os.path.basename(path))
            with open(path, "rb") as fa, open(twin, "rb") as fb:
                assert fa.read() == fb.read()

    def test_markdown_reemission(self, tmp_path, capsys):
        cfg = tmp_path / "sim.yaml"
        cfg.write_text(SIM_YAML, encoding="utf-8")
        first = tmp_path / "first"
        _, out, _ = run_cli(
            capsys, "experiment", "sim", "--config", str(cfg), "--out", str(first)
        )
        json_path = next(p for p in out.splitlines() if p.endswith("_report.json"))
        code, out2, _ = run_cli(
            capsys, "report", "--input", json_path, "--format", "markdown",
            "--out", str(tmp_path / "md"),
        )
        assert code == 0
        win_path = next(p for p in out2.splitlines() if p.endswith("_win_counts.md"))
        with open(win_path, encoding="utf-8") as fh:
            assert fh.readline().startswith("| scenario |")
