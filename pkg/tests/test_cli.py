"""Tests for the formatter and the typer command surface."""

import json

import pytest
from typer.testing import CliRunner

from cs_qaoa_lab.cli import EXIT_CONFIG, EXIT_SIZE_CAP, EXIT_TRAINING, app
from cs_qaoa_lab.formatter import format_json, format_table
from cs_qaoa_lab.instances import gen_maxkcut, save_instance

runner = CliRunner()


def _payload(output: str):
    """Decode the JSON document printed by a command, skipping any log lines around it."""
    lines = output.splitlines()
    start = lines.index("{")
    document, _ = json.JSONDecoder().raw_decode("\n".join(lines[start:]))
    return document


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


class TestFormatter:
    """Test the formatter module."""

    def test_format_table_renders_rows(self):
        rows = [
            {"problem": "maxkcut", "mode": "cs", "p": 1, "p_suc_mean": 0.123456, "p_dis_mean": None},
            {"problem": "maxkcut", "mode": "x", "p": 1, "p_suc_mean": 0.05, "p_dis_mean": 0.0},
        ]
        output = format_table(rows, ["problem", "mode", "p", "p_suc_mean", "p_dis_mean"], "Success probability")

        assert "Success probability" in output
        assert "p_suc_mean" in output
        assert "0.1235" in output, "Floats are shown with 4 significant digits"
        assert "-" in output, "Missing values render as a dash"

    def test_format_table_without_rows(self):
        output = format_table([], ["problem", "p_suc"], "Empty")
        assert "(no rows)" in output

    def test_format_table_booleans(self):
        output = format_table([{"kind": "range", "failed": True}], ["kind", "failed"], "Training")
        assert "yes" in output

    def test_format_json_round_trips(self):
        payload = {"summary": [{"mode": "cs", "p_suc": 0.5}], "files": ["out/run_qaoa.csv"]}
        output = format_json(payload)
        assert json.loads(output) == payload
        assert output.startswith("{\n  ")


class TestOracle:
    """The oracle command on bundled instances."""

    def test_oracle_triangle(self, fixtures_path):
        result = runner.invoke(app, ["oracle", str(fixtures_path / "triangle.json")])
        assert result.exit_code == 0, result.output
        data = _payload(result.stdout)
        assert data["kind"] == "maxkcut"
        assert data["optima"] == [20, 34]
        assert data["value"] == -3.0
        assert data["n_feasible"] == 9

    def test_oracle_qkp_table(self, fixtures_path):
        result = runner.invoke(app, ["oracle", str(fixtures_path / "qkp_n10.txt"), "--output-format", "table"])
        assert result.exit_code == 0, result.output
        assert "Oracle" in result.stdout
        assert "qkp" in result.stdout

    def test_oracle_missing_file(self, tmp_path):
        result = runner.invoke(app, ["oracle", str(tmp_path / "absent.json")])
        assert result.exit_code == EXIT_CONFIG

    def test_oracle_malformed_file(self, fixtures_path):
        result = runner.invoke(app, ["oracle", str(fixtures_path / "bad_qkp.txt")])
        assert result.exit_code == 1
        assert "line 4" in result.output

    def test_oracle_size_cap(self, tmp_path):
        path = tmp_path / "wide.json"
        save_instance(gen_maxkcut(14, 2, seed=0), path)
        result = runner.invoke(app, ["oracle", str(path)])
        assert result.exit_code == EXIT_SIZE_CAP

    def test_unsupported_output_format(self, fixtures_path):
        result = runner.invoke(app, ["oracle", str(fixtures_path / "triangle.json"), "--output-format", "yaml"])
        assert result.exit_code == EXIT_CONFIG


class TestRunQaoa:
    """run-qaoa end to end on the toy problem."""

    def test_smoke_run_writes_outputs(self, fixtures_path, tmp_path):
        out = tmp_path / "results"
        result = runner.invoke(
            app,
            ["run-qaoa", "--config", str(fixtures_path / "toy_smoke.toml"), "--out", str(out), "--output-format", "json"],
        )
        assert result.exit_code == 0, result.output
        data = _payload(result.stdout)
        assert len(data["summary"]) == 4
        assert (out / "run_qaoa.csv").exists()
        assert (out / "run_qaoa_summary.csv").exists()
        meta = json.loads((out / "run_qaoa.meta.json").read_text())
        assert meta["seed"] == 7

    def test_seed_flag_overrides_config(self, fixtures_path, tmp_path):
        out = tmp_path / "results"
        result = runner.invoke(
            app,
            ["run-qaoa", "--config", str(fixtures_path / "toy_smoke.toml"), "--out", str(out), "--seed", "11"],
        )
        assert result.exit_code == 0, result.output
        meta = json.loads((out / "run_qaoa.meta.json").read_text())
        assert meta["seed"] == 11
        assert "Success probability" in result.stdout

    def test_missing_config(self, tmp_path):
        result = runner.invoke(app, ["run-qaoa", "--config", str(tmp_path / "absent.toml")])
        assert result.exit_code == EXIT_CONFIG

    def test_invalid_config(self, tmp_path):
        config = _write(tmp_path / "bad.toml", '[qaoa]\nmodes = ["cs-ternary"]\n')
        result = runner.invoke(app, ["run-qaoa", "--config", str(config), "--out", str(tmp_path)])
        assert result.exit_code == EXIT_CONFIG
        assert "cs-ternary" in result.output


class TestTraining:
    """train-compressor exit codes and database output."""

    def test_identity_target_passes(self, tmp_path):
        config = _write(
            tmp_path / "train.toml",
            '[compressor]\nansatz = "D"\n\n[[compressor.targets]]\nkind = "range"\nn = 2\nlower = 0\nupper = 1\nm = 2\n',
        )
        out = tmp_path / "results"
        result = runner.invoke(app, ["train-compressor", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output
        database = json.loads((out / "compressors.json").read_text())
        assert len(database["records"]) == 1
        assert database["records"][0]["p_sur"] == pytest.approx(1.0)
        assert (out / "train_compressor.csv").exists()

    def test_threshold_failure_exits(self, tmp_path):
        config = _write(
            tmp_path / "train.toml",
            "[compressor]\n"
            'ansatz = "D"\n'
            "n_loop = 20\n"
            "threshold = 1.0\n"
            "max_escalations = 0\n\n"
            "[[compressor.targets]]\n"
            'kind = "range"\n'
            "n = 3\n"
            "lower = 0\n"
            "upper = 1\n"
            "m = 1\n",
        )
        result = runner.invoke(app, ["train-compressor", "--config", str(config), "--out", str(tmp_path / "results")])
        assert result.exit_code == EXIT_TRAINING
        assert (tmp_path / "results" / "compressors.json").exists()

    def test_no_targets(self, tmp_path):
        result = runner.invoke(app, ["train-compressor", "--out", str(tmp_path)])
        assert result.exit_code == EXIT_CONFIG


class TestInstancesAndReport:
    """gen-instances and report."""

    def test_gen_instances(self, tmp_path):
        config = _write(tmp_path / "gen.toml", '[problem]\nkind = "maxkcut"\nsizes = [3]\nk = 2\nn_instances = 2\n')
        out = tmp_path / "results"
        result = runner.invoke(app, ["gen-instances", "--config", str(config), "--out", str(out)])
        assert result.exit_code == 0, result.output
        files = sorted(p.name for p in (out / "instances").iterdir())
        assert files == [
            "maxkcut_3_0.json",
            "maxkcut_3_0.oracle.json",
            "maxkcut_3_1.json",
            "maxkcut_3_1.oracle.json",
        ]

    def test_report_from_summary(self, fixtures_path, tmp_path):
        out = tmp_path / "results"
        runner.invoke(app, ["run-qaoa", "--config", str(fixtures_path / "toy_smoke.toml"), "--out", str(out)])
        result = runner.invoke(app, ["report", str(out / "run_qaoa_summary.csv"), "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert (out / "plot_data.csv").read_text().splitlines()[0] == "figure,series,x,y,yerr"

    def test_report_missing_input(self, tmp_path):
        result = runner.invoke(app, ["report", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
        assert result.exit_code == EXIT_CONFIG
