"""
Tests for result files, plots, config loading and the command-line interface.
"""
import json
import pytest
import sys
import os
from pathlib import Path

import polars as pl

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, main
from src.config import Settings
from src.experiments import ConfigError, load_experiment_config, resolve_output_dir
from src.models import CheckResult, CorollaryId, OptimizerConfig, Variant
from src.harness.runner import run
from src.problems.quadratic import make_quadratic
from src.reporting.plots import plot_residuals
from src.reporting.records_io import (
    build_summary, read_run_csv, read_summary, render_checks, write_run_csv, write_summary,
)

MINIMAL = {
    "name": "minimal",
    "problem": {"kind": "quadratic", "dim": 4, "condition": 3.0, "seed": 0},
    "optimizer": {"variant": "det_tr", "eta": 0.05, "K": 25},
    "seeds": [0],
}


def write_config(tmp_path: Path, data, name: str = "config.json") -> Path:
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data, indent=2), encoding="utf-8")
    return path


@pytest.fixture
def record():
    problem = make_quadratic(3, 2.0, seed=0, sigma=0.3)
    config = OptimizerConfig(variant=Variant.MOMENTUM, eta=0.05, alpha=0.3, K=12)
    return run(config, problem, seed=1, record_wall_time=False)


class TestRecordsIO:
    """Test CSV / JSON persistence."""

    def test_run_csv_round_trip(self, tmp_path, record):
        path = write_run_csv(record, tmp_path / "run.csv")
        assert read_run_csv(path) == record.rows
        header = path.read_text(encoding="utf-8").splitlines()[0]
        assert header == "k,F,residual,x_norm,momentum_err,wall_ms"

    def test_summary_round_trip(self, tmp_path, record):
        summary = build_summary("exp", [record])
        assert read_summary(write_summary(summary, tmp_path / "summary.json")) == summary
        assert summary.runs[0].csv == "exp_seed1.csv"

    def test_render_checks(self):
        checks = [
            CheckResult(suite="geometry", name="a", passed=True),
            CheckResult(suite="geometry", name="b", passed=False, detail="gap=1"),
        ]
        text = render_checks(checks)
        assert "FAIL" in text
        assert text.rstrip().endswith("1/2 checks passed")
        assert render_checks(checks) == text

    def test_svg_is_deterministic(self, tmp_path, record):
        a = plot_residuals([record], tmp_path / "a.svg", title="run")
        b = plot_residuals([record], tmp_path / "b.svg", title="run")
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text(encoding="utf-8").lstrip().startswith("<?xml")


class TestConfigLoading:
    """Test config validation and error anchoring."""

    def test_valid(self, tmp_path):
        config = load_experiment_config(write_config(tmp_path, MINIMAL))
        assert config.optimizer.variant == Variant.DET_TR
        assert config.optimizer.K == 25

    def test_malformed_json_line(self, tmp_path):
        path = write_config(tmp_path, '{\n  "name": "x",\n  "problem": {\n}}\n}')
        with pytest.raises(ConfigError) as info:
            load_experiment_config(path)
        assert info.value.line == 5

    def test_unknown_key_line(self, tmp_path):
        text = (
            '{\n'
            '  "problem": {"kind": "quadratic", "dim": 2},\n'
            '  "optimizer": {\n'
            '    "variant": "det_tr",\n'
            '    "eta": 0.1,\n'
            '    "bogus": 1,\n'
            '    "K": 3\n'
            '  }\n'
            '}\n'
        )
        with pytest.raises(ConfigError) as info:
            load_experiment_config(write_config(tmp_path, text))
        assert info.value.line == 6
        assert "bogus" in str(info.value)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "absent.json")

    @pytest.mark.parametrize("raw, expected", [("false", False), ("0", False), ("off", False), ("yes", True), ("1", True)])
    def test_boolean_settings_from_env(self, monkeypatch, raw, expected):
        monkeypatch.setenv("TR_SHOW_PROGRESS", raw)
        monkeypatch.setenv("TR_RECORD_WALL_TIME", raw)
        fresh = Settings()
        assert fresh.show_progress is expected
        assert fresh.record_wall_time is expected

    def test_boolean_settings_default(self, monkeypatch):
        monkeypatch.delenv("TR_SHOW_PROGRESS", raising=False)
        monkeypatch.delenv("TR_RECORD_WALL_TIME", raising=False)
        assert Settings().show_progress is True

    def test_output_dir_precedence(self, monkeypatch):
        monkeypatch.setenv("TR_OUTPUT_DIR", "from_env")
        assert resolve_output_dir("from_flag", "from_config") == Path("from_flag")
        assert resolve_output_dir(None, "from_config") == Path("from_env")
        monkeypatch.delenv("TR_OUTPUT_DIR")
        assert resolve_output_dir(None, "from_config") == Path("from_config")


class TestCommands:
    """Test the run, sweep, verify and schema subcommands."""

    def test_run_writes_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", str(write_config(tmp_path, MINIMAL)), "--out-dir", str(out)]) == EXIT_OK
        frame = pl.read_csv(out / "minimal_seed0.csv")
        assert frame.height == 26
        assert frame.columns == ["k", "F", "residual", "x_norm", "momentum_err", "wall_ms"]
        summary = read_summary(out / "summary.json")
        assert summary.config.K == 25
        assert (out / "residuals.svg").exists()

    def test_seed_offset(self, tmp_path):
        out = tmp_path / "out"
        args = ["run", str(write_config(tmp_path, MINIMAL)), "--out-dir", str(out), "--seed-offset", "10"]
        assert main(args) == EXIT_OK
        assert (out / "minimal_seed10.csv").exists()

    def test_run_with_schedule(self, tmp_path):
        data = {
            "name": "scheduled",
            "problem": {"kind": "matrix_layer", "m": 2, "n": 2, "N": 4, "sigma": 1.0},
            "optimizer": {"variant": "momentum", "geometry": "spectral",
                          "schedule": {"corollary": "C2", "eps": 0.5}},
            "seeds": [0],
        }
        out = tmp_path / "out"
        assert main(["run", str(write_config(tmp_path, data)), "--out-dir", str(out)]) == EXIT_OK
        summary = read_summary(out / "summary.json")
        assert summary.schedule.corollary == CorollaryId.C2
        assert summary.config.eta == summary.schedule.eta
        assert summary.config.alpha == summary.schedule.alpha
        assert summary.config.K == summary.schedule.K

    def test_malformed_config_exit_code(self, tmp_path):
        assert main(["run", str(write_config(tmp_path, "{not json")), "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_invalid_field_exit_code(self, tmp_path):
        data = {**MINIMAL, "optimizer": {"variant": "det_tr", "eta": -1.0, "K": 5}}
        assert main(["run", str(write_config(tmp_path, data)), "--out-dir", str(tmp_path)]) == EXIT_CONFIG

    def test_runtime_error_exit_code(self, tmp_path):
        """Clipping under the Euclidean geometry has no closed-form step."""
        data = {**MINIMAL, "optimizer": {"variant": "det_tr", "eta": 0.1, "K": 5,
                                         "regularizer": {"kind": "clip_ball", "radius": 1.0}}}
        assert main(["run", str(write_config(tmp_path, data)), "--out-dir", str(tmp_path)]) == EXIT_FAILURE

    def test_sweep(self, tmp_path):
        out = tmp_path / "sweep"
        config = write_config(tmp_path, {**MINIMAL, "seeds": [0, 1]})
        args = ["sweep", str(config), "--param", "eta", "--values", "0.01,0.1,1", "--out-dir", str(out)]
        assert main(args) == EXIT_OK
        frame = pl.read_csv(out / "sweep_eta.csv")
        assert frame.height == 3
        assert frame["value"].to_list() == [0.01, 0.1, 1.0]
        assert frame["n_runs"].to_list() == [2, 2, 2]
        for group in ("eta_0.01", "eta_0.1", "eta_1"):
            assert (out / group / "minimal_seed1.csv").exists()

    def test_verify_geometry(self, tmp_path):
        assert main(["verify", "geometry", "--out-dir", str(tmp_path)]) == EXIT_OK
        report = (tmp_path / "verify_geometry.txt").read_text(encoding="utf-8")
        assert "checks passed" in report
        assert "FAIL" not in report

    def test_schema(self, capsys):
        assert main(["schema"]) == EXIT_OK
        schema = json.loads(capsys.readouterr().out)
        assert "problem" in schema["properties"]
        assert "optimizer" in schema["required"]

    def test_no_command(self):
        assert main([]) == EXIT_FAILURE


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
