"""Tests for the stimtomo CLI."""

import json
from pathlib import Path

import pytest
from typer.testing import CliRunner

from stimtomo import __version__
from stimtomo.acquisition.records import CSV_HEADER
from stimtomo.cli import app
from stimtomo.config import ConfigManager

runner = CliRunner()


@pytest.fixture
def simulated(
    tmp_path: Path, bell_source_file: Path, isolated_config_manager: ConfigManager
) -> Path:
    out = tmp_path / "sim"
    result = runner.invoke(
        app, ["simulate", "--source", str(bell_source_file), "--seed", "3", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    return out


class TestVersion:
    """Tests for the eager --version flag."""

    def test_version(self) -> None:
        result = runner.invoke(app, ["--version"])
        assert result.exit_code == 0
        assert __version__ in result.output


class TestSimulate:
    """Tests for the simulate command."""

    def test_writes_all_files(self, simulated: Path) -> None:
        names = sorted(p.name for p in simulated.iterdir())
        assert names == ["qst_records.csv", "seed_tomo.csv", "set_records.csv", "truth.json"]
        lines = (simulated / "set_records.csv").read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 85
        assert len((simulated / "qst_records.csv").read_text().splitlines()) == 37
        truth = json.loads((simulated / "truth.json").read_text())
        assert truth["qst_mode"] == "pointlike"

    def test_same_seed_same_bytes(
        self, tmp_path: Path, simulated: Path, bell_source_file: Path
    ) -> None:
        again = tmp_path / "again"
        result = runner.invoke(
            app, ["simulate", "--source", str(bell_source_file), "--seed", "3", "--out", str(again)]
        )
        assert result.exit_code == 0, result.output
        for name in ("qst_records.csv", "set_records.csv", "seed_tomo.csv"):
            assert (again / name).read_bytes() == (simulated / name).read_bytes()

    def test_qst_only(
        self, tmp_path: Path, bell_source_file: Path, isolated_config_manager: ConfigManager
    ) -> None:
        out = tmp_path / "qst"
        result = runner.invoke(
            app, ["simulate", "--source", str(bell_source_file), "--qst", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        assert not (out / "set_records.csv").exists()
        assert (out / "qst_records.csv").exists()

    def test_missing_source_exits_2(
        self, tmp_path: Path, isolated_config_manager: ConfigManager
    ) -> None:
        result = runner.invoke(
            app, ["simulate", "--source", str(tmp_path / "none.json"), "--out", str(tmp_path)]
        )
        assert result.exit_code == 2

    def test_invalid_source_exits_2(
        self, tmp_path: Path, isolated_config_manager: ConfigManager
    ) -> None:
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"alpha_sq": 2.0}))
        result = runner.invoke(app, ["simulate", "--source", str(path), "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestReconstruct:
    """Tests for the reconstruct command."""

    def test_writes_both_results(self, tmp_path: Path, simulated: Path) -> None:
        out = tmp_path / "fit"
        result = runner.invoke(
            app,
            [
                "reconstruct",
                "--qst",
                str(simulated / "qst_records.csv"),
                "--set",
                str(simulated / "set_records.csv"),
                "--seed-tomo",
                str(simulated / "seed_tomo.csv"),
                "--restarts",
                "0",
                "--out",
                str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        for name in ("reconstruction_qst.json", "reconstruction_set.json"):
            data = json.loads((out / name).read_text())
            assert data["metrics"]["purity"] <= 1.0 + 1e-9
            assert data["metrics"]["concurrence"] > 0.8

    def test_truncated_csv_exits_3(
        self, tmp_path: Path, isolated_config_manager: ConfigManager
    ) -> None:
        path = tmp_path / "qst.csv"
        path.write_text(",".join(CSV_HEADER) + "\nqst_count,H,H,transmitted\n")
        result = runner.invoke(app, ["reconstruct", "--qst", str(path), "--out", str(tmp_path)])
        assert result.exit_code == 3

    def test_binary_csv_exits_3(
        self, tmp_path: Path, isolated_config_manager: ConfigManager
    ) -> None:
        path = tmp_path / "qst.csv"
        path.write_bytes(b"\xff\xfe\x00k\x00i\x00n\x00d\x00\n")
        result = runner.invoke(app, ["reconstruct", "--qst", str(path), "--out", str(tmp_path)])
        assert result.exit_code == 3

    def test_no_inputs_exits_2(
        self, tmp_path: Path, isolated_config_manager: ConfigManager
    ) -> None:
        result = runner.invoke(app, ["reconstruct", "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestExperiment:
    """Tests for the experiment command."""

    def test_unknown_experiment_exits_2(
        self, tmp_path: Path, isolated_config_manager: ConfigManager
    ) -> None:
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"name": "tomography"}))
        result = runner.invoke(app, ["experiment", str(path), "--out", str(tmp_path)])
        assert result.exit_code == 2

    @pytest.mark.parametrize(("extra", "expected"), [([], 9), (["--seed", "5"], 5)])
    def test_spec_seed_kept_unless_overridden(
        self,
        tmp_path: Path,
        isolated_config_manager: ConfigManager,
        extra: list[str],
        expected: int,
    ) -> None:
        """The configured default seed never replaces the spec's seed."""
        path = tmp_path / "spec.json"
        spec = {
            "name": "bell_compare",
            "seed": 9,
            "qst_mode": "pointlike",
            "fit": {"restarts": 0},
        }
        path.write_text(json.dumps(spec))
        out = tmp_path / "out"
        result = runner.invoke(
            app, ["experiment", str(path), "--format", "json", "--out", str(out), *extra]
        )
        assert result.exit_code == 0, result.output
        report = json.loads((out / "bell_compare.json").read_text())
        assert report["spec"]["seed"] == expected

    def test_unknown_format_exits_2(
        self, tmp_path: Path, isolated_config_manager: ConfigManager
    ) -> None:
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"name": "bell_compare"}))
        result = runner.invoke(
            app, ["experiment", str(path), "--format", "pdf", "--out", str(tmp_path)]
        )
        assert result.exit_code == 2


class TestConfigCommand:
    """Tests for config show/set."""

    def test_show(self, isolated_config_manager: ConfigManager) -> None:
        result = runner.invoke(app, ["config", "show"])
        assert result.exit_code == 0
        assert "rng_seed" in result.output

    def test_set_alias(self, isolated_config_manager: ConfigManager) -> None:
        result = runner.invoke(app, ["config", "set", "seed", "7"])
        assert result.exit_code == 0, result.output
        reloaded = ConfigManager(config_dir=isolated_config_manager.config_dir).load_config()
        assert reloaded.rng_seed == 7

    def test_set_invalid_value_exits_2(self, isolated_config_manager: ConfigManager) -> None:
        result = runner.invoke(app, ["config", "set", "settings", "9"])
        assert result.exit_code == 2

    def test_set_unknown_key_exits_2(self, isolated_config_manager: ConfigManager) -> None:
        result = runner.invoke(app, ["config", "set", "team", "omnia"])
        assert result.exit_code == 2
