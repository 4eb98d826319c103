"""Tests for per-run logging."""

from pathlib import Path

from stimtomo.run_logger import (
    create_run_logger,
    get_run_logger,
    log_run_end,
    log_run_start,
    log_stage,
)


class TestRunLogger:
    """Tests for the run logger lifecycle."""

    def test_disabled_by_config(self, run_log_dir: Path) -> None:
        """A disabled run logger writes nothing."""
        assert create_run_logger(enabled=False) is None
        assert get_run_logger() is None
        assert not run_log_dir.exists()

    def test_default_directory(self, run_log_dir: Path) -> None:
        """Without an override the log lands in the platform directory."""
        create_run_logger(run_id="def456")
        assert (run_log_dir / "latest.log").exists()
        assert any(p.name.endswith("_def456.log") for p in run_log_dir.iterdir())

    def test_lifecycle(self, tmp_path: Path) -> None:
        logger = create_run_logger(run_id="abc123", log_dir=tmp_path)
        assert logger is get_run_logger()

        log_run_start("simulate", {"seed": 42})
        log_stage("qst_records", count=36)
        log_run_end(0)
        log_run_end(3)
        for handler in logger.handlers:
            handler.flush()

        text = (tmp_path / "latest.log").read_text()
        assert "RUN_START run_id=abc123 command=simulate seed=42" in text
        assert "STAGE qst_records count=36" in text
        assert text.count("RUN_END") == 1
        assert "exit_code=0" in text
