"""Run logging for stimtomo.

Every CLI invocation gets its own text log with lifecycle and stage events,
written to a platform-specific directory with a ``latest.log`` symlink.

Set ``run_logging`` to false in the user config to turn it off.
"""

from __future__ import annotations

import logging
import os
import platform
import uuid
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any

# Global run logger instance
_run_logger: logging.Logger | None = None
_run_id: str | None = None
_run_start_time: datetime | None = None
_run_ended: bool = False  # Guard against duplicate RUN_END records


def get_log_directory() -> Path:
    """Get platform-specific log directory.

    Returns:
        - macOS: ~/Library/Logs/stimtomo/runs/
        - Windows: %LOCALAPPDATA%/stimtomo/logs/runs/
        - Linux: ~/.local/share/stimtomo/logs/runs/
    """
    system = platform.system()

    if system == "Darwin":
        base = Path.home() / "Library" / "Logs" / "stimtomo"
    elif system == "Windows":
        local_app_data = os.environ.get("LOCALAPPDATA", "")
        if local_app_data:
            base = Path(local_app_data) / "stimtomo" / "logs"
        else:
            base = Path.home() / "AppData" / "Local" / "stimtomo" / "logs"
    else:
        base = Path.home() / ".local" / "share" / "stimtomo" / "logs"

    return base / "runs"


def _format_fields(fields: dict[str, Any]) -> str:
    return " ".join(f"{key}={value}" for key, value in fields.items())


def create_run_logger(
    run_id: str | None = None,
    log_level: str = "INFO",
    enabled: bool = True,
    log_dir: Path | None = None,
) -> logging.Logger | None:
    """Create and configure the run logger.

    Args:
        run_id: Unique run identifier (auto-generated if None)
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        enabled: Whether logging is enabled
        log_dir: Directory override (defaults to the platform directory)

    Returns:
        Configured logger instance, or None if disabled
    """
    global _run_logger, _run_id, _run_start_time, _run_ended

    if not enabled:
        _run_logger = None
        _run_id = None
        return None

    if run_id is None:
        run_id = str(uuid.uuid4())[:8]

    _run_id = run_id
    _run_start_time = datetime.now()
    _run_ended = False

    log_dir = log_dir or get_log_directory()
    log_dir.mkdir(parents=True, exist_ok=True)

    timestamp = _run_start_time.strftime("%Y%m%d_%H%M%S")
    log_file = log_dir / f"run_{timestamp}_{run_id}.log"

    logger = logging.getLogger(f"stimtomo.run.{run_id}")
    logger.setLevel(getattr(logging, log_level.upper(), logging.INFO))
    logger.propagate = False

    # Remove existing handlers to avoid duplicates
    logger.handlers.clear()

    handler = RotatingFileHandler(
        log_file,
        maxBytes=10 * 1024 * 1024,  # 10MB per file
        backupCount=0,
        encoding="utf-8",
    )
    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    handler.setFormatter(formatter)
    logger.addHandler(handler)

    latest_link = log_dir / "latest.log"
    try:
        if latest_link.exists() or latest_link.is_symlink():
            latest_link.unlink()
        latest_link.symlink_to(log_file)
    except OSError:
        pass  # Symlinks may not be supported on all platforms

    _run_logger = logger
    return logger


def get_run_logger() -> logging.Logger | None:
    """Current run logger, or None if not initialized."""
    return _run_logger


def log_run_start(command: str, args: dict[str, Any] | None = None) -> None:
    """Log the command line that started the run."""
    if _run_logger and _run_id:
        fields = {"run_id": _run_id, "command": command, **(args or {})}
        _run_logger.info(f"RUN_START {_format_fields(fields)}")


def log_stage(stage: str, **fields: Any) -> None:
    """Log one pipeline stage as key=value pairs."""
    if _run_logger:
        _run_logger.info(f"STAGE {stage} {_format_fields(fields)}".rstrip())


def log_run_end(exit_code: int) -> None:
    """Log run end with duration.

    Guarded so the error path and the normal path cannot both write it.
    """
    global _run_ended
    if _run_logger and _run_id and _run_start_time and not _run_ended:
        _run_ended = True
        duration_ms = int((datetime.now() - _run_start_time).total_seconds() * 1000)
        _run_logger.info(
            f"RUN_END run_id={_run_id} exit_code={exit_code} duration_ms={duration_ms}"
        )
