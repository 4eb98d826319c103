"""Shared test fixtures for isolated testing."""

from __future__ import annotations

import json
import tempfile
from pathlib import Path
from typing import TYPE_CHECKING

import pytest

from stimtomo.acquisition.simulate import QstAcquisitionConfig, SetAcquisitionConfig
from stimtomo.config import ConfigManager, StimtomoConfig
from stimtomo.quantum.core import DensityMatrix, bell_state
from stimtomo.reconstruction.fit import FitOptions
from stimtomo.source.model import SourceConfig

if TYPE_CHECKING:
    from collections.abc import Generator


@pytest.fixture(autouse=True)
def run_log_dir(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Keep run logs out of the user's log directory."""
    log_dir = tmp_path / "runs"
    monkeypatch.setattr("stimtomo.run_logger.get_log_directory", lambda: log_dir)
    monkeypatch.setattr("stimtomo.run_logger._run_logger", None)
    return log_dir


@pytest.fixture
def isolated_config_dir() -> Generator[Path, None, None]:
    """Provide isolated temporary config directory.

    Yields:
        Path to temporary .stimtomo config directory
    """
    with tempfile.TemporaryDirectory() as tmpdir:
        config_dir = Path(tmpdir) / ".stimtomo"
        config_dir.mkdir(parents=True)
        yield config_dir


@pytest.fixture
def isolated_config_manager(
    isolated_config_dir: Path, monkeypatch: pytest.MonkeyPatch
) -> ConfigManager:
    """Global config manager pointing at the isolated directory, run logging off."""
    manager = ConfigManager(config_dir=isolated_config_dir)
    manager.save_config(StimtomoConfig(run_logging=False))
    monkeypatch.setattr("stimtomo.config._config_manager", manager)
    return manager


@pytest.fixture
def bell() -> DensityMatrix:
    return bell_state()


@pytest.fixture
def zero_noise_qst() -> QstAcquisitionConfig:
    return QstAcquisitionConfig(noiseless=True)


@pytest.fixture
def zero_noise_set() -> SetAcquisitionConfig:
    return SetAcquisitionConfig(intensity_noise_rel=0.0)


@pytest.fixture
def fast_fit() -> FitOptions:
    return FitOptions(restarts=0)


@pytest.fixture
def flat_source() -> SourceConfig:
    """Bell source without an angle-dependent phase."""
    return SourceConfig(phase_slope=0.0)


@pytest.fixture
def bell_source_file(tmp_path: Path) -> Path:
    path = tmp_path / "bell.json"
    path.write_text(
        json.dumps(
            {
                "source": {"alpha_sq": 0.5, "phase_slope": 0.0},
                "distortion": {"birefringent_phase": 0.1, "amp_ratio": 1.05},
                "qst_mode": "pointlike",
            }
        )
    )
    return path
