"""Experiment specifications and reports."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from stimtomo.acquisition.simulate import QstAcquisitionConfig, SetAcquisitionConfig
from stimtomo.config import load_document, require
from stimtomo.errors import ConfigError, ExperimentError
from stimtomo.reconstruction.fit import FitOptions
from stimtomo.source.model import PdlConfig, SeedDistortion, SourceConfig

EXPERIMENT_NAMES = (
    "bell_compare",
    "concurrence_sweep",
    "purity_sweep",
    "angle_scan",
    "pdl_demo",
    "angle_average",
)
SWEEP_EXPERIMENTS = ("concurrence_sweep", "purity_sweep", "angle_scan")
QST_MODES = ("averaged", "pointlike")

# Swept key reported as the point value
SWEEP_KEYS = {
    "concurrence_sweep": "alpha_sq",
    "purity_sweep": "decoherence",
    "angle_scan": "theta_mrad",
    "pdl_demo": "label",
}

# Overrides accepted in a sweep entry besides SourceConfig fields
POINT_KEYS = {"theta_mrad", "crystal_rotation_deg", "label", "r_signal", "r_idler", "pdl"}


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to run one experiment deterministically."""

    name: str
    source: SourceConfig = field(default_factory=SourceConfig)
    qst: QstAcquisitionConfig = field(default_factory=QstAcquisitionConfig)
    set_acquisition: SetAcquisitionConfig = field(default_factory=SetAcquisitionConfig)
    distortion: SeedDistortion = field(default_factory=SeedDistortion)
    pdl: PdlConfig = field(default_factory=PdlConfig)
    sweep: list[dict[str, Any]] = field(default_factory=list)
    replicates: int = 1
    theta_mrad: float = 0.0  # SET seed angle
    grid: list[float] | None = None  # angle_average grid (mrad)
    fit: FitOptions = field(default_factory=FitOptions)
    seed: int = 42
    qst_mode: str = "averaged"
    settings: int = 36
    weights: str = "none"
    weighted: bool = False  # intensity-weighted phase-slope fit

    def __post_init__(self) -> None:
        if self.name not in EXPERIMENT_NAMES:
            raise ExperimentError(
                f"unknown experiment {self.name!r}; expected one of {', '.join(EXPERIMENT_NAMES)}"
            )
        require(self.replicates >= 1, "replicates", "must be at least 1")
        require(self.seed >= 0, "seed", "must be nonnegative")
        require(math.isfinite(self.theta_mrad), "theta_mrad", "must be finite")
        require(self.qst_mode in QST_MODES, "qst_mode", f"must be one of {', '.join(QST_MODES)}")
        require(self.settings in (16, 36), "settings", "must be 16 or 36")
        if self.name in SWEEP_EXPERIMENTS:
            require(bool(self.sweep), "sweep", f"{self.name} needs a nonempty sweep")
        for k, entry in enumerate(self.sweep):
            require(isinstance(entry, dict), f"sweep[{k}]", "must be a mapping")
            source_fields = {f.name for f in dataclasses.fields(SourceConfig)}
            unknown = set(entry) - source_fields - POINT_KEYS
            require(not unknown, f"sweep[{k}]", f"unknown key(s) {', '.join(sorted(unknown))}")

    def with_overrides(self, **overrides: Any) -> ExperimentSpec:
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return {
            "name": self.name,
            "source": self.source.to_dict(),
            "qst": self.qst.to_dict(),
            "set": self.set_acquisition.to_dict(),
            "distortion": self.distortion.to_dict(),
            "pdl": self.pdl.to_dict(),
            "sweep": [dict(entry) for entry in self.sweep],
            "replicates": self.replicates,
            "theta_mrad": self.theta_mrad,
            "grid": list(self.grid) if self.grid is not None else None,
            "fit": self.fit.to_dict(),
            "seed": self.seed,
            "qst_mode": self.qst_mode,
            "settings": self.settings,
            "weights": self.weights,
            "weighted": self.weighted,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentSpec:
        """Create a spec from a JSON mapping; missing blocks take their defaults."""
        if "name" not in data:
            raise ConfigError("name", "experiment name is required")
        try:
            grid = data.get("grid")
            return cls(
                name=str(data["name"]),
                source=SourceConfig.from_dict(data.get("source") or {}),
                qst=QstAcquisitionConfig.from_dict(data.get("qst")),
                set_acquisition=SetAcquisitionConfig.from_dict(data.get("set")),
                distortion=SeedDistortion.from_dict(data.get("distortion")),
                pdl=PdlConfig.from_dict(data.get("pdl")),
                sweep=list(data.get("sweep") or []),
                replicates=int(data.get("replicates", 1)),
                theta_mrad=float(data.get("theta_mrad", 0.0)),
                grid=[float(x) for x in grid] if grid is not None else None,
                fit=FitOptions.from_dict(data.get("fit")),
                seed=int(data.get("seed", 42)),
                qst_mode=str(data.get("qst_mode", "averaged")),
                settings=int(data.get("settings", 36)),
                weights=str(data.get("weights", "none")),
                weighted=bool(data.get("weighted", False)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError("experiment", f"malformed value: {e}") from e


def load_experiment_spec(path: Path | str) -> ExperimentSpec:
    """Read an ExperimentSpec from a JSON (or YAML) file."""
    return ExperimentSpec.from_dict(load_document(path))


@dataclass
class PointResult:
    """One sweep point and replicate.

    ``qst`` / ``set`` hold reconstruction metrics; when either is missing
    ``skip_reason`` says why.
    """

    value: float | str
    replicate: int = 0
    index: int = 0
    qst: dict[str, Any] | None = None
    set: dict[str, Any] | None = None
    truth: dict[str, Any] = field(default_factory=dict)
    skip_reason: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def complete(self) -> bool:
        return self.qst is not None and self.set is not None

    def sort_key(self) -> tuple[float, int]:
        value = self.value if isinstance(self.value, (int, float)) else float(self.index)
        return (float(value), self.replicate)

    def to_dict(self) -> dict[str, Any]:
        return {
            "value": self.value,
            "replicate": self.replicate,
            "qst": self.qst,
            "set": self.set,
            "truth": self.truth,
            "skip_reason": self.skip_reason,
            "extra": self.extra,
        }


@dataclass
class ExperimentReport:
    """Per-point results, summary statistics and fitted or closed-form curves."""

    name: str
    spec: dict[str, Any]
    points: list[PointResult] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    curves: dict[str, dict[str, list[float]]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.sort_points()

    def sort_points(self) -> None:
        self.points.sort(key=lambda p: p.sort_key())

    def complete_points(self) -> list[PointResult]:
        return [p for p in self.points if p.complete]

    def to_dict(self) -> dict[str, Any]:
        """Convert report to dictionary."""
        return {
            "name": self.name,
            "spec": self.spec,
            "points": [p.to_dict() for p in self.points],
            "summary": self.summary,
            "curves": self.curves,
        }
