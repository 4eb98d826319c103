"""Simulate command: write QST and/or SET records for a configured source."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from rich.console import Console

from stimtomo.acquisition.records import write_records
from stimtomo.acquisition.simulate import (
    QstAcquisitionConfig,
    SetAcquisitionConfig,
    simulate_qst_counts,
    simulate_set_run,
)
from stimtomo.commands.common import RunConfig, metrics_table, print_written
from stimtomo.config import load_document, require
from stimtomo.experiments.models import QST_MODES
from stimtomo.experiments.reports import dump_json
from stimtomo.reconstruction.fit import state_metrics
from stimtomo.run_logger import log_stage
from stimtomo.source.model import (
    PdlConfig,
    SeedDistortion,
    SourceConfig,
    angle_averaged_state,
    true_state,
)

QST_RECORDS_FILE = "qst_records.csv"
SET_RECORDS_FILE = "set_records.csv"
SEED_TOMO_FILE = "seed_tomo.csv"
TRUTH_FILE = "truth.json"

# Blocks a source document may carry next to the source itself
_BLOCKS = ("source", "qst", "set", "distortion", "pdl", "qst_mode")


@dataclass
class SimulationInputs:
    """A source plus the acquisition settings to simulate it with."""

    source: SourceConfig
    qst: QstAcquisitionConfig = field(default_factory=QstAcquisitionConfig)
    set_acquisition: SetAcquisitionConfig = field(default_factory=SetAcquisitionConfig)
    distortion: SeedDistortion = field(default_factory=SeedDistortion)
    pdl: PdlConfig = field(default_factory=PdlConfig)
    qst_mode: str = "averaged"

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SimulationInputs:
        """Either a bare SourceConfig mapping or one with a ``source`` block."""
        if "source" not in data:
            return cls(source=SourceConfig.from_dict(data))
        unknown = set(data) - set(_BLOCKS)
        require(not unknown, ",".join(sorted(unknown)), "unknown block in source file")
        mode = str(data.get("qst_mode", "averaged"))
        require(mode in QST_MODES, "qst_mode", f"must be one of {', '.join(QST_MODES)}")
        return cls(
            source=SourceConfig.from_dict(data["source"] or {}),
            qst=QstAcquisitionConfig.from_dict(data.get("qst")),
            set_acquisition=SetAcquisitionConfig.from_dict(data.get("set")),
            distortion=SeedDistortion.from_dict(data.get("distortion")),
            pdl=PdlConfig.from_dict(data.get("pdl")),
            qst_mode=mode,
        )


def load_simulation_inputs(path: Path) -> SimulationInputs:
    return SimulationInputs.from_dict(load_document(path))


def simulate_command(
    console: Console,
    run: RunConfig,
    qst: bool,
    set_: bool,
    theta_mrad: float = 0.0,
    seconds: float | None = None,
) -> list[Path]:
    """Simulate records and write them, with the ground truth, to ``run.out_dir``.

    Neither flag means both pipelines.

    Raises:
        ConfigError: If the source file or an override is invalid
    """
    inputs = load_simulation_inputs(run.inputs["source"])
    if not qst and not set_:
        qst = set_ = True

    qst_cfg = dataclasses.replace(inputs.qst, seed_rng=run.rng_seed)
    if seconds is not None:
        require(seconds > 0, "seconds", "must be positive")
        qst_cfg = dataclasses.replace(qst_cfg, integration_s=seconds)
    require(
        not (qst and qst_cfg.noiseless),
        "qst.noiseless",
        "expectation-value counts cannot be written as integer count records",
    )
    set_cfg = dataclasses.replace(inputs.set_acquisition, seed_rng=run.rng_seed)

    source = inputs.source
    out_dir = run.prepare_output()
    log_stage(
        "simulate",
        theta_mrad=theta_mrad,
        seed_power_mw=source.seed_power_mw,
        stimulated_power_uw=source.stimulated_power_uw,
    )

    truth_set = true_state(source, theta_mrad)
    truth_qst = angle_averaged_state(source) if inputs.qst_mode == "averaged" else truth_set
    written: list[Path] = []
    if qst:
        records = simulate_qst_counts(truth_qst, qst_cfg, theta_mrad)
        written.append(write_records(out_dir / QST_RECORDS_FILE, records))
        log_stage("qst_records", count=len(records))
    if set_:
        set_run = simulate_set_run(source, theta_mrad, inputs.distortion, inputs.pdl, set_cfg)
        written.append(write_records(out_dir / SET_RECORDS_FILE, set_run.stim_records))
        written.append(write_records(out_dir / SEED_TOMO_FILE, set_run.seed_tomo_records))
        log_stage("set_records", count=len(set_run.stim_records))

    truth: dict[str, Any] = {
        "source": source.to_dict(),
        "theta_mrad": theta_mrad,
        "qst_mode": inputs.qst_mode,
        "qst": {"rho": truth_qst.to_dict(), "metrics": state_metrics(truth_qst)},
        "set": {"rho": truth_set.to_dict(), "metrics": state_metrics(truth_set)},
    }
    written.append(dump_json(truth, out_dir / TRUTH_FILE))

    console.print(
        metrics_table(
            "Ground truth",
            {"QST path": truth["qst"]["metrics"], "SET path": truth["set"]["metrics"]},
        )
    )
    print_written(console, written)
    return written
