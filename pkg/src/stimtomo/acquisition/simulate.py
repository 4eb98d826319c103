"""Simulated raw data: Poisson coincidence counts (QST) and photodiode intensities (SET)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from stimtomo.acquisition.records import MeasurementRecord, Port, RecordKind
from stimtomo.config import require
from stimtomo.quantum.core import DensityMatrix
from stimtomo.quantum.polarization import (
    ALL_LABELS,
    MeasurementSetting,
    PolLabel,
    basis_pairs,
    jones_of,
    orthogonal,
    pair_operator,
    projector,
)
from stimtomo.source.model import (
    PdlConfig,
    SeedDistortion,
    SourceConfig,
    StimulatedResponse,
    seeded_response,
    true_state,
)

logger = logging.getLogger(__name__)

# Sub-stream tags under one seed label
_STIM_STREAM = 0
_SEED_STREAM = 1
_TOMO_STREAM = 2


@dataclass(frozen=True)
class QstAcquisitionConfig:
    """Coincidence-counting setup. ``noiseless`` emits expectation values instead of draws."""

    pair_rate_hz: float = 15000.0
    integration_s: float = 1.0
    efficiency_pair: float = 0.15
    seed_rng: int = 0
    noiseless: bool = False
    # accidentals + dark coincidences, additive per record
    background_rate_hz: float = 0.0

    def __post_init__(self) -> None:
        require(self.pair_rate_hz > 0, "pair_rate_hz", "must be positive")
        require(self.integration_s > 0, "integration_s", "must be positive")
        require(0.0 < self.efficiency_pair <= 1.0, "efficiency_pair", "must lie in (0, 1]")
        require(self.background_rate_hz >= 0, "background_rate_hz", "must be nonnegative")
        require(self.seed_rng >= 0, "seed_rng", "must be nonnegative")

    @property
    def expected_pairs(self) -> float:
        """Expected detected pairs per basis pair."""
        return self.pair_rate_hz * self.integration_s * self.efficiency_pair

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair_rate_hz": self.pair_rate_hz,
            "integration_s": self.integration_s,
            "efficiency_pair": self.efficiency_pair,
            "seed_rng": self.seed_rng,
            "noiseless": self.noiseless,
            "background_rate_hz": self.background_rate_hz,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> QstAcquisitionConfig:
        data = data or {}
        return cls(
            pair_rate_hz=float(data.get("pair_rate_hz", 15000.0)),
            integration_s=float(data.get("integration_s", 1.0)),
            efficiency_pair=float(data.get("efficiency_pair", 0.15)),
            seed_rng=int(data.get("seed_rng", 0)),
            noiseless=bool(data.get("noiseless", False)),
            background_rate_hz=float(data.get("background_rate_hz", 0.0)),
        )


@dataclass(frozen=True)
class SetAcquisitionConfig:
    """Photodiode setup for the seed (signal) and stimulated (idler) arms."""

    coupling_signal: float = 1.0
    coupling_idler: float = 1.0
    intensity_noise_rel: float = 0.005
    seed_rng: int = 0

    def __post_init__(self) -> None:
        require(self.coupling_signal > 0, "coupling_signal", "must be positive")
        require(self.coupling_idler > 0, "coupling_idler", "must be positive")
        require(self.intensity_noise_rel >= 0, "intensity_noise_rel", "must be nonnegative")
        require(self.seed_rng >= 0, "seed_rng", "must be nonnegative")

    def to_dict(self) -> dict[str, Any]:
        return {
            "coupling_signal": self.coupling_signal,
            "coupling_idler": self.coupling_idler,
            "intensity_noise_rel": self.intensity_noise_rel,
            "seed_rng": self.seed_rng,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> SetAcquisitionConfig:
        data = data or {}
        return cls(
            coupling_signal=float(data.get("coupling_signal", 1.0)),
            coupling_idler=float(data.get("coupling_idler", 1.0)),
            intensity_noise_rel=float(data.get("intensity_noise_rel", 0.005)),
            seed_rng=int(data.get("seed_rng", 0)),
        )


@dataclass
class SetRun:
    """Records of one full SET acquisition (all six seed labels)."""

    stim_records: list[MeasurementRecord] = field(default_factory=list)
    seed_tomo_records: list[MeasurementRecord] = field(default_factory=list)


def simulate_qst_counts(
    rho: DensityMatrix, cfg: QstAcquisitionConfig, theta_mrad: float = 0.0
) -> list[MeasurementRecord]:
    """Coincidence counts for the 9 basis pairs, four port combinations each.

    Basis pair k draws from its own stream ``default_rng([seed_rng, k])``.
    """
    if rho.dim != 4:
        raise ValueError("simulate_qst_counts expects a two-photon state")
    records: list[MeasurementRecord] = []
    background = cfg.background_rate_hz * cfg.integration_s
    for index, (signal_basis, idler_basis) in enumerate(basis_pairs()):
        rng = np.random.default_rng([cfg.seed_rng, index])
        for signal_port, signal_label in zip(Port, signal_basis, strict=True):
            for idler_label in idler_basis:
                setting = MeasurementSetting(signal_label, idler_label)
                probability = float(np.real(np.trace(pair_operator(setting) @ rho.matrix)))
                mean = cfg.expected_pairs * max(probability, 0.0) + background
                value = mean if cfg.noiseless else float(rng.poisson(mean))
                records.append(
                    MeasurementRecord(
                        kind=RecordKind.QST_COUNT,
                        setting=setting,
                        value=value,
                        port=signal_port,
                        theta_mrad=theta_mrad,
                        rng_seed=cfg.seed_rng,
                    )
                )
    logger.debug("Simulated %d QST records (seed %d)", len(records), cfg.seed_rng)
    return records


def _noisy(value: float, rng: np.random.Generator, relative: float) -> float:
    if relative == 0.0:
        return value
    return max(0.0, value * (1.0 + relative * rng.standard_normal()))


def _analyzer_readings(
    state: DensityMatrix, scale: float, rng: np.random.Generator, relative: float
) -> list[tuple[PolLabel, Port, float]]:
    """Both PBS ports behind each of the six analyzers."""
    readings = []
    for label in ALL_LABELS:
        for port, projected in ((Port.TRANSMITTED, label), (Port.REFLECTED, orthogonal(label))):
            mean = scale * float(np.real(np.trace(projector(projected) @ state.matrix)))
            readings.append((projected, port, _noisy(max(mean, 0.0), rng, relative)))
    return readings


def _set_records(
    response: StimulatedResponse,
    seed_label: PolLabel,
    theta_mrad: float,
    acq: SetAcquisitionConfig,
) -> list[MeasurementRecord]:
    seed_index = ALL_LABELS.index(seed_label)
    rng = np.random.default_rng([acq.seed_rng, seed_index, _STIM_STREAM])
    records = [
        MeasurementRecord(
            kind=RecordKind.SET_INTENSITY,
            setting=MeasurementSetting(seed_label, projected),
            value=value,
            port=port,
            theta_mrad=theta_mrad,
            rng_seed=acq.seed_rng,
        )
        for projected, port, value in _analyzer_readings(
            response.idler_state,
            acq.coupling_idler * response.gain,
            rng,
            acq.intensity_noise_rel,
        )
    ]

    seed_rng = np.random.default_rng([acq.seed_rng, seed_index, _SEED_STREAM])
    seed_scale = acq.coupling_signal * response.seed_transmission
    for port, projected in ((Port.TRANSMITTED, PolLabel.H), (Port.REFLECTED, PolLabel.V)):
        mean = seed_scale * float(
            np.real(np.trace(projector(projected) @ response.seed_detected.matrix))
        )
        records.append(
            MeasurementRecord(
                kind=RecordKind.SEED_INTENSITY,
                setting=MeasurementSetting(seed_label, projected),
                value=_noisy(mean, seed_rng, acq.intensity_noise_rel),
                port=port,
                theta_mrad=theta_mrad,
                rng_seed=acq.seed_rng,
            )
        )
    return records


def simulate_set_intensities(
    cfg_src: SourceConfig,
    seed_label: PolLabel,
    theta_mrad: float,
    distortion: SeedDistortion,
    pdl: PdlConfig,
    acq: SetAcquisitionConfig,
) -> list[MeasurementRecord]:
    """12 stimulated-idler readings and 2 seed readings for one seed label.

    Raises:
        DegenerateLossError: If losses remove all of the light
    """
    response = seeded_response(
        true_state(cfg_src, theta_mrad), jones_of(seed_label), distortion, pdl
    )
    return _set_records(response, seed_label, theta_mrad, acq)


def measure_seed_singlephoton(
    distorted_seed: DensityMatrix,
    acq: SetAcquisitionConfig,
    seed_label: PolLabel = PolLabel.H,
    scale: float = 1.0,
    theta_mrad: float = 0.0,
) -> list[MeasurementRecord]:
    """Seed intensities behind all six analyzers, both ports (12 records).

    ``seed_label`` only fills the signal slot of the records.
    """
    if distorted_seed.dim != 2:
        raise ValueError("measure_seed_singlephoton expects a single-photon state")
    seed_index = ALL_LABELS.index(seed_label)
    rng = np.random.default_rng([acq.seed_rng, seed_index, _TOMO_STREAM])
    return [
        MeasurementRecord(
            kind=RecordKind.SEED_TOMO,
            setting=MeasurementSetting(seed_label, projected),
            value=value,
            port=port,
            theta_mrad=theta_mrad,
            rng_seed=acq.seed_rng,
        )
        for projected, port, value in _analyzer_readings(
            distorted_seed, scale * acq.coupling_signal, rng, acq.intensity_noise_rel
        )
    ]


def simulate_set_run_for_state(
    rho: DensityMatrix,
    distortion: SeedDistortion,
    pdl: PdlConfig,
    acq: SetAcquisitionConfig,
    theta_mrad: float = 0.0,
) -> SetRun:
    """Stimulated, seed and seed-tomography records of ``rho`` for all six seed labels."""
    run = SetRun()
    for seed_label in ALL_LABELS:
        response = seeded_response(rho, jones_of(seed_label), distortion, pdl)
        run.stim_records.extend(_set_records(response, seed_label, theta_mrad, acq))
        run.seed_tomo_records.extend(
            measure_seed_singlephoton(
                response.seed_detected,
                acq,
                seed_label=seed_label,
                scale=response.seed_transmission,
                theta_mrad=theta_mrad,
            )
        )
    logger.debug(
        "Simulated SET run at theta=%.4g mrad: %d stimulated, %d seed-tomography records",
        theta_mrad,
        len(run.stim_records),
        len(run.seed_tomo_records),
    )
    return run


def simulate_set_run(
    cfg_src: SourceConfig,
    theta_mrad: float,
    distortion: SeedDistortion,
    pdl: PdlConfig,
    acq: SetAcquisitionConfig,
) -> SetRun:
    """Full SET acquisition of the source at angle theta."""
    return simulate_set_run_for_state(
        true_state(cfg_src, theta_mrad), distortion, pdl, acq, theta_mrad
    )
