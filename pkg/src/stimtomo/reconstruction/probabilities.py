"""Raw records to outcome probabilities, and single-photon seed reconstruction."""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from stimtomo.acquisition.records import MeasurementRecord, Port, RecordKind
from stimtomo.errors import (
    EmptyBasisError,
    EmptyGroupError,
    IncompleteRecordsError,
    ZeroIntensityError,
)
from stimtomo.quantum.core import DensityMatrix, eigen_hermitian, project_psd
from stimtomo.quantum.polarization import (
    ALL_LABELS,
    BASES,
    MeasurementSetting,
    PolLabel,
    basis_pairs,
    group_key,
    measurement_settings,
)

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-9

_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


class ProbabilityMode(str, Enum):
    QST = "qst"
    SET_IDEAL = "set_ideal"
    SET_RENORMALIZED = "set_renormalized"

    def __str__(self) -> str:
        return self.value


@dataclass
class ProbabilityTable:
    """Outcome probabilities keyed by measurement setting.

    ``totals`` holds the raw four-outcome sum of each basis-pair group (counts
    for QST), used for inverse-variance weighting.
    """

    entries: dict[MeasurementSetting, float]
    mode: ProbabilityMode
    totals: dict[str, float] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[MeasurementSetting]:
        return iter(self.entries)

    def __getitem__(self, setting: MeasurementSetting | str) -> float:
        if isinstance(setting, str):
            setting = MeasurementSetting.parse(setting)
        return self.entries[setting]

    def settings(self) -> list[MeasurementSetting]:
        """Settings in canonical (signal-major) order."""
        order = {s: k for k, s in enumerate(measurement_settings(36))}
        return sorted(self.entries, key=lambda s: order[s])

    def subset(self, settings: Iterable[MeasurementSetting]) -> ProbabilityTable:
        """Restrict to ``settings``.

        Raises:
            IncompleteRecordsError: If any requested setting is absent
        """
        chosen = list(settings)
        missing = [str(s) for s in chosen if s not in self.entries]
        if missing:
            raise IncompleteRecordsError(f"missing settings {', '.join(missing)}")
        return ProbabilityTable(
            entries={s: self.entries[s] for s in chosen}, mode=self.mode, totals=dict(self.totals)
        )

    def is_group_normalized(self) -> bool:
        """True if every basis-pair group present sums to 1."""
        return all(abs(total - 1.0) <= PROBABILITY_TOL for total in self.group_sums().values())

    def group_sums(self) -> dict[str, float]:
        sums: dict[str, float] = defaultdict(float)
        for setting, value in self.entries.items():
            sums[group_key(setting)] += value
        return dict(sums)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "entries": {str(s): self.entries[s] for s in self.settings()},
        }


def _require_all_settings(present: Iterable[MeasurementSetting], what: str) -> None:
    missing = [str(s) for s in measurement_settings(36) if s not in set(present)]
    if missing:
        raise IncompleteRecordsError(f"{what}: missing settings {', '.join(missing)}")


def qst_probabilities(records: Iterable[MeasurementRecord]) -> ProbabilityTable:
    """P = R / (sum of the four outcomes of its basis pair).

    Raises:
        IncompleteRecordsError: If a basis pair lacks one of its four outcomes
        EmptyBasisError: If a basis pair has zero total counts
    """
    counts: dict[MeasurementSetting, float] = defaultdict(float)
    for record in records:
        if record.kind is RecordKind.QST_COUNT:
            counts[record.setting] += record.value
    _require_all_settings(counts, "QST records")

    entries: dict[MeasurementSetting, float] = {}
    totals: dict[str, float] = {}
    for signal_basis, idler_basis in basis_pairs():
        group = [MeasurementSetting(s, i) for s in signal_basis for i in idler_basis]
        name = group_key(group[0])
        total = sum(counts[s] for s in group)
        if total <= 0:
            raise EmptyBasisError(name)
        totals[name] = total
        for setting in group:
            entries[setting] = counts[setting] / total
    return ProbabilityTable(entries=entries, mode=ProbabilityMode.QST, totals=totals)


def seed_totals(records: Iterable[MeasurementRecord]) -> dict[PolLabel, float]:
    """Total seed intensity (both PBS ports) per seed label."""
    totals: dict[PolLabel, float] = defaultdict(float)
    ports: dict[PolLabel, set[Port]] = defaultdict(set)
    for record in records:
        if record.kind is RecordKind.SEED_INTENSITY:
            totals[record.signal] += record.value
            ports[record.signal].add(record.port)
    incomplete = [str(label) for label in ALL_LABELS if len(ports[label]) < 2]
    if incomplete:
        raise IncompleteRecordsError(
            f"seed intensity needs both ports for seed(s) {', '.join(incomplete)}"
        )
    return dict(totals)


def set_ideal_probabilities(records: Iterable[MeasurementRecord]) -> ProbabilityTable:
    """P^ideal(s, i) = I^stim_i / I^seed_s from transmitted-port readings.

    The result still carries the coupling factor eps_i / eps_s.

    Raises:
        IncompleteRecordsError: If a seed or stimulated reading is missing
        ZeroIntensityError: If a seed's total intensity is zero
    """
    records = list(records)
    totals = seed_totals(records)
    stim: dict[MeasurementSetting, float] = {}
    for record in records:
        if record.kind is RecordKind.SET_INTENSITY and record.port is Port.TRANSMITTED:
            stim[record.setting] = record.value
    _require_all_settings(stim, "stimulated records")

    entries: dict[MeasurementSetting, float] = {}
    for setting, value in stim.items():
        seed_total = totals[setting.signal]
        if seed_total <= 0:
            raise ZeroIntensityError(f"seed {setting.signal} has zero total intensity")
        entries[setting] = value / seed_total
    return ProbabilityTable(entries=entries, mode=ProbabilityMode.SET_IDEAL)


def set_renormalize(ideal: ProbabilityTable) -> ProbabilityTable:
    """Normalize each (seed basis) x (idler basis) group of four to unit sum.

    Any common factor inside a group, such as eps_i / eps_s, cancels.

    Raises:
        EmptyGroupError: If a group sums to zero
    """
    if ideal.mode is not ProbabilityMode.SET_IDEAL:
        raise ValueError(f"set_renormalize expects a set_ideal table, got {ideal.mode}")
    entries: dict[MeasurementSetting, float] = {}
    totals: dict[str, float] = {}
    for signal_basis, idler_basis in basis_pairs():
        group = [MeasurementSetting(s, i) for s in signal_basis for i in idler_basis]
        name = group_key(group[0])
        missing = [str(s) for s in group if s not in ideal.entries]
        if missing:
            raise IncompleteRecordsError(f"group {name}: missing {', '.join(missing)}")
        total = sum(ideal.entries[s] for s in group)
        if total <= 0:
            raise EmptyGroupError(name)
        totals[name] = total
        for setting in group:
            entries[setting] = ideal.entries[setting] / total
    logger.debug("Renormalized %d SET groups", len(totals))
    return ProbabilityTable(entries=entries, mode=ProbabilityMode.SET_RENORMALIZED, totals=totals)


def stokes_fractions(records: Iterable[MeasurementRecord]) -> dict[PolLabel, float]:
    """Fraction of each basis's light found in each label.

    Raises:
        IncompleteRecordsError: If a basis has no readings
        ZeroIntensityError: If a basis carries no light
    """
    intensity: dict[PolLabel, float] = defaultdict(float)
    seen: set[PolLabel] = set()
    for record in records:
        intensity[record.idler] += record.value
        seen.add(record.idler)
    fractions: dict[PolLabel, float] = {}
    for first, second in BASES:
        if first not in seen or second not in seen:
            raise IncompleteRecordsError(f"no readings for the {first}/{second} basis")
        total = intensity[first] + intensity[second]
        if total <= 0:
            raise ZeroIntensityError(f"zero total intensity in the {first}/{second} basis")
        fractions[first] = intensity[first] / total
        fractions[second] = intensity[second] / total
    return fractions


def reconstruct_single_photon(records: Iterable[MeasurementRecord]) -> DensityMatrix:
    """Linear Stokes inversion of six-analyzer readings, projected to a physical state.

    The label in each record's idler slot is the polarization the reading
    projected onto.
    """
    p = stokes_fractions(records)
    s1 = p[PolLabel.H] - p[PolLabel.V]
    s2 = p[PolLabel.D] - p[PolLabel.A]
    s3 = p[PolLabel.R] - p[PolLabel.L]
    rho = 0.5 * (np.eye(2, dtype=complex) + s1 * _PAULI_Z + s2 * _PAULI_X + s3 * _PAULI_Y)
    eigenvalues, _ = eigen_hermitian(rho)
    if eigenvalues[-1] < 0:
        logger.debug("Seed Stokes vector outside the Bloch ball; projecting")
        return project_psd(rho)
    return DensityMatrix.from_unnormalized(rho)


def seed_states(seed_tomo_records: Iterable[MeasurementRecord]) -> dict[PolLabel, DensityMatrix]:
    """Reconstructed detected-seed state for each seed label present."""
    by_seed: dict[PolLabel, list[MeasurementRecord]] = defaultdict(list)
    for record in seed_tomo_records:
        by_seed[record.signal].append(record)
    missing = [str(label) for label in ALL_LABELS if label not in by_seed]
    if missing:
        raise IncompleteRecordsError(f"no seed tomography for seed(s) {', '.join(missing)}")
    return {label: reconstruct_single_photon(by_seed[label]) for label in ALL_LABELS}
