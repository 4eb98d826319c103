"""Polarization labels, Jones vectors, projectors and analyzer settings.

A Jones vector j describes the classical field; the matching polarization
ket is its complex conjugate, so the density matrix of j is conj(j) j^T.
With R = (1, -i)/sqrt(2) this puts -i/2 in the upper-right entry of the
R projector, the sign carried by the reconstructed seed matrices.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike

from stimtomo.errors import InvalidStateError
from stimtomo.quantum.core import ComplexMatrix, DensityMatrix, tensor_product

SQRT_HALF = 1.0 / np.sqrt(2.0)
JONES_NORM_TOL = 1e-12


class PolLabel(str, Enum):
    """The six polarization states of the three measurement bases."""

    H = "H"
    V = "V"
    D = "D"
    A = "A"
    R = "R"
    L = "L"

    @classmethod
    def parse(cls, value: str | PolLabel) -> PolLabel:
        try:
            return cls(str(value).strip().upper())
        except ValueError as e:
            raise ValueError(f"unknown polarization label {value!r}") from e

    def __str__(self) -> str:
        return self.value


ALL_LABELS: tuple[PolLabel, ...] = tuple(PolLabel)

# (transmitted, reflected) label of each analyzer basis
BASES: tuple[tuple[PolLabel, PolLabel], ...] = (
    (PolLabel.H, PolLabel.V),
    (PolLabel.D, PolLabel.A),
    (PolLabel.R, PolLabel.L),
)

_ORTHOGONAL = {a: b for a, b in BASES} | {b: a for a, b in BASES}

_JONES: dict[PolLabel, tuple[complex, complex]] = {
    PolLabel.H: (1.0, 0.0),
    PolLabel.V: (0.0, 1.0),
    PolLabel.D: (SQRT_HALF, SQRT_HALF),
    PolLabel.A: (SQRT_HALF, -SQRT_HALF),
    PolLabel.R: (SQRT_HALF, -1j * SQRT_HALF),
    PolLabel.L: (SQRT_HALF, 1j * SQRT_HALF),
}


def orthogonal(label: PolLabel) -> PolLabel:
    """The other member of label's basis (H<->V, D<->A, R<->L)."""
    return _ORTHOGONAL[label]


def basis_of(label: PolLabel) -> tuple[PolLabel, PolLabel]:
    for basis in BASES:
        if label in basis:
            return basis
    raise ValueError(f"no basis for {label}")


def basis_name(label: PolLabel) -> str:
    a, b = basis_of(label)
    return f"{a}/{b}"


@dataclass(frozen=True)
class JonesVector:
    """Unit-norm two-component field amplitude (h, v)."""

    h: complex
    v: complex

    def __post_init__(self) -> None:
        norm_sq = abs(self.h) ** 2 + abs(self.v) ** 2
        if abs(norm_sq - 1.0) > JONES_NORM_TOL:
            raise InvalidStateError(f"Jones vector norm^2 is {norm_sq:.15g}, expected 1")

    @classmethod
    def normalized(cls, h: complex, v: complex) -> JonesVector:
        norm = np.sqrt(abs(h) ** 2 + abs(v) ** 2)
        if norm == 0:
            raise InvalidStateError("zero Jones vector")
        return cls(complex(h / norm), complex(v / norm))

    def as_array(self) -> np.ndarray:
        return np.array([self.h, self.v], dtype=complex)


@dataclass(frozen=True)
class MeasurementSetting:
    """A (signal, idler) label pair; for seed records the signal slot holds the seed."""

    signal: PolLabel
    idler: PolLabel

    def __str__(self) -> str:
        return f"{self.signal}{self.idler}"

    @classmethod
    def parse(cls, text: str) -> MeasurementSetting:
        if len(text) != 2:
            raise ValueError(f"setting must be two labels, got {text!r}")
        return cls(PolLabel.parse(text[0]), PolLabel.parse(text[1]))


@dataclass(frozen=True)
class WaveplateSetting:
    """Half- and quarter-wave plate angles in radians, each in [0, pi)."""

    hwp_angle: float
    qwp_angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "hwp_angle", float(np.mod(self.hwp_angle, np.pi)))
        object.__setattr__(self, "qwp_angle", float(np.mod(self.qwp_angle, np.pi)))


def jones_of(label: PolLabel) -> JonesVector:
    h, v = _JONES[PolLabel.parse(label)]
    return JonesVector(complex(h), complex(v))


def density_of(jones: JonesVector | ArrayLike) -> DensityMatrix:
    """Single-photon density matrix conj(j) j^T of a Jones vector."""
    j = jones.as_array() if isinstance(jones, JonesVector) else np.asarray(jones, dtype=complex)
    return DensityMatrix.from_pure(j.conj())


def projector(label: PolLabel) -> ComplexMatrix:
    """Rank-1 projector onto the polarization ket of ``label``."""
    return np.array(density_of(jones_of(label)).matrix)


def pair_operator(setting: MeasurementSetting) -> ComplexMatrix:
    """projector(signal) (x) projector(idler)."""
    return tensor_product(projector(setting.signal), projector(setting.idler))


def rotated_pair_operator(seed_state: DensityMatrix, idler_label: PolLabel) -> ComplexMatrix:
    """rho_seed (x) projector(idler): the operator for a distorted seed."""
    if not isinstance(seed_state, DensityMatrix) or seed_state.dim != 2:
        raise InvalidStateError("rotated_pair_operator needs a single-photon DensityMatrix")
    return tensor_product(seed_state.matrix, projector(idler_label))


def measurement_settings(count: int = 36) -> list[MeasurementSetting]:
    """The 36 settings of all six labels, or the 16-setting {H,V,D,R} subset."""
    if count == 36:
        labels: tuple[PolLabel, ...] = ALL_LABELS
    elif count == 16:
        labels = (PolLabel.H, PolLabel.V, PolLabel.D, PolLabel.R)
    else:
        raise ValueError(f"settings count must be 16 or 36, got {count}")
    return [MeasurementSetting(s, i) for s in labels for i in labels]


def basis_pairs() -> list[tuple[tuple[PolLabel, PolLabel], tuple[PolLabel, PolLabel]]]:
    """The nine (signal basis, idler basis) combinations."""
    return [(sb, ib) for sb in BASES for ib in BASES]


def group_key(setting: MeasurementSetting) -> str:
    """Name of the basis-pair group a setting belongs to, e.g. 'D/A x H/V'."""
    return f"{basis_name(setting.signal)} x {basis_name(setting.idler)}"


# Jones calculus for the analyzer: light passes HWP, then QWP, then a PBS
# transmitting H.


def hwp_jones(angle: float) -> ComplexMatrix:
    c, s = np.cos(2 * angle), np.sin(2 * angle)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_jones(angle: float) -> ComplexMatrix:
    c, s = np.cos(angle), np.sin(angle)
    return np.array(
        [[c * c + 1j * s * s, (1 - 1j) * s * c], [(1 - 1j) * s * c, s * s + 1j * c * c]],
        dtype=complex,
    )


_WAVEPLATES: dict[PolLabel, tuple[float, float]] = {
    PolLabel.H: (0.0, 0.0),
    PolLabel.V: (np.pi / 4, 0.0),
    PolLabel.D: (np.pi / 8, 0.0),
    PolLabel.A: (7 * np.pi / 8, 0.0),
    PolLabel.R: (0.0, np.pi / 4),
    PolLabel.L: (0.0, 3 * np.pi / 4),
}


def waveplates_for(label: PolLabel) -> WaveplateSetting:
    """Analyzer angles projecting onto ``label`` at the transmitted PBS port."""
    hwp, qwp = _WAVEPLATES[PolLabel.parse(label)]
    return WaveplateSetting(hwp_angle=hwp, qwp_angle=qwp)


def analyzer_jones(setting: WaveplateSetting) -> ComplexMatrix:
    """Jones matrix of the waveplate train (QWP applied after the HWP)."""
    return qwp_jones(setting.qwp_angle) @ hwp_jones(setting.hwp_angle)


def analyzer_projector(setting: WaveplateSetting) -> ComplexMatrix:
    """Field-space projector W^dagger |H><H| W realized by the analyzer."""
    w = analyzer_jones(setting)
    return w.conj().T @ np.diag([1.0, 0.0]).astype(complex) @ w
