"""Density matrices, entanglement measures and the polarization measurement model."""

from stimtomo.quantum.core import (
    DensityMatrix,
    bell_state,
    concurrence,
    fidelity,
    phase_hh_vv,
    purity,
    trace_distance,
)
from stimtomo.quantum.polarization import MeasurementSetting, PolLabel

__all__ = [
    "DensityMatrix",
    "MeasurementSetting",
    "PolLabel",
    "bell_state",
    "concurrence",
    "fidelity",
    "phase_hh_vv",
    "purity",
    "trace_distance",
]
