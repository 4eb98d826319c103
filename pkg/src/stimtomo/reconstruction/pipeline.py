"""End-to-end QST and SET reconstruction from measurement records."""

from __future__ import annotations

import logging
from collections.abc import Iterable

from stimtomo.acquisition.records import MeasurementRecord
from stimtomo.config import require
from stimtomo.quantum.core import ComplexMatrix
from stimtomo.quantum.polarization import (
    measurement_settings,
    pair_operator,
    rotated_pair_operator,
)
from stimtomo.reconstruction.fit import (
    FitOptions,
    ReconstructionResult,
    fit_least_squares,
    group_normalizers,
    inverse_variance_weights,
)
from stimtomo.reconstruction.probabilities import (
    ProbabilityTable,
    qst_probabilities,
    seed_states,
    set_ideal_probabilities,
    set_renormalize,
)

logger = logging.getLogger(__name__)

WEIGHT_MODES = ("none", "inverse-variance")
OPERATOR_MODES = ("rotated", "naive")


def _select(probs: ProbabilityTable, settings: int) -> ProbabilityTable:
    require(settings in (16, 36), "settings", "must be 16 or 36")
    if settings == 36:
        return probs
    return probs.subset(measurement_settings(16))


def reconstruct_qst(
    records: Iterable[MeasurementRecord],
    opts: FitOptions | None = None,
    settings: int = 36,
    weights: str = "none",
) -> ReconstructionResult:
    """Fit coincidence counts with the ideal pair operators."""
    require(weights in WEIGHT_MODES, "weights", f"must be one of {', '.join(WEIGHT_MODES)}")
    probs = _select(qst_probabilities(records), settings)
    operators = [pair_operator(s) for s in probs.settings()]
    w = inverse_variance_weights(probs) if weights == "inverse-variance" else None
    logger.debug("QST fit over %d settings (weights=%s)", len(probs), weights)
    return fit_least_squares(probs, operators, opts, weights=w, operator_kind="ideal")


def set_operators(
    probs: ProbabilityTable,
    seed_tomo_records: Iterable[MeasurementRecord],
    mode: str = "rotated",
) -> list[ComplexMatrix]:
    """Measurement operators for SET probabilities.

    ``rotated`` uses each seed's reconstructed state; ``naive`` assumes the
    nominal seed polarizations.
    """
    require(mode in OPERATOR_MODES, "operators", f"must be one of {', '.join(OPERATOR_MODES)}")
    if mode == "naive":
        return [pair_operator(s) for s in probs.settings()]
    seeds = seed_states(seed_tomo_records)
    return [rotated_pair_operator(seeds[s.signal], s.idler) for s in probs.settings()]


def reconstruct_set(
    stim_records: Iterable[MeasurementRecord],
    seed_tomo_records: Iterable[MeasurementRecord],
    opts: FitOptions | None = None,
    settings: int = 36,
    operators: str = "rotated",
    weights: str = "none",
) -> ReconstructionResult:
    """Fit stimulated intensities with rotated (or naive) operators.

    The data are renormalized over complete seed/analyzer groups, so the
    model is normalized by the sum of the same group's operators. A
    16-setting fit keeps the normalizers of the full groups.
    """
    require(weights == "none", "weights", "inverse-variance weighting applies to QST counts only")
    full = set_renormalize(set_ideal_probabilities(stim_records))
    probs = _select(full, settings)
    full_ops = dict(
        zip(full.settings(), set_operators(full, seed_tomo_records, operators), strict=True)
    )
    ops = [full_ops[s] for s in probs.settings()]
    group = group_normalizers(full.settings(), list(full_ops.values()))
    normalizers = None
    if group is not None:
        by_setting = dict(zip(full.settings(), group, strict=True))
        normalizers = [by_setting[s] for s in probs.settings()]
    logger.debug(
        "SET fit over %d settings (operators=%s, group-normalized=%s)",
        len(probs),
        operators,
        normalizers is not None,
    )
    return fit_least_squares(
        probs, ops, opts, normalizers=normalizers, operator_kind=operators
    )
