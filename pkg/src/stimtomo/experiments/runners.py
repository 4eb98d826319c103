"""Scripted QST-vs-SET experiments on the simulated source."""

from __future__ import annotations

import dataclasses
import logging
from collections import defaultdict
from collections.abc import Callable
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import curve_fit, minimize_scalar

from stimtomo.acquisition.simulate import simulate_qst_counts, simulate_set_run
from stimtomo.errors import DataError, ExperimentError, NumericalError
from stimtomo.experiments.models import SWEEP_KEYS, ExperimentReport, ExperimentSpec, PointResult
from stimtomo.quantum.core import (
    DensityMatrix,
    apply_idler_phase,
    fidelity,
    phase_hh_vv,
)
from stimtomo.reconstruction.fit import ReconstructionResult, state_metrics
from stimtomo.reconstruction.pipeline import reconstruct_qst, reconstruct_set
from stimtomo.source.model import (
    PdlConfig,
    SourceConfig,
    angle_averaged_state,
    angular_weight_at,
    coupling_envelope,
    pdl_for_ratios,
    pdl_ratio,
    true_state,
)

logger = logging.getLogger(__name__)

# Stream tags for stream_seed
_QST_TAG = 0
_SET_TAG = 1
_ENVELOPE_TAG = 2

PHASE_ALIGN_WINDOW = 0.5  # rad searched around the phase-difference estimate

DEFAULT_PDL_CASES: tuple[dict[str, Any], ...] = (
    {"label": "none"},
    {"label": "matched", "r_signal": 10.5, "r_idler": 10.5},
    {"label": "mismatched", "r_signal": 1.16, "r_idler": 0.064},
)


@dataclass
class PairOutcome:
    """QST and SET reconstructions of one source configuration."""

    qst: ReconstructionResult
    set: ReconstructionResult
    truth_set: DensityMatrix
    truth_qst: DensityMatrix


def stream_seed(base: int, index: int, replicate: int, tag: int) -> int:
    """Independent RNG seed for (point, replicate, stream)."""
    return int(np.random.SeedSequence([base, index, replicate, tag]).generate_state(1)[0])


def wrap_phase(phi: float) -> float:
    """Map to (-pi, pi]."""
    wrapped = float(np.angle(np.exp(1j * phi)))
    return np.pi if wrapped == -np.pi else wrapped


def phase_aligned_fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> tuple[float, float]:
    """Largest fidelity between rho and sigma under a local idler phase on sigma.

    Returns:
        (fidelity, phi) with phi the rotation applied to sigma
    """
    estimate = phase_hh_vv(sigma) - phase_hh_vv(rho)

    def negative(phi: float) -> float:
        return -fidelity(rho, apply_idler_phase(sigma, phi))

    search = minimize_scalar(
        negative,
        bounds=(estimate - PHASE_ALIGN_WINDOW, estimate + PHASE_ALIGN_WINDOW),
        method="bounded",
        options={"xatol": 1e-10},
    )
    candidates = [(-negative(estimate), estimate), (-float(search.fun), float(search.x))]
    candidates.append((fidelity(rho, sigma), 0.0))
    best, phi = max(candidates, key=lambda c: c[0])
    return float(best), wrap_phase(phi)


def _metrics(result: ReconstructionResult) -> dict[str, Any]:
    return {**result.metrics, "residual": result.residual, "converged": result.converged}


def _point_source(spec: ExperimentSpec, entry: dict[str, Any]) -> SourceConfig:
    source_fields = {f.name for f in dataclasses.fields(SourceConfig)}
    overrides = {k: v for k, v in entry.items() if k in source_fields}
    source = spec.source.replace(**overrides) if overrides else spec.source
    if "crystal_rotation_deg" in entry:
        source = source.with_crystal_rotation(float(entry["crystal_rotation_deg"]))
    return source


def _point_pdl(spec: ExperimentSpec, entry: dict[str, Any]) -> PdlConfig:
    if "pdl" in entry:
        return PdlConfig.from_dict(entry["pdl"])
    if "r_signal" in entry or "r_idler" in entry:
        return pdl_for_ratios(float(entry.get("r_signal", 1.0)), float(entry.get("r_idler", 1.0)))
    return spec.pdl


def reconstruct_pair(
    spec: ExperimentSpec,
    source: SourceConfig,
    theta_mrad: float,
    index: int,
    replicate: int,
    pdl: PdlConfig | None = None,
    qst_mode: str | None = None,
) -> PairOutcome:
    """Simulate and reconstruct both paths for one configuration.

    The SET seed sits at theta; the QST detector either integrates over the
    collected angles (``averaged``) or sees theta only (``pointlike``).
    """
    mode = qst_mode or spec.qst_mode
    truth_set = true_state(source, theta_mrad)
    truth_qst = angle_averaged_state(source) if mode == "averaged" else truth_set

    qst_cfg = dataclasses.replace(
        spec.qst, seed_rng=stream_seed(spec.seed, index, replicate, _QST_TAG)
    )
    qst_records = simulate_qst_counts(truth_qst, qst_cfg, theta_mrad)
    qst = reconstruct_qst(qst_records, spec.fit, settings=spec.settings, weights=spec.weights)

    set_cfg = dataclasses.replace(
        spec.set_acquisition, seed_rng=stream_seed(spec.seed, index, replicate, _SET_TAG)
    )
    run = simulate_set_run(source, theta_mrad, spec.distortion, pdl or spec.pdl, set_cfg)
    set_result = reconstruct_set(
        run.stim_records, run.seed_tomo_records, spec.fit, settings=spec.settings
    )
    return PairOutcome(qst=qst, set=set_result, truth_set=truth_set, truth_qst=truth_qst)


def _skipped(value: float | str, index: int, replicate: int, error: Exception) -> PointResult:
    logger.warning("Skipping point %s (replicate %d): %s", value, replicate, error)
    return PointResult(value=value, replicate=replicate, index=index, skip_reason=str(error))


def _median(values: list[float]) -> float | None:
    return float(np.median(values)) if values else None


def _median_extras(points: list[PointResult], keys: tuple[str, ...]) -> dict[str, float | None]:
    return {key: _median([p.extra[key] for p in points if key in p.extra]) for key in keys}


def _sweep_value(spec: ExperimentSpec, entry: dict[str, Any], index: int) -> float | str:
    key = SWEEP_KEYS.get(spec.name)
    if spec.name == "purity_sweep" and "decoherence" not in entry:
        key = "crystal_rotation_deg"
    if key is None or key not in entry:
        return float(index)
    value = entry[key]
    return value if isinstance(value, str) else float(value)


# Experiments


def run_bell_compare(spec: ExperimentSpec) -> ExperimentReport:
    """Both methods on one source: mutual fidelity, fidelity to Bell and phase discrepancy."""
    points = []
    for replicate in range(spec.replicates):
        try:
            outcome = reconstruct_pair(spec, spec.source, spec.theta_mrad, 0, replicate)
        except (DataError, NumericalError) as e:
            points.append(_skipped(spec.theta_mrad, 0, replicate, e))
            continue
        qst, set_ = outcome.qst, outcome.set
        aligned, phi = phase_aligned_fidelity(qst.rho, set_.rho)
        points.append(
            PointResult(
                value=spec.theta_mrad,
                replicate=replicate,
                qst=_metrics(qst),
                set=_metrics(set_),
                truth=state_metrics(outcome.truth_set),
                extra={
                    "mutual_fidelity": fidelity(qst.rho, set_.rho),
                    "phase_aligned_fidelity": aligned,
                    "alignment_phase": phi,
                    "fidelity_qst_bell": qst.metrics["fidelity_vs_bell"],
                    "fidelity_set_bell": set_.metrics["fidelity_vs_bell"],
                    "phase_difference": wrap_phase(
                        set_.metrics["phase_hh_vv"] - qst.metrics["phase_hh_vv"]
                    ),
                    "concurrence_difference": abs(
                        set_.metrics["concurrence"] - qst.metrics["concurrence"]
                    ),
                    "purity_difference": abs(set_.metrics["purity"] - qst.metrics["purity"]),
                    "truth_qst": state_metrics(outcome.truth_qst),
                },
            )
        )
    report = ExperimentReport(name=spec.name, spec=spec.to_dict(), points=points)
    report.summary = {
        "completed": len(report.complete_points()),
        **_median_extras(
            report.complete_points(),
            (
                "mutual_fidelity",
                "phase_aligned_fidelity",
                "fidelity_qst_bell",
                "fidelity_set_bell",
                "phase_difference",
                "concurrence_difference",
                "purity_difference",
            ),
        ),
    }
    return report


def _sweep_points(
    spec: ExperimentSpec,
    extra: Callable[[PairOutcome, SourceConfig], dict[str, Any]],
) -> list[PointResult]:
    points = []
    for index, entry in enumerate(spec.sweep):
        value = _sweep_value(spec, entry, index)
        theta = float(entry.get("theta_mrad", spec.theta_mrad))
        for replicate in range(spec.replicates):
            try:
                source = _point_source(spec, entry)
                outcome = reconstruct_pair(spec, source, theta, index, replicate)
            except (DataError, NumericalError) as e:
                points.append(_skipped(value, index, replicate, e))
                continue
            points.append(
                PointResult(
                    value=value,
                    replicate=replicate,
                    index=index,
                    qst=_metrics(outcome.qst),
                    set=_metrics(outcome.set),
                    truth=state_metrics(outcome.truth_set),
                    extra=extra(outcome, source),
                )
            )
    return points


def concurrence_curve(alpha_sq: float, decoherence: float = 1.0) -> float:
    """Concurrence of the alpha|HH> + beta|VV> family with coherence gamma."""
    return float(2.0 * decoherence * np.sqrt(alpha_sq * (1.0 - alpha_sq)))


def _per_point_medians(points: list[PointResult], key: str) -> dict[int, float]:
    grouped: dict[int, list[float]] = defaultdict(list)
    for p in points:
        grouped[p.index].append(p.extra[key])
    return {index: float(np.median(values)) for index, values in grouped.items()}


def run_concurrence_sweep(spec: ExperimentSpec) -> ExperimentReport:
    """QST and SET concurrence across alpha_sq, against the closed-form curve."""

    def extra(outcome: PairOutcome, source: SourceConfig) -> dict[str, Any]:
        theory = concurrence_curve(source.alpha_sq)
        qst_c = outcome.qst.metrics["concurrence"]
        set_c = outcome.set.metrics["concurrence"]
        return {
            "theory": theory,
            "qst_deviation": abs(qst_c - theory),
            "set_deviation": abs(set_c - theory),
            "qst_set_difference": abs(qst_c - set_c),
        }

    report = ExperimentReport(
        name=spec.name, spec=spec.to_dict(), points=_sweep_points(spec, extra)
    )
    done = report.complete_points()
    qst_medians = _per_point_medians(done, "qst_deviation")
    set_medians = _per_point_medians(done, "set_deviation")
    report.summary = {
        "completed": len(done),
        "max_abs_deviation_qst": max((p.extra["qst_deviation"] for p in done), default=None),
        "max_abs_deviation_set": max((p.extra["set_deviation"] for p in done), default=None),
        "max_median_deviation_qst": max(qst_medians.values(), default=None),
        "max_median_deviation_set": max(set_medians.values(), default=None),
        "max_qst_set_difference": max(
            (p.extra["qst_set_difference"] for p in done), default=None
        ),
    }
    grid = np.linspace(0.0, 1.0, 101)
    report.curves = {
        "theory": {
            "x": [float(x) for x in grid],
            "y": [concurrence_curve(float(x)) for x in grid],
        }
    }
    return report


def run_purity_sweep(spec: ExperimentSpec) -> ExperimentReport:
    """SET purity against QST purity as the pair coherence degrades."""

    def extra(outcome: PairOutcome, source: SourceConfig) -> dict[str, Any]:
        return {
            "decoherence": source.decoherence,
            "purity_difference": outcome.set.metrics["purity"] - outcome.qst.metrics["purity"],
        }

    report = ExperimentReport(
        name=spec.name, spec=spec.to_dict(), points=_sweep_points(spec, extra)
    )
    done = report.complete_points()
    diffs = [abs(p.extra["purity_difference"]) for p in done]
    report.summary = {
        "completed": len(done),
        "max_abs_purity_difference": max(diffs, default=None),
        "median_abs_purity_difference": _median(diffs),
    }
    report.curves = {"identity": {"x": [0.25, 1.0], "y": [0.25, 1.0]}}
    return report


def _gaussian(theta: np.ndarray, amplitude: float, width: float, center: float) -> np.ndarray:
    return amplitude * np.exp(-((theta - center) ** 2) / (2.0 * width**2))


def fit_envelope(theta: np.ndarray, envelope: np.ndarray) -> tuple[float, float] | None:
    """Gaussian (width, center) of the stimulated-coupling envelope, or None if the fit fails."""
    spread = float(np.ptp(theta)) / 2.0 or 1.0
    try:
        popt, _ = curve_fit(
            _gaussian, theta, envelope, p0=(float(np.max(envelope)), spread, 0.0), maxfev=10000
        )
    except (RuntimeError, ValueError) as e:
        logger.warning("Envelope fit failed: %s", e)
        return None
    return abs(float(popt[1])), float(popt[2])


def run_angle_scan(spec: ExperimentSpec) -> ExperimentReport:
    """SET phase and stimulated coupling versus seed angle; fits the phase slope.

    Raises:
        ExperimentError: If fewer than three angles reconstruct
    """
    points = []
    for index, entry in enumerate(spec.sweep):
        theta = float(entry.get("theta_mrad", spec.theta_mrad))
        for replicate in range(spec.replicates):
            try:
                source = _point_source(spec, entry)
                outcome = reconstruct_pair(
                    spec, source, theta, index, replicate, qst_mode="pointlike"
                )
            except (DataError, NumericalError) as e:
                points.append(_skipped(theta, index, replicate, e))
                continue
            rng = np.random.default_rng(stream_seed(spec.seed, index, replicate, _ENVELOPE_TAG))
            noise = spec.set_acquisition.intensity_noise_rel
            envelope = float(coupling_envelope(source, theta)) * (
                1.0 + noise * rng.standard_normal() if noise else 1.0
            )
            points.append(
                PointResult(
                    value=theta,
                    replicate=replicate,
                    index=index,
                    qst=_metrics(outcome.qst),
                    set=_metrics(outcome.set),
                    truth=state_metrics(outcome.truth_set),
                    extra={"phase_set": outcome.set.metrics["phase_hh_vv"], "envelope": envelope},
                )
            )
    report = ExperimentReport(name=spec.name, spec=spec.to_dict(), points=points)

    slopes, intercepts, widths = [], [], []
    for replicate in range(spec.replicates):
        done = [p for p in report.complete_points() if p.replicate == replicate]
        if len(done) < 3:
            raise ExperimentError(
                f"angle scan needs at least 3 reconstructed angles, got {len(done)}"
            )
        theta = np.array([float(p.value) for p in done])
        phase = np.unwrap([p.extra["phase_set"] for p in done])
        envelope = np.array([p.extra["envelope"] for p in done])
        weights = np.sqrt(np.clip(envelope, 0.0, None)) if spec.weighted else None
        slope, intercept = np.polyfit(theta, phase, 1, w=weights)
        slopes.append(float(slope))
        intercepts.append(float(intercept))
        fitted = fit_envelope(theta, envelope)
        if fitted is not None:
            widths.append(fitted[0])

    source = spec.source
    slope = float(np.median(slopes))
    intercept = float(np.median(intercepts))
    thetas = sorted({float(p.value) for p in report.complete_points()})
    report.summary = {
        "completed": len(report.complete_points()),
        "slope": slope,
        "intercept": intercept,
        "slopes": slopes,
        "injected_slope": source.phase_slope,
        "envelope_width": _median(widths),
        "envelope_width_expected": source.sigma_eff_mrad,
        "weighted": spec.weighted,
    }
    report.curves = {
        "phase_fit": {"x": thetas, "y": [intercept + slope * t for t in thetas]},
        "envelope_model": {
            "x": thetas,
            "y": [float(coupling_envelope(source, t)) for t in thetas],
        },
    }
    return report


def run_pdl_demo(spec: ExperimentSpec) -> ExperimentReport:
    """SET concurrence under matched and mismatched polarization-dependent loss."""
    cases = spec.sweep or [dict(case) for case in DEFAULT_PDL_CASES]
    points = []
    for index, entry in enumerate(cases):
        label = str(entry.get("label", f"case{index}"))
        theta = float(entry.get("theta_mrad", spec.theta_mrad))
        for replicate in range(spec.replicates):
            try:
                source = _point_source(spec, entry)
                pdl = _point_pdl(spec, entry)
                ratios = pdl_ratio(source, pdl, theta)
                outcome = reconstruct_pair(spec, source, theta, index, replicate, pdl=pdl)
            except (DataError, NumericalError) as e:
                points.append(_skipped(label, index, replicate, e))
                continue
            truth = state_metrics(outcome.truth_set)
            points.append(
                PointResult(
                    value=label,
                    replicate=replicate,
                    index=index,
                    qst=_metrics(outcome.qst),
                    set=_metrics(outcome.set),
                    truth=truth,
                    extra={
                        "r_signal": ratios.r_signal,
                        "r_idler": ratios.r_idler,
                        "pdl": pdl.to_dict(),
                        "set_concurrence": outcome.set.metrics["concurrence"],
                        "qst_concurrence": outcome.qst.metrics["concurrence"],
                        "truth_concurrence": truth["concurrence"],
                        "concurrence_gap": truth["concurrence"]
                        - outcome.set.metrics["concurrence"],
                    },
                )
            )
    report = ExperimentReport(name=spec.name, spec=spec.to_dict(), points=points)
    by_label: dict[str, list[PointResult]] = defaultdict(list)
    for p in report.complete_points():
        by_label[str(p.value)].append(p)
    report.summary = {
        "completed": len(report.complete_points()),
        "cases": {
            label: _median_extras(
                group,
                (
                    "r_signal",
                    "r_idler",
                    "set_concurrence",
                    "qst_concurrence",
                    "truth_concurrence",
                    "concurrence_gap",
                ),
            )
            for label, group in by_label.items()
        },
    }
    return report


def trapezoid_weights(grid: np.ndarray) -> np.ndarray:
    """Trapezoid-rule weights of a sorted grid."""
    if len(grid) == 1:
        return np.ones(1)
    steps = np.diff(grid)
    weights = np.zeros(len(grid))
    weights[:-1] += steps / 2.0
    weights[1:] += steps / 2.0
    return weights


def run_angle_average(spec: ExperimentSpec) -> ExperimentReport:
    """Angle-weighted average of SET reconstructions compared with angle-integrated QST."""
    grid = np.sort(np.asarray(spec.grid if spec.grid else np.linspace(-5.0, 5.0, 33), float))
    source = spec.source
    weights = trapezoid_weights(grid) * angular_weight_at(source, grid)
    if weights.sum() <= 0:
        raise ExperimentError("angle grid lies outside the collection half-width")
    weights = weights / weights.sum()
    reference = int(np.argmin(np.abs(grid - spec.theta_mrad)))

    points = []
    for replicate in range(spec.replicates):
        try:
            qst_cfg = dataclasses.replace(
                spec.qst, seed_rng=stream_seed(spec.seed, 0, replicate, _QST_TAG)
            )
            qst_records = simulate_qst_counts(angle_averaged_state(source), qst_cfg)
            qst = reconstruct_qst(
                qst_records, spec.fit, settings=spec.settings, weights=spec.weights
            )
            total = np.zeros((4, 4), dtype=complex)
            states = []
            for index, (theta, weight) in enumerate(zip(grid, weights, strict=True)):
                set_cfg = dataclasses.replace(
                    spec.set_acquisition,
                    seed_rng=stream_seed(spec.seed, index, replicate, _SET_TAG),
                )
                run = simulate_set_run(source, float(theta), spec.distortion, spec.pdl, set_cfg)
                result = reconstruct_set(
                    run.stim_records, run.seed_tomo_records, spec.fit, settings=spec.settings
                )
                states.append(result.rho)
                total += weight * result.rho.matrix
        except (DataError, NumericalError) as e:
            points.append(_skipped(float(len(grid)), 0, replicate, e))
            continue
        averaged = DensityMatrix.from_unnormalized(total)
        points.append(
            PointResult(
                value=float(len(grid)),
                replicate=replicate,
                qst=_metrics(qst),
                set=state_metrics(averaged),
                truth=state_metrics(angle_averaged_state(source)),
                extra={
                    "fidelity_avg_set_qst": fidelity(averaged, qst.rho),
                    "fidelity_avg_to_single_angle": fidelity(averaged, states[reference]),
                    "single_angle_mrad": float(grid[reference]),
                    "phases_set": [phase_hh_vv(rho) for rho in states],
                },
            )
        )
    report = ExperimentReport(name=spec.name, spec=spec.to_dict(), points=points)
    report.summary = {
        "completed": len(report.complete_points()),
        "grid_points": len(grid),
        **_median_extras(
            report.complete_points(), ("fidelity_avg_set_qst", "fidelity_avg_to_single_angle")
        ),
    }
    report.curves = {"weights": {"x": [float(t) for t in grid], "y": [float(w) for w in weights]}}
    return report


RUNNERS: dict[str, Callable[[ExperimentSpec], ExperimentReport]] = {
    "bell_compare": run_bell_compare,
    "concurrence_sweep": run_concurrence_sweep,
    "purity_sweep": run_purity_sweep,
    "angle_scan": run_angle_scan,
    "pdl_demo": run_pdl_demo,
    "angle_average": run_angle_average,
}


def run_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Dispatch on ``spec.name``."""
    runner = RUNNERS.get(spec.name)
    if runner is None:
        raise ExperimentError(f"unknown experiment {spec.name!r}")
    logger.info("Running experiment %s (%d replicate(s))", spec.name, spec.replicates)
    return runner(spec)
