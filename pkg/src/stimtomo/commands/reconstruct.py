"""Reconstruct command: fit density matrices from records CSVs."""

from __future__ import annotations

from collections.abc import Callable
from pathlib import Path
from typing import Any

from rich.console import Console

from stimtomo.acquisition.records import RecordKind, filter_kind, read_records
from stimtomo.commands.common import RunConfig, metrics_table, print_written
from stimtomo.config import require
from stimtomo.errors import NonConvergenceError
from stimtomo.experiments.reports import dump_json
from stimtomo.quantum.core import fidelity
from stimtomo.reconstruction.fit import FitOptions, ReconstructionResult
from stimtomo.reconstruction.pipeline import reconstruct_qst, reconstruct_set
from stimtomo.run_logger import log_stage

QST_RESULT_FILE = "reconstruction_qst.json"
SET_RESULT_FILE = "reconstruction_set.json"


def _write_result(
    result: ReconstructionResult, path: Path, inputs: dict[str, str], extra: dict[str, Any]
) -> Path:
    return dump_json({**result.to_dict(), "inputs": inputs, **extra}, path)


def _reconstruct(
    label: str,
    run_fit: Callable[[], ReconstructionResult],
    path: Path,
    inputs: dict[str, str],
    extra: dict[str, Any],
) -> ReconstructionResult:
    """Run one fit; a non-converged partial result is written before re-raising."""
    try:
        result = run_fit()
    except NonConvergenceError as e:
        if e.result is not None:
            _write_result(e.result, path, inputs, extra)
            log_stage(f"{label}_fit", converged=False, residual=e.result.residual)
        raise
    _write_result(result, path, inputs, extra)
    log_stage(
        f"{label}_fit",
        converged=result.converged,
        residual=f"{result.residual:.3e}",
        iterations=result.iterations,
    )
    return result


def reconstruct_command(
    console: Console,
    run: RunConfig,
    settings: int = 36,
    weights: str = "none",
    operators: str = "rotated",
    fit: FitOptions | None = None,
) -> list[Path]:
    """Reconstruct from ``run.inputs`` (``qst``, and/or ``set`` with ``seed_tomo``).

    Seed-tomography records may sit in their own file or in the SET file.

    Raises:
        ConfigError: If neither a QST nor a SET input is given
        DataError: If the records violate the schema or are incomplete
        NonConvergenceError: After writing the partial result
    """
    require("qst" in run.inputs or "set" in run.inputs, "input", "give --qst and/or --set")
    fit = fit or FitOptions()
    out_dir = run.prepare_output()
    written: list[Path] = []
    rows: dict[str, dict[str, Any]] = {}
    results: dict[str, ReconstructionResult] = {}

    if "qst" in run.inputs:
        records = filter_kind(read_records(run.inputs["qst"]), RecordKind.QST_COUNT)
        log_stage("qst_records", count=len(records))
        path = out_dir / QST_RESULT_FILE
        results["qst"] = _reconstruct(
            "qst",
            lambda: reconstruct_qst(records, fit, settings=settings, weights=weights),
            path,
            {"qst": str(run.inputs["qst"])},
            {"settings": settings, "weights": weights},
        )
        written.append(path)

    if "set" in run.inputs:
        set_records = read_records(run.inputs["set"])
        tomo_source = (
            read_records(run.inputs["seed_tomo"]) if "seed_tomo" in run.inputs else set_records
        )
        stim = filter_kind(set_records, RecordKind.SET_INTENSITY, RecordKind.SEED_INTENSITY)
        seed_tomo = filter_kind(tomo_source, RecordKind.SEED_TOMO)
        log_stage("set_records", stimulated=len(stim), seed_tomo=len(seed_tomo))
        path = out_dir / SET_RESULT_FILE
        inputs = {k: str(v) for k, v in run.inputs.items() if k in ("set", "seed_tomo")}
        results["set"] = _reconstruct(
            "set",
            lambda: reconstruct_set(stim, seed_tomo, fit, settings=settings, operators=operators),
            path,
            inputs,
            {"settings": settings},
        )
        written.append(path)

    for name, result in results.items():
        rows[name.upper()] = result.metrics
    console.print(metrics_table("Reconstruction", rows))
    if len(results) == 2:
        console.print(
            f"Mutual fidelity (QST, SET): {fidelity(results['qst'].rho, results['set'].rho):.6f}"
        )
    print_written(console, written)
    return written
