"""Experiment command: run a scripted QST-vs-SET comparison from a spec file."""

from __future__ import annotations

from pathlib import Path
from typing import Any

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from stimtomo.commands.common import RunConfig, print_written
from stimtomo.experiments.models import ExperimentReport, load_experiment_spec
from stimtomo.experiments.reports import write_report
from stimtomo.experiments.runners import run_experiment
from stimtomo.run_logger import log_stage


def _format(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    return str(value)


def summary_table(report: ExperimentReport) -> Table:
    table = Table(show_header=True, header_style="bold cyan")
    table.add_column("Summary", style="green")
    table.add_column("Value", justify="right")
    for key, value in report.summary.items():
        if isinstance(value, dict):
            for sub, sub_value in value.items():
                if isinstance(sub_value, dict):
                    for leaf, leaf_value in sub_value.items():
                        table.add_row(f"{key}.{sub}.{leaf}", _format(leaf_value))
                else:
                    table.add_row(f"{key}.{sub}", _format(sub_value))
        else:
            table.add_row(key, _format(value))
    return table


def experiment_command(
    console: Console,
    run: RunConfig,
    slope: float | None = None,
    replicates: int | None = None,
    seed: int | None = None,
) -> list[Path]:
    """Run the experiment in ``run.inputs["spec"]`` and write its report.

    The spec's own seed is kept unless ``seed`` is given. ``slope`` replaces
    the source's phase slope.

    Raises:
        ExperimentError: For an unknown experiment or an unrunnable spec
    """
    spec = load_experiment_spec(run.inputs["spec"])
    overrides: dict[str, Any] = {}
    if seed is not None:
        overrides["seed"] = seed
    if slope is not None:
        overrides["source"] = spec.source.replace(phase_slope=slope)
    if replicates is not None:
        overrides["replicates"] = replicates
    spec = spec.with_overrides(**overrides)

    out_dir = run.prepare_output()
    log_stage(
        "experiment",
        name=spec.name,
        points=len(spec.sweep),
        replicates=spec.replicates,
        seed=spec.seed,
        seed_power_mw=spec.source.seed_power_mw,
        stimulated_power_uw=spec.source.stimulated_power_uw,
    )
    report = run_experiment(spec)
    skipped = len(report.points) - len(report.complete_points())
    log_stage("report", completed=len(report.complete_points()), skipped=skipped)

    written = write_report(report, out_dir, run.formats)
    console.print(
        Panel(summary_table(report), title=f"[bold]{report.name}[/bold]", border_style="blue")
    )
    if skipped:
        console.print(f"[yellow]{skipped} point(s) skipped; see skip_reason in the report[/yellow]")
    print_written(console, written)
    return written
