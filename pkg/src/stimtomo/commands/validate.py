"""Validate command: run the acceptance suite."""

from __future__ import annotations

import json

from rich.console import Console
from rich.table import Table

from stimtomo.commands.common import RunConfig, print_written
from stimtomo.errors import ConfigError
from stimtomo.experiments.acceptance import ValidationReport, run_validation, write_validation
from stimtomo.run_logger import log_stage


def validation_table(report: ValidationReport) -> Table:
    table = Table(title="Acceptance criteria", show_header=True, header_style="bold cyan")
    table.add_column("Criterion", style="green")
    table.add_column("Result")
    table.add_column("Detail", overflow="fold")
    for result in report.results:
        status = "[green]PASS[/green]" if result.passed else "[red]FAIL[/red]"
        table.add_row(result.name, status, json.dumps(result.detail, sort_keys=True))
    return table


def validate_command(
    console: Console,
    run: RunConfig,
    replicates: int,
    only: list[str] | None = None,
) -> ValidationReport:
    """Run the criteria, print a table and write ``validation.json``.

    Raises:
        ConfigError: If ``only`` names an unknown criterion
    """
    out_dir = run.prepare_output()
    try:
        report = run_validation(seed=run.rng_seed, replicates=replicates, only=only)
    except KeyError as e:
        raise ConfigError("only", str(e.args[0])) from e
    for result in report.results:
        log_stage("criterion", name=result.name, passed=result.passed)

    path = write_validation(report, out_dir)
    console.print(validation_table(report))
    if report.passed:
        console.print(f"[green]All {len(report.results)} criteria passed[/green]")
    else:
        names = ", ".join(r.name for r in report.failures())
        console.print(f"[red]Failed: {names}[/red]")
    print_written(console, [path])
    return report
