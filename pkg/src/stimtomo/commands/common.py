"""Shared pieces of the stimtomo commands."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from stimtomo.errors import ConfigError, ErrorContext, InputFileError
from stimtomo.experiments.reports import REPORT_FORMATS
from stimtomo.run_logger import log_stage

COMMANDS = ("simulate", "reconstruct", "experiment", "validate")


@dataclass
class RunConfig:
    """Resolved command-line inputs of one run."""

    command: str
    inputs: dict[str, Path] = field(default_factory=dict)
    out_dir: Path = Path(".")
    rng_seed: int = 42
    formats: tuple[str, ...] = ("json",)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError("command", f"unknown command {self.command!r}")
        unknown = [fmt for fmt in self.formats if fmt not in REPORT_FORMATS]
        if unknown:
            raise ConfigError(
                "format", f"unknown format(s) {', '.join(unknown)}; use {', '.join(REPORT_FORMATS)}"
            )
        if self.rng_seed < 0:
            raise ConfigError("seed", "must be nonnegative")
        for name, path in self.inputs.items():
            if not Path(path).exists():
                raise InputFileError(path, f"{name} file not found")

    def prepare_output(self) -> Path:
        """Create the output directory.

        Raises:
            ConfigError: If the directory cannot be created
        """
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError("out", f"cannot create {self.out_dir}: {e}") from e
        if not self.out_dir.is_dir():
            raise ConfigError("out", f"{self.out_dir} is not a directory")
        log_stage("run", **self.to_log_fields())
        return self.out_dir

    def to_log_fields(self) -> dict[str, Any]:
        fields: dict[str, Any] = {f"in_{k}": str(v) for k, v in self.inputs.items()}
        fields.update(out=str(self.out_dir), seed=self.rng_seed, formats=",".join(self.formats))
        return fields


def metrics_table(title: str, rows: dict[str, dict[str, Any]]) -> Table:
    """Purity, concurrence, fidelity vs Bell and phase for each named state."""
    table = Table(title=title, show_header=True, header_style="bold cyan")
    table.add_column("State", style="green")
    for column in ("Purity", "Concurrence", "Fidelity vs Bell", "Phase HH-VV (rad)"):
        table.add_column(column, justify="right")
    for name, metrics in rows.items():
        table.add_row(
            name,
            f"{metrics['purity']:.6f}",
            f"{metrics['concurrence']:.6f}",
            f"{metrics['fidelity_vs_bell']:.6f}",
            f"{metrics['phase_hh_vv']:+.6f}",
        )
    return table


def print_error(console: Console, context: ErrorContext) -> None:
    """Field-level error panel on the console."""
    lines = [context.message]
    if context.path is not None:
        lines.append(f"[dim]path:[/dim] {context.path}")
    if context.row is not None:
        lines.append(f"[dim]row:[/dim] {context.row}")
    if context.field is not None:
        lines.append(f"[dim]field:[/dim] {context.field}")
    console.print(
        Panel(
            "\n".join(lines),
            title=f"[bold red]{context.error_type.name.title()} error[/bold red]",
            border_style="red",
        )
    )


def print_written(console: Console, paths: list[Path]) -> None:
    for path in paths:
        console.print(f"[dim]wrote[/dim] {path}")
