"""Command-line interface for stimtomo."""

from __future__ import annotations

import logging
from collections.abc import Callable
from pathlib import Path
from typing import Any

import typer
from rich.console import Console

from stimtomo import __version__
from stimtomo.commands.common import RunConfig, print_error
from stimtomo.commands.config import config_command
from stimtomo.commands.experiment import experiment_command
from stimtomo.commands.reconstruct import reconstruct_command
from stimtomo.commands.simulate import simulate_command
from stimtomo.commands.validate import validate_command
from stimtomo.config import StimtomoConfig, get_config_manager
from stimtomo.errors import ErrorType, build_error_context
from stimtomo.experiments.acceptance import DEFAULT_REPLICATES
from stimtomo.experiments.reports import REPORT_FORMATS
from stimtomo.reconstruction.fit import FitOptions
from stimtomo.run_logger import create_run_logger, log_run_end, log_run_start

app = typer.Typer(
    name="stimtomo",
    help="Simulated quantum state tomography (QST) and stimulated emission tomography (SET).",
    add_completion=False,
    no_args_is_help=True,
)

console = Console()
err_console = Console(stderr=True)


def _version_callback(value: bool) -> None:
    if value:
        console.print(f"stimtomo version {__version__}")
        raise typer.Exit()


@app.callback()
def main(
    version: bool = typer.Option(
        False,
        "--version",
        "-v",
        help="Show version and exit",
        callback=_version_callback,
        is_eager=True,
    ),
    verbose: bool = typer.Option(False, "--verbose", help="Debug logging to stderr"),
) -> None:
    """Simulate, reconstruct and compare two-photon polarization states."""
    if verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(name)s - %(levelname)s - %(message)s")


def _run(command: str, args: dict[str, Any], action: Callable[[StimtomoConfig], int]) -> None:
    """Run ``action`` with run logging and map errors to exit codes.

    Exit codes: 0 success, 2 usage or config, 3 data, 4 numerical.
    Unclassified exceptions are bugs and propagate.
    """
    config_manager = get_config_manager()
    exit_code = 0
    try:
        config = config_manager.load_config()
        create_run_logger(log_level=config.run_log_level, enabled=config.run_logging)
        log_run_start(command, {k: v for k, v in args.items() if v is not None})
        exit_code = action(config)
    except Exception as e:
        try:
            context = build_error_context(e)
        except TypeError:
            log_run_end(1)
            raise e from None
        print_error(err_console, context)
        exit_code = context.error_type.exit_code
    log_run_end(exit_code)
    if exit_code:
        raise typer.Exit(exit_code)


def _formats(values: list[str]) -> tuple[str, ...]:
    """Accept repeated ``--format`` flags and comma-separated lists."""
    formats: list[str] = []
    for value in values:
        formats.extend(part.strip() for part in value.split(",") if part.strip())
    return tuple(dict.fromkeys(formats))


@app.command()
def simulate(
    source: Path = typer.Option(..., "--source", help="Source config JSON"),
    qst: bool = typer.Option(False, "--qst", help="Write QST coincidence records"),
    set_: bool = typer.Option(False, "--set", help="Write SET intensity records"),
    theta: float = typer.Option(0.0, "--theta", help="SET seed angle (mrad)"),
    seconds: float | None = typer.Option(
        None, "--seconds", help="QST integration time per setting"
    ),
    seed: int | None = typer.Option(None, "--seed", help="RNG seed"),
    out: Path = typer.Option(Path("."), "--out", help="Output directory"),
) -> None:
    """Simulate measurement records for a source (both pipelines unless one is chosen)."""

    def action(config: StimtomoConfig) -> int:
        run = RunConfig(
            command="simulate",
            inputs={"source": source},
            out_dir=out,
            rng_seed=config.rng_seed if seed is None else seed,
        )
        simulate_command(console, run, qst=qst, set_=set_, theta_mrad=theta, seconds=seconds)
        return 0

    _run(
        "simulate",
        {
            "source": source,
            "qst": qst,
            "set": set_,
            "theta": theta,
            "seconds": seconds,
            "seed": seed,
        },
        action,
    )


@app.command()
def reconstruct(
    qst: Path | None = typer.Option(None, "--qst", help="QST records CSV"),
    set_: Path | None = typer.Option(None, "--set", help="SET records CSV"),
    seed_tomo: Path | None = typer.Option(
        None, "--seed-tomo", help="Seed tomography CSV (defaults to records in the SET file)"
    ),
    weights: str | None = typer.Option(None, "--weights", help="none | inverse-variance (QST)"),
    settings: int | None = typer.Option(None, "--settings", help="16 or 36 settings"),
    operators: str = typer.Option("rotated", "--operators", help="SET operators: rotated | naive"),
    restarts: int | None = typer.Option(None, "--restarts", help="Random fit restarts"),
    seed: int | None = typer.Option(None, "--seed", help="Seed for random fit restarts"),
    out: Path = typer.Option(Path("."), "--out", help="Output directory"),
) -> None:
    """Reconstruct density matrices from records CSVs."""

    def action(config: StimtomoConfig) -> int:
        inputs = {
            name: path
            for name, path in (("qst", qst), ("set", set_), ("seed_tomo", seed_tomo))
            if path is not None
        }
        rng_seed = config.rng_seed if seed is None else seed
        run = RunConfig(command="reconstruct", inputs=inputs, out_dir=out, rng_seed=rng_seed)
        fit = FitOptions(
            restarts=config.restarts if restarts is None else restarts, seed=rng_seed
        )
        reconstruct_command(
            console,
            run,
            settings=config.settings if settings is None else settings,
            weights=config.weights if weights is None else weights,
            operators=operators,
            fit=fit,
        )
        return 0

    _run(
        "reconstruct",
        {"qst": qst, "set": set_, "seed_tomo": seed_tomo, "weights": weights, "settings": settings},
        action,
    )


@app.command()
def experiment(
    spec: Path = typer.Argument(..., help="Experiment spec JSON"),
    slope: float | None = typer.Option(None, "--slope", help="Override the phase slope (rad/mrad)"),
    replicates: int | None = typer.Option(None, "--replicates", help="Override replicates"),
    seed: int | None = typer.Option(None, "--seed", help="RNG seed"),
    out: Path = typer.Option(Path("."), "--out", help="Output directory"),
    formats: list[str] = typer.Option(
        list(REPORT_FORMATS), "--format", help="Report formats: json, csv, svg"
    ),
) -> None:
    """Run a scripted QST-vs-SET experiment and write its report."""

    def action(config: StimtomoConfig) -> int:
        run = RunConfig(
            command="experiment",
            inputs={"spec": spec},
            out_dir=out,
            rng_seed=config.rng_seed if seed is None else seed,
            formats=_formats(formats),
        )
        experiment_command(console, run, slope=slope, replicates=replicates, seed=seed)
        return 0

    _run("experiment", {"spec": spec, "slope": slope, "seed": seed}, action)


@app.command()
def validate(
    seed: int | None = typer.Option(None, "--seed", help="RNG seed"),
    out: Path = typer.Option(Path("."), "--out", help="Output directory"),
    replicates: int = typer.Option(
        DEFAULT_REPLICATES, "--replicates", help="Noisy replicates per point"
    ),
    only: list[str] | None = typer.Option(None, "--only", help="Run only the named criteria"),
) -> None:
    """Run the acceptance suite; exits 0 only if every criterion passes."""

    def action(config: StimtomoConfig) -> int:
        run = RunConfig(
            command="validate", out_dir=out, rng_seed=config.rng_seed if seed is None else seed
        )
        report = validate_command(console, run, replicates=replicates, only=only or None)
        return 0 if report.passed else ErrorType.NUMERICAL.exit_code

    _run("validate", {"seed": seed, "replicates": replicates}, action)


@app.command("config")
def config_(
    args: list[str] | None = typer.Argument(None, help="show | set <key> <value>"),
) -> None:
    """Show or modify user defaults."""

    def action(config: StimtomoConfig) -> int:
        config_command(console, get_config_manager(), args)
        return 0

    _run("config", {"args": " ".join(args) if args else None}, action)


if __name__ == "__main__":
    app()
