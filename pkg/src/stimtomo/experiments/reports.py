"""Report writers: full JSON, flat per-point CSV and SVG figures."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from stimtomo.experiments.models import ExperimentReport  # noqa: E402

logger = logging.getLogger(__name__)

REPORT_FORMATS = ("json", "csv", "svg")
PLOTTED_EXPERIMENTS = ("concurrence_sweep", "purity_sweep", "angle_scan")

CSV_COLUMNS = (
    "value",
    "replicate",
    "qst_purity",
    "qst_concurrence",
    "qst_fidelity_vs_bell",
    "qst_phase_hh_vv",
    "set_purity",
    "set_concurrence",
    "set_fidelity_vs_bell",
    "set_phase_hh_vv",
    "truth_purity",
    "truth_concurrence",
    "truth_phase_hh_vv",
    "skip_reason",
)

# Fixed salt and no date keep SVG output byte-identical across runs.
plt.rcParams["svg.hashsalt"] = "stimtomo"


def dump_json(data: Any, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_report_json(report: ExperimentReport, path: Path) -> Path:
    return dump_json(report.to_dict(), path)


def _cell(block: dict[str, Any] | None, key: str) -> str:
    if not block or block.get(key) is None:
        return ""
    return f"{block[key]:.9g}"


def write_report_csv(report: ExperimentReport, path: Path) -> Path:
    """One row per point and replicate, metrics flattened."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for point in report.points:
            row = {
                "value": point.value if isinstance(point.value, str) else f"{point.value:.9g}",
                "replicate": point.replicate,
                "skip_reason": point.skip_reason or "",
            }
            for prefix, block in (("qst", point.qst), ("set", point.set), ("truth", point.truth)):
                for key in ("purity", "concurrence", "fidelity_vs_bell", "phase_hh_vv"):
                    column = f"{prefix}_{key}"
                    if column in CSV_COLUMNS:
                        row[column] = _cell(block, key)
            writer.writerow(row)
    return path


def _series(report: ExperimentReport, block: str, key: str) -> tuple[list[float], list[float]]:
    xs, ys = [], []
    for point in report.complete_points():
        metrics = getattr(point, block)
        xs.append(float(point.value))
        ys.append(float(metrics[key]))
    return xs, ys


def _plot_concurrence(report: ExperimentReport, ax: Any) -> None:
    for block, marker in (("qst", "o"), ("set", "s")):
        xs, ys = _series(report, block, "concurrence")
        ax.plot(xs, ys, marker, label=block.upper(), fillstyle="none")
    theory = report.curves.get("theory")
    if theory:
        ax.plot(theory["x"], theory["y"], "-", color="0.3", label="2 sqrt(a(1-a))")
    ax.set_xlabel("|alpha|^2")
    ax.set_ylabel("concurrence")


def _plot_purity(report: ExperimentReport, ax: Any) -> None:
    _, qst = _series(report, "qst", "purity")
    _, set_ = _series(report, "set", "purity")
    ax.plot(qst, set_, "o", fillstyle="none", label="points")
    line = report.curves.get("identity", {"x": [0.25, 1.0], "y": [0.25, 1.0]})
    ax.plot(line["x"], line["y"], "--", color="0.3", label="y = x")
    ax.set_xlabel("QST purity")
    ax.set_ylabel("SET purity")


def _plot_angle_scan(report: ExperimentReport, ax: Any) -> None:
    points = report.complete_points()
    theta = [float(p.value) for p in points]
    ax.plot(theta, [p.extra["phase_set"] for p in points], "o", label="SET phase")
    fit = report.curves.get("phase_fit")
    if fit:
        ax.plot(fit["x"], fit["y"], "-", label=f"slope {report.summary.get('slope', 0.0):.4f}")
    ax.set_xlabel("seed angle (mrad)")
    ax.set_ylabel("phase (rad)")
    twin = ax.twinx()
    twin.plot(theta, [p.extra["envelope"] for p in points], "s", color="0.5", fillstyle="none")
    envelope = report.curves.get("envelope_model")
    if envelope:
        twin.plot(envelope["x"], envelope["y"], ":", color="0.5")
    twin.set_ylabel("relative stimulated coupling")


_PLOTTERS = {
    "concurrence_sweep": _plot_concurrence,
    "purity_sweep": _plot_purity,
    "angle_scan": _plot_angle_scan,
}


def write_report_svg(report: ExperimentReport, path: Path) -> Path | None:
    """Self-contained SVG figure; None for experiments without a figure."""
    plotter = _PLOTTERS.get(report.name)
    if plotter is None:
        logger.info("No figure for experiment %s", report.name)
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    try:
        plotter(report, ax)
        ax.legend(loc="best")
        ax.set_title(report.name)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path


def write_report(report: ExperimentReport, out_dir: Path, formats: tuple[str, ...]) -> list[Path]:
    """Write the requested formats as ``<out_dir>/<name>.<ext>``."""
    written: list[Path] = []
    for fmt in formats:
        target = out_dir / f"{report.name}.{fmt}"
        if fmt == "json":
            written.append(write_report_json(report, target))
        elif fmt == "csv":
            written.append(write_report_csv(report, target))
        elif fmt == "svg":
            svg = write_report_svg(report, target)
            if svg is not None:
                written.append(svg)
        else:
            raise ValueError(f"unknown report format {fmt!r}")
    return written
