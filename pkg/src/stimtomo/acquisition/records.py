"""Measurement records and their CSV import/export contract."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from stimtomo.errors import InputFileError, RecordSchemaError
from stimtomo.quantum.polarization import MeasurementSetting, PolLabel

CSV_HEADER = ("kind", "signal", "idler", "port", "value", "theta_mrad", "rng_seed")


class RecordKind(str, Enum):
    """What a record measured."""

    QST_COUNT = "qst_count"  # coincidence counts; setting = (signal, idler)
    SET_INTENSITY = "set_intensity"  # stimulated idler; setting = (seed, idler)
    SEED_INTENSITY = "seed_intensity"  # seed behind the signal PBS
    SEED_TOMO = "seed_tomo"  # seed through each of the six analyzers

    def __str__(self) -> str:
        return self.value


class Port(str, Enum):
    """PBS output port. A reflected port carries the orthogonal projection."""

    TRANSMITTED = "transmitted"
    REFLECTED = "reflected"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class MeasurementRecord:
    """One detector reading.

    The setting always names the labels actually projected onto, so a
    reflected reading behind an H analyzer is recorded with label V.
    For QST the port is the signal-arm port.
    """

    kind: RecordKind
    setting: MeasurementSetting
    value: float
    port: Port = Port.TRANSMITTED
    theta_mrad: float = 0.0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"record value must be finite and nonnegative, got {self.value}")

    @property
    def signal(self) -> PolLabel:
        return self.setting.signal

    @property
    def idler(self) -> PolLabel:
        return self.setting.idler

    def to_row(self) -> dict[str, str]:
        """Render as a CSV row; counts as integers, intensities to 9 significant digits."""
        if self.kind is RecordKind.QST_COUNT and float(self.value).is_integer():
            value = str(int(self.value))
        else:
            value = f"{self.value:.9g}"
        return {
            "kind": self.kind.value,
            "signal": self.signal.value,
            "idler": self.idler.value,
            "port": self.port.value,
            "value": value,
            "theta_mrad": f"{self.theta_mrad:.9g}",
            "rng_seed": str(self.rng_seed),
        }

    @classmethod
    def from_row(cls, row: dict[str, Any], row_number: int) -> MeasurementRecord:
        """Parse a CSV row.

        Raises:
            RecordSchemaError: If a column is missing or malformed
        """
        try:
            missing = [name for name in CSV_HEADER if row.get(name) in (None, "")]
            if missing:
                raise RecordSchemaError(row_number, f"missing column(s) {', '.join(missing)}")
            kind = RecordKind(row["kind"].strip())
            setting = MeasurementSetting(
                PolLabel.parse(row["signal"]), PolLabel.parse(row["idler"])
            )
            port = Port(row["port"].strip())
            value = float(row["value"])
            if kind is RecordKind.QST_COUNT and not value.is_integer():
                raise RecordSchemaError(row_number, f"count {row['value']!r} is not an integer")
            return cls(
                kind=kind,
                setting=setting,
                value=value,
                port=port,
                theta_mrad=float(row["theta_mrad"]),
                rng_seed=int(row["rng_seed"]),
            )
        except RecordSchemaError:
            raise
        except (TypeError, ValueError, AttributeError) as e:
            raise RecordSchemaError(row_number, str(e)) from e


def write_records(path: Path | str, records: Iterable[MeasurementRecord]) -> Path:
    """Write records to CSV with the fixed header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_HEADER, lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(record.to_row())
    return path


def read_records(path: Path | str) -> list[MeasurementRecord]:
    """Read a records CSV.

    Row numbers in errors are 1-based data rows (the header is row 0).

    Raises:
        InputFileError: If the file does not exist
        RecordSchemaError: If the header or any row violates the schema
    """
    path = Path(path)
    if not path.exists():
        raise InputFileError(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise RecordSchemaError(raw.count(b"\n", 0, e.start), "not valid UTF-8") from e
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None or tuple(reader.fieldnames) != CSV_HEADER:
        raise RecordSchemaError(0, f"header must be {','.join(CSV_HEADER)}")
    records = []
    for number, row in enumerate(reader, start=1):
        if None in row:
            raise RecordSchemaError(number, "too many columns")
        records.append(MeasurementRecord.from_row(row, number))
    return records


def filter_kind(
    records: Iterable[MeasurementRecord], *kinds: RecordKind
) -> list[MeasurementRecord]:
    return [r for r in records if r.kind in kinds]
