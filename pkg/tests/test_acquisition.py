"""Tests for simulated acquisition and the records CSV contract."""

from pathlib import Path

import numpy as np
import pytest

from stimtomo.acquisition.records import (
    CSV_HEADER,
    MeasurementRecord,
    Port,
    RecordKind,
    filter_kind,
    read_records,
    write_records,
)
from stimtomo.acquisition.simulate import (
    QstAcquisitionConfig,
    SetAcquisitionConfig,
    measure_seed_singlephoton,
    simulate_qst_counts,
    simulate_set_intensities,
    simulate_set_run,
    simulate_set_run_for_state,
)
from stimtomo.errors import ConfigError, InputFileError, RecordSchemaError
from stimtomo.quantum.core import DensityMatrix
from stimtomo.quantum.polarization import MeasurementSetting, PolLabel, density_of, jones_of
from stimtomo.source.model import PdlConfig, SeedDistortion, SourceConfig


def _by_setting(records: list[MeasurementRecord]) -> dict[str, float]:
    return {f"{r.setting}:{r.port}": r.value for r in records}


class TestQstCounts:
    """Tests for simulated coincidence counts."""

    def test_record_layout(self, bell: DensityMatrix) -> None:
        """Nine basis pairs, four port combinations each."""
        records = simulate_qst_counts(bell, QstAcquisitionConfig(seed_rng=3))
        assert len(records) == 36
        assert {r.kind for r in records} == {RecordKind.QST_COUNT}
        assert all(float(r.value).is_integer() for r in records)
        assert len({str(r.setting) for r in records}) == 36

    def test_same_seed_same_counts(self, bell: DensityMatrix) -> None:
        a = simulate_qst_counts(bell, QstAcquisitionConfig(seed_rng=7))
        b = simulate_qst_counts(bell, QstAcquisitionConfig(seed_rng=7))
        c = simulate_qst_counts(bell, QstAcquisitionConfig(seed_rng=8))
        assert [r.value for r in a] == [r.value for r in b]
        assert [r.value for r in a] != [r.value for r in c]

    def test_noiseless_expectations(
        self, bell: DensityMatrix, zero_noise_qst: QstAcquisitionConfig
    ) -> None:
        """Noiseless counts are N * p per setting."""
        values = _by_setting(simulate_qst_counts(bell, zero_noise_qst))
        expected = zero_noise_qst.expected_pairs
        assert values["HH:transmitted"] == pytest.approx(0.5 * expected)
        assert values["HV:transmitted"] == pytest.approx(0.0, abs=1e-9)
        assert values["VV:reflected"] == pytest.approx(0.5 * expected)

    def test_background_adds_counts(self, bell: DensityMatrix) -> None:
        acq = QstAcquisitionConfig(noiseless=True, background_rate_hz=10.0, integration_s=2.0)
        values = _by_setting(simulate_qst_counts(bell, acq))
        assert values["HV:transmitted"] == pytest.approx(20.0)

    def test_poisson_statistics(self, bell: DensityMatrix) -> None:
        """Across seeds each record has mean and variance N * p."""
        means = np.array(
            [r.value for r in simulate_qst_counts(bell, QstAcquisitionConfig(noiseless=True))]
        )
        draws = np.array(
            [
                [r.value for r in simulate_qst_counts(bell, QstAcquisitionConfig(seed_rng=seed))]
                for seed in range(400)
            ]
        )
        stderr = np.sqrt(np.maximum(means, 1.0) / len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - means) <= 5 * stderr)
        positive = means > 1.0
        ratio = draws.var(axis=0, ddof=1)[positive] / means[positive]
        np.testing.assert_allclose(ratio, 1.0, atol=0.35)

    def test_port_split_is_thinning(self, bell: DensityMatrix) -> None:
        """The four ports of a basis pair sum to Poisson(N) and are uncorrelated."""
        acq = QstAcquisitionConfig()
        runs = [simulate_qst_counts(bell, QstAcquisitionConfig(seed_rng=s)) for s in range(400)]
        draws = np.array([[r.value for r in records[:4]] for records in runs])
        totals = draws.sum(axis=1)
        assert abs(totals.mean() - acq.expected_pairs) <= 5 * np.sqrt(acq.expected_pairs / 400)
        assert totals.var(ddof=1) / acq.expected_pairs == pytest.approx(1.0, abs=0.35)
        busy = draws[:, draws.mean(axis=0) > 1.0]
        assert busy.shape[1] >= 2
        assert abs(np.corrcoef(busy[:, 0], busy[:, 1])[0, 1]) < 0.25

    def test_config_validation(self) -> None:
        with pytest.raises(ConfigError):
            QstAcquisitionConfig(efficiency_pair=0.0)
        with pytest.raises(ConfigError):
            SetAcquisitionConfig(coupling_idler=-1.0)


class TestSetRun:
    """Tests for simulated stimulated-emission runs."""

    def test_record_counts(self, zero_noise_set: SetAcquisitionConfig) -> None:
        """Six seeds: 12 idler and 2 seed readings each, 12 tomography readings each."""
        run = simulate_set_run(
            SourceConfig(), 0.0, SeedDistortion(), PdlConfig(), zero_noise_set
        )
        assert len(run.stim_records) == 84
        assert len(filter_kind(run.stim_records, RecordKind.SET_INTENSITY)) == 72
        assert len(filter_kind(run.stim_records, RecordKind.SEED_INTENSITY)) == 12
        assert len(run.seed_tomo_records) == 72

    def test_single_seed_intensities(self, zero_noise_set: SetAcquisitionConfig) -> None:
        """An H seed on the Bell source stimulates H only."""
        records = simulate_set_intensities(
            SourceConfig(), PolLabel.H, 0.0, SeedDistortion(), PdlConfig(), zero_noise_set
        )
        assert len(records) == 14
        stim = _by_setting(filter_kind(records, RecordKind.SET_INTENSITY))
        assert stim["HH:transmitted"] == pytest.approx(0.5)
        assert stim["HV:reflected"] == pytest.approx(0.0, abs=1e-12)
        assert stim["HV:transmitted"] == pytest.approx(0.0, abs=1e-12)
        seed = _by_setting(filter_kind(records, RecordKind.SEED_INTENSITY))
        assert seed["HH:transmitted"] == pytest.approx(1.0)

    def test_deterministic(self, bell: DensityMatrix) -> None:
        acq = SetAcquisitionConfig(seed_rng=5)
        a = simulate_set_run_for_state(bell, SeedDistortion(), PdlConfig(), acq)
        b = simulate_set_run_for_state(bell, SeedDistortion(), PdlConfig(), acq)
        assert [r.value for r in a.stim_records] == [r.value for r in b.stim_records]
        assert [r.value for r in a.seed_tomo_records] == [r.value for r in b.seed_tomo_records]

    def test_ports_complement(
        self, bell: DensityMatrix, zero_noise_set: SetAcquisitionConfig
    ) -> None:
        """Both ports of an analyzer add up to the same stimulated power."""
        run = simulate_set_run_for_state(bell, SeedDistortion(), PdlConfig(), zero_noise_set)
        h_seed = [
            r
            for r in filter_kind(run.stim_records, RecordKind.SET_INTENSITY)
            if r.signal is PolLabel.H
        ]
        assert len(h_seed) == 12
        totals = [a.value + b.value for a, b in zip(h_seed[::2], h_seed[1::2], strict=True)]
        assert all(b.port is Port.REFLECTED for b in h_seed[1::2])
        assert totals == pytest.approx([0.5] * 6)

    def test_coupling_scales_intensities(self, bell: DensityMatrix) -> None:
        """Couplings multiply the readings of their arm."""
        base = simulate_set_run_for_state(
            bell, SeedDistortion(), PdlConfig(), SetAcquisitionConfig(intensity_noise_rel=0.0)
        )
        scaled = simulate_set_run_for_state(
            bell,
            SeedDistortion(),
            PdlConfig(),
            SetAcquisitionConfig(coupling_signal=2.0, coupling_idler=3.0, intensity_noise_rel=0.0),
        )
        for a, b in zip(base.stim_records, scaled.stim_records, strict=True):
            factor = 3.0 if a.kind is RecordKind.SET_INTENSITY else 2.0
            assert b.value == pytest.approx(factor * a.value)

    def test_seed_tomography(self, zero_noise_set: SetAcquisitionConfig) -> None:
        seed = density_of(jones_of(PolLabel.D))
        records = measure_seed_singlephoton(seed, zero_noise_set, scale=2.0)
        values = _by_setting(records)
        assert len(records) == 12
        assert values["HD:transmitted"] == pytest.approx(2.0)
        assert values["HA:reflected"] == pytest.approx(0.0, abs=1e-12)
        assert values["HH:transmitted"] == pytest.approx(1.0)


class TestRecordsCsv:
    """Tests for writing and reading records."""

    def test_round_trip(self, tmp_path: Path, bell: DensityMatrix) -> None:
        records = simulate_qst_counts(bell, QstAcquisitionConfig(seed_rng=1))
        path = write_records(tmp_path / "out" / "qst.csv", records)
        assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
        assert read_records(path) == records

    def test_missing_file(self, tmp_path: Path) -> None:
        with pytest.raises(InputFileError):
            read_records(tmp_path / "nope.csv")

    def test_bad_header(self, tmp_path: Path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("kind,signal,idler\nqst_count,H,H\n")
        with pytest.raises(RecordSchemaError) as exc_info:
            read_records(path)
        assert exc_info.value.row == 0

    def test_row_number_in_error(self, tmp_path: Path) -> None:
        """A truncated second row is reported as row 2."""
        path = tmp_path / "truncated.csv"
        path.write_text(
            ",".join(CSV_HEADER)
            + "\nqst_count,H,H,transmitted,10,0,0\nqst_count,H,V,transmitted\n"
        )
        with pytest.raises(RecordSchemaError, match="row 2") as exc_info:
            read_records(path)
        assert exc_info.value.row == 2

    def test_invalid_utf8_is_schema_error(self, tmp_path: Path) -> None:
        """Undecodable bytes are a data error on the row that holds them."""
        path = tmp_path / "binary.csv"
        header = ",".join(CSV_HEADER).encode()
        path.write_bytes(header + b"\nqst_count,H,H,transmitted,10,0,0\n\xff\xfe,H,V\n")
        with pytest.raises(RecordSchemaError, match="UTF-8") as exc_info:
            read_records(path)
        assert exc_info.value.row == 2

    def test_fractional_count_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "frac.csv"
        path.write_text(",".join(CSV_HEADER) + "\nqst_count,H,H,transmitted,10.5,0,0\n")
        with pytest.raises(RecordSchemaError, match="not an integer"):
            read_records(path)

    def test_unknown_label_rejected(self, tmp_path: Path) -> None:
        path = tmp_path / "label.csv"
        path.write_text(",".join(CSV_HEADER) + "\nset_intensity,H,X,transmitted,0.5,0,0\n")
        with pytest.raises(RecordSchemaError):
            read_records(path)

    def test_negative_value_rejected(self) -> None:
        with pytest.raises(ValueError):
            MeasurementRecord(
                kind=RecordKind.SET_INTENSITY,
                setting=MeasurementSetting(PolLabel.H, PolLabel.H),
                value=-1.0,
            )
