"""Tests for the SPDC source model and its stimulated response."""

import numpy as np
import pytest

from stimtomo.errors import ConfigError
from stimtomo.quantum.core import concurrence, fidelity, phase_hh_vv, pure_two_term, purity
from stimtomo.quantum.polarization import PolLabel, density_of, jones_of, projector
from stimtomo.source.model import (
    PdlConfig,
    SeedDistortion,
    SourceConfig,
    angle_averaged_state,
    angular_weight,
    derived_halfwidth_mrad,
    pdl_for_ratios,
    pdl_ratio,
    seeded_response,
    stimulated_response,
    transmissions_for_ratio,
    true_state,
)


class TestSourceConfig:
    """Tests for SourceConfig validation and serialization."""

    def test_defaults(self) -> None:
        cfg = SourceConfig()
        assert cfg.alpha_sq == 0.5
        assert cfg.phase_slope == 0.312

    @pytest.mark.parametrize(
        "overrides",
        [
            {"alpha_sq": 1.5},
            {"decoherence": -0.1},
            {"emission_sigma_mrad": 0.0},
            {"quadrature_nodes": 8},
            {"phase_slope": float("nan")},
        ],
    )
    def test_rejects_invalid(self, overrides: dict) -> None:
        with pytest.raises(ConfigError):
            SourceConfig(**overrides)

    def test_from_dict_derived_halfwidth(self) -> None:
        """'derived' computes lambda / (pi w) from the QST waist."""
        cfg = SourceConfig.from_dict({"collection_halfwidth_mrad": "derived"})
        assert cfg.collection_halfwidth_mrad == pytest.approx(5.093, abs=1e-3)

    def test_from_dict_unknown_field(self) -> None:
        with pytest.raises(ConfigError):
            SourceConfig.from_dict({"alpha": 0.5})

    def test_from_dict_malformed_value(self) -> None:
        with pytest.raises(ConfigError):
            SourceConfig.from_dict({"alpha_sq": "half"})

    def test_dict_round_trip(self) -> None:
        cfg = SourceConfig(alpha_sq=0.3, decoherence_table={0.0: 1.0, 10.0: 0.4})
        assert SourceConfig.from_dict(cfg.to_dict()) == cfg

    def test_replace_rejects_unknown(self) -> None:
        with pytest.raises(ConfigError):
            SourceConfig().replace(slope=0.1)


class TestDerivedQuantities:
    """Tests for halfwidths, crystal rotation and the angular weight."""

    def test_derived_halfwidths(self) -> None:
        """A narrow QST waist collects ~5 mrad, a wide seed ~0.25 mrad."""
        assert derived_halfwidth_mrad(800.0, 50.0) == pytest.approx(5.093, abs=1e-3)
        assert derived_halfwidth_mrad(800.0, 1000.0) == pytest.approx(0.2546, abs=1e-4)

    def test_config_derived_halfwidth(self) -> None:
        cfg = SourceConfig(waist_qst_um=50.0)
        assert cfg.derived_collection_halfwidth() == pytest.approx(5.093, abs=1e-3)
        assert cfg.derived_collection_halfwidth(1000.0) == pytest.approx(0.2546, abs=1e-4)

    def test_sigma_eff(self) -> None:
        cfg = SourceConfig(emission_sigma_mrad=3.0, collection_halfwidth_mrad=4.0)
        assert cfg.sigma_eff_mrad == pytest.approx(2.4)

    def test_crystal_rotation_interpolates(self) -> None:
        cfg = SourceConfig(decoherence_table={0.0: 1.0, 10.0: 0.5})
        assert cfg.with_crystal_rotation(5.0).decoherence == pytest.approx(0.75)
        assert cfg.with_crystal_rotation(20.0).decoherence == pytest.approx(0.5)

    def test_crystal_rotation_needs_table(self) -> None:
        with pytest.raises(ConfigError):
            SourceConfig().with_crystal_rotation(3.0)

    def test_angular_weights_normalized(self) -> None:
        nodes, weights = angular_weight(SourceConfig())
        assert weights.sum() == pytest.approx(1.0)
        assert np.all(np.abs(nodes) <= SourceConfig().collection_halfwidth_mrad)
        np.testing.assert_allclose(weights, weights[::-1], atol=1e-12)


class TestTrueState:
    """Tests for the emitted two-photon state."""

    def test_bell_at_zero_angle(self) -> None:
        rho = true_state(SourceConfig())
        assert concurrence(rho) == pytest.approx(1.0, abs=1e-9)
        assert phase_hh_vv(rho) == pytest.approx(0.0, abs=1e-12)

    def test_phase_follows_slope(self) -> None:
        cfg = SourceConfig(phase0=0.1, phase_slope=0.312)
        assert phase_hh_vv(true_state(cfg, 2.0)) == pytest.approx(0.1 + 0.624)

    def test_matches_pure_two_term(self) -> None:
        """gamma = 1 gives the pure state with the same phase."""
        cfg = SourceConfig(alpha_sq=0.3, phase0=0.8, phase_slope=0.0)
        assert fidelity(true_state(cfg), pure_two_term(0.3, 0.8)) == pytest.approx(1.0, abs=1e-9)

    def test_coherence_sign(self) -> None:
        """rho[HH, VV] carries e^{+i phi}, as in pure_two_term."""
        cfg = SourceConfig(alpha_sq=0.3, decoherence=0.8, phase0=0.7, phase_slope=0.0)
        expected = 0.8 * np.sqrt(0.3 * 0.7) * np.exp(0.7j)
        assert true_state(cfg).matrix[0, 3] == pytest.approx(expected, abs=1e-12)
        assert np.angle(pure_two_term(0.3, 0.7).matrix[0, 3]) == pytest.approx(0.7)

    def test_decoherence_scales_coherence(self) -> None:
        """C = gamma for a balanced source, purity (1 + gamma^2) / 2."""
        rho = true_state(SourceConfig(decoherence=0.6))
        assert concurrence(rho) == pytest.approx(0.6, abs=1e-9)
        assert purity(rho) == pytest.approx((1 + 0.36) / 2)

    def test_angle_average_without_slope(self) -> None:
        cfg = SourceConfig(phase_slope=0.0)
        assert fidelity(angle_averaged_state(cfg), true_state(cfg)) == pytest.approx(
            1.0, abs=1e-9
        )

    def test_angle_average_dephases(self) -> None:
        """A phase slope across the collected angles lowers the concurrence."""
        assert concurrence(angle_averaged_state(SourceConfig())) < 0.9


class TestStimulatedResponse:
    """Tests for seeding the source."""

    def test_h_seed_on_bell(self) -> None:
        """Seeding H stimulates H in the idler."""
        response = stimulated_response(SourceConfig(), jones_of(PolLabel.H))
        np.testing.assert_allclose(response.idler_state.matrix, projector(PolLabel.H), atol=1e-12)
        assert response.gain == pytest.approx(0.5)
        assert response.seed_transmission == pytest.approx(1.0)

    def test_circular_seed_is_conjugated(self) -> None:
        """R seeding on the phi = 0 Bell state stimulates L."""
        response = stimulated_response(SourceConfig(), jones_of(PolLabel.R))
        np.testing.assert_allclose(response.idler_state.matrix, projector(PolLabel.L), atol=1e-12)

    @pytest.mark.parametrize(
        ("seed", "idler"),
        [
            (PolLabel.H, PolLabel.H),
            (PolLabel.V, PolLabel.V),
            (PolLabel.D, PolLabel.D),
            (PolLabel.A, PolLabel.A),
            (PolLabel.R, PolLabel.L),
            (PolLabel.L, PolLabel.R),
        ],
    )
    def test_bell_correlation_table(self, seed: PolLabel, idler: PolLabel) -> None:
        """Each seed stimulates its correlated idler polarization, pure."""
        response = stimulated_response(SourceConfig(), jones_of(seed))
        assert fidelity(response.idler_state, density_of(jones_of(idler))) >= 1 - 1e-10
        assert purity(response.idler_state) == pytest.approx(1.0, abs=1e-10)

    def test_incoherent_source_gives_unpolarized_idler(self) -> None:
        """Without HH-VV coherence a diagonal seed stimulates unpolarized light."""
        response = stimulated_response(SourceConfig(decoherence=0.0), jones_of(PolLabel.D))
        np.testing.assert_allclose(response.idler_state.matrix, np.eye(2) / 2, atol=1e-12)

    def test_phase_rotates_superposition_seeds(self) -> None:
        """phase0 = pi turns D into A but leaves H and V alone."""
        cfg = SourceConfig(phase0=np.pi, phase_slope=0.0)
        d = stimulated_response(cfg, jones_of(PolLabel.D)).idler_state
        assert fidelity(d, density_of(jones_of(PolLabel.A))) >= 1 - 1e-10
        for label in (PolLabel.H, PolLabel.V):
            idler = stimulated_response(cfg, jones_of(label)).idler_state
            assert fidelity(idler, density_of(jones_of(label))) >= 1 - 1e-10

    def test_zero_gain(self) -> None:
        """A V seed on |HH> stimulates nothing."""
        response = seeded_response(pure_two_term(1.0), jones_of(PolLabel.V))
        assert response.gain == 0.0
        np.testing.assert_allclose(response.idler_state.matrix, np.eye(2) / 2)

    def test_distortion_changes_detected_seed(self) -> None:
        distortion = SeedDistortion(birefringent_phase=0.3, amp_ratio=1.2)
        response = stimulated_response(SourceConfig(), jones_of(PolLabel.D), distortion=distortion)
        seed = response.seed_detected.matrix
        assert seed[0, 0].real / seed[1, 1].real == pytest.approx(1.44)

    def test_distortion_validation(self) -> None:
        with pytest.raises(ConfigError):
            SeedDistortion(amp_ratio=0.0)


class TestPdl:
    """Tests for polarization-dependent loss."""

    def test_transmissions_for_ratio(self) -> None:
        """The larger transmission is one."""
        assert transmissions_for_ratio(4.0) == pytest.approx((1.0, 0.5))
        assert transmissions_for_ratio(0.25) == pytest.approx((0.5, 1.0))

    @pytest.mark.parametrize(("r_signal", "r_idler"), [(1.0, 1.0), (2.0, 2.0), (2.0, 0.5)])
    def test_pdl_ratio_targets(self, r_signal: float, r_idler: float) -> None:
        ratios = pdl_ratio(SourceConfig(), pdl_for_ratios(r_signal, r_idler))
        assert ratios.r_signal == pytest.approx(r_signal)
        assert ratios.r_idler == pytest.approx(r_idler)

    def test_transmission_range(self) -> None:
        with pytest.raises(ConfigError):
            PdlConfig(signal_loss_hv=(0.0, 1.0))
        with pytest.raises(ConfigError):
            PdlConfig(idler_loss_hv=(1.0, 1.2))
