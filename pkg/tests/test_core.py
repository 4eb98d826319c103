"""Tests for density matrices, metrics and the triangular parameterization."""

import numpy as np
import pytest

from stimtomo.errors import (
    DegenerateParameterizationError,
    InvalidStateError,
    NonHermitianError,
)
from stimtomo.quantum.core import (
    DensityMatrix,
    apply_idler_phase,
    bell_state,
    concurrence,
    density_to_params,
    eigen_hermitian,
    fidelity,
    matrix_sqrt_psd,
    params_to_density,
    partial_trace,
    phase_hh_vv,
    project_psd,
    pure_two_term,
    purity,
    random_state,
    tensor_product,
    trace_distance,
)


def _werner(p: float) -> DensityMatrix:
    return DensityMatrix.from_unnormalized(p * bell_state().matrix + (1 - p) * np.eye(4) / 4)


class TestDensityMatrix:
    """Tests for DensityMatrix validation and construction."""

    def test_rejects_non_hermitian(self) -> None:
        """A non-Hermitian matrix is not a state."""
        m = np.array([[0.5, 0.1], [0.2, 0.5]])
        with pytest.raises(InvalidStateError):
            DensityMatrix(m)

    def test_rejects_wrong_trace(self) -> None:
        """Trace must be one."""
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self) -> None:
        """Unit trace but indefinite."""
        with pytest.raises(InvalidStateError):
            DensityMatrix(np.diag([1.2, -0.2]))

    def test_from_unnormalized_divides_by_trace(self) -> None:
        """Scaling is removed."""
        rho = DensityMatrix.from_unnormalized(3 * np.diag([1.0, 0, 0, 1.0]))
        np.testing.assert_allclose(np.diag(rho.matrix).real, [0.5, 0, 0, 0.5])

    def test_matrix_is_read_only(self) -> None:
        """States cannot be mutated in place."""
        rho = DensityMatrix.maximally_mixed(2)
        with pytest.raises(ValueError):
            rho.matrix[0, 0] = 1.0

    def test_dict_round_trip(self) -> None:
        """The {dim, re, im} object restores the matrix."""
        rho = bell_state(0.4)
        data = rho.to_dict()
        assert data["dim"] == 4
        assert len(data["re"]) == 16
        np.testing.assert_allclose(DensityMatrix.from_dict(data).matrix, rho.matrix)

    def test_from_dict_rejects_short_arrays(self) -> None:
        """Entry count must match the dimension."""
        with pytest.raises(InvalidStateError):
            DensityMatrix.from_dict({"dim": 2, "re": [1, 0, 0], "im": [0, 0, 0, 0]})


class TestEigenHermitian:
    """Tests for the Jacobi eigensolver."""

    def test_matches_numpy(self) -> None:
        """Eigenvalues agree with LAPACK and vectors diagonalize."""
        rng = np.random.default_rng(7)
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        h = g + g.conj().T
        values, vectors = eigen_hermitian(h)
        np.testing.assert_allclose(values, np.sort(np.linalg.eigvalsh(h))[::-1], atol=1e-10)
        np.testing.assert_allclose(vectors.conj().T @ h @ vectors, np.diag(values), atol=1e-10)
        np.testing.assert_allclose(vectors.conj().T @ vectors, np.eye(4), atol=1e-12)

    @pytest.mark.parametrize("size", [1e-17, 1e-13, 2.21e-9, 1e-8])
    def test_near_diagonal(self, size: float) -> None:
        """A single tiny off-diagonal pair converges."""
        h = np.diag([0.344, -0.601, 0.8842, -0.2698]).astype(complex)
        h[1, 0] = size * (1 + 1j)
        h[0, 1] = np.conj(h[1, 0])
        values, vectors = eigen_hermitian(h)
        np.testing.assert_allclose(values, np.sort(np.linalg.eigvalsh(h))[::-1], atol=1e-12)
        np.testing.assert_allclose(vectors.conj().T @ vectors, np.eye(4), atol=1e-12)

    def test_many_near_diagonal(self) -> None:
        rng = np.random.default_rng(11)
        for _ in range(500):
            h = np.diag(rng.uniform(-1, 1, 4)).astype(complex)
            p, q = rng.choice(4, size=2, replace=False)
            h[p, q] = 10.0 ** rng.uniform(-17, -8) * (rng.standard_normal() + 1j)
            h[q, p] = np.conj(h[p, q])
            values, _ = eigen_hermitian(h)
            np.testing.assert_allclose(values, np.sort(np.linalg.eigvalsh(h))[::-1], atol=1e-12)

    def test_degenerate(self) -> None:
        """Repeated eigenvalues, with and without a small coupling."""
        values, vectors = eigen_hermitian(np.eye(4) / 4)
        np.testing.assert_allclose(values, [0.25] * 4)
        h = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
        h[0, 1] = h[1, 0] = 1e-12
        values, vectors = eigen_hermitian(h)
        np.testing.assert_allclose(values, [0.5 + 1e-12, 0.5 - 1e-12, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(vectors.conj().T @ h @ vectors, np.diag(values), atol=1e-14)

    def test_near_diagonal_state_is_valid(self) -> None:
        rho = np.diag([0.3649, 0.322084, 0.015942, 0.297074]).astype(complex)
        rho[0, 1] = rho[1, 0] = 2.57e-9
        assert DensityMatrix(rho).dim == 4

    def test_descending_order(self) -> None:
        """Largest eigenvalue first."""
        values, _ = eigen_hermitian(np.diag([0.1, 0.7, 0.2]))
        np.testing.assert_allclose(values, [0.7, 0.2, 0.1])

    def test_rejects_non_hermitian(self) -> None:
        """Input must be Hermitian within tolerance."""
        with pytest.raises(NonHermitianError):
            eigen_hermitian(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_matrix_sqrt(self) -> None:
        """sqrt(m) squared gives m back."""
        rho = random_state(np.random.default_rng(3), rank=4)
        root = matrix_sqrt_psd(rho.matrix)
        np.testing.assert_allclose(root @ root, rho.matrix, atol=1e-10)


class TestMetrics:
    """Tests for purity, concurrence, fidelity and trace distance."""

    def test_bell_state(self, bell: DensityMatrix) -> None:
        """Pure and maximally entangled."""
        assert purity(bell) == pytest.approx(1.0, abs=1e-12)
        assert concurrence(bell) == pytest.approx(1.0, abs=1e-9)

    def test_product_state(self) -> None:
        """|HH> has no entanglement."""
        assert concurrence(pure_two_term(1.0)) == pytest.approx(0.0, abs=1e-9)

    def test_maximally_mixed(self) -> None:
        """Purity 1/4 and zero concurrence."""
        rho = DensityMatrix.maximally_mixed(4)
        assert purity(rho) == pytest.approx(0.25)
        assert concurrence(rho) == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("alpha_sq", [0.1, 0.3, 0.5])
    def test_two_term_concurrence(self, alpha_sq: float) -> None:
        """C = 2 sqrt(a (1 - a)) for any phase."""
        expected = 2 * np.sqrt(alpha_sq * (1 - alpha_sq))
        assert concurrence(pure_two_term(alpha_sq, 1.1)) == pytest.approx(expected, abs=1e-9)

    @pytest.mark.parametrize("p", [0.2, 0.5, 0.9])
    def test_werner_concurrence(self, p: float) -> None:
        """C = max(0, (3p - 1) / 2)."""
        assert concurrence(_werner(p)) == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-9)

    def test_fidelity_identical_and_orthogonal(self, bell: DensityMatrix) -> None:
        """1 for equal states, 0 for orthogonal pure states."""
        assert fidelity(bell, bell) == pytest.approx(1.0, abs=1e-9)
        assert fidelity(bell, bell_state(np.pi)) == pytest.approx(0.0, abs=1e-9)

    def test_fidelity_pure_against_mixed(self, bell: DensityMatrix) -> None:
        """F(psi, rho) = <psi|rho|psi>."""
        rho = _werner(0.6)
        expected = 0.6 + 0.4 / 4
        assert fidelity(bell, rho) == pytest.approx(expected, abs=1e-9)

    def test_trace_distance(self) -> None:
        """Orthogonal pure states are at distance one."""
        hh = pure_two_term(1.0)
        vv = pure_two_term(0.0)
        assert trace_distance(hh, vv) == pytest.approx(1.0)
        assert trace_distance(hh, hh) == pytest.approx(0.0, abs=1e-12)

    def test_partial_trace(self, bell: DensityMatrix) -> None:
        """Either photon of a Bell pair is maximally mixed."""
        for keep in ("signal", "idler"):
            np.testing.assert_allclose(partial_trace(bell, keep).matrix, np.eye(2) / 2, atol=1e-12)

    def test_partial_trace_of_product(self) -> None:
        """Tracing out one factor of a product state leaves the other."""
        signal = np.array([[0.7, 0.1], [0.1, 0.3]], dtype=complex)
        idler = np.array([[0.4, 0.2j], [-0.2j, 0.6]], dtype=complex)
        rho = DensityMatrix(tensor_product(signal, idler))
        np.testing.assert_allclose(partial_trace(rho, "signal").matrix, signal, atol=1e-12)
        np.testing.assert_allclose(partial_trace(rho, "idler").matrix, idler, atol=1e-12)


class TestPhase:
    """Tests for the HH-VV phase and local idler rotations."""

    def test_phase_hh_vv(self) -> None:
        """arg rho[HH, VV] is the state's phase argument."""
        assert phase_hh_vv(bell_state(0.7)) == pytest.approx(0.7)
        assert phase_hh_vv(pure_two_term(0.3, -1.2)) == pytest.approx(-1.2)

    def test_phase_range(self) -> None:
        """-pi maps to pi."""
        assert phase_hh_vv(bell_state(np.pi)) == pytest.approx(np.pi)

    def test_apply_idler_phase_shifts_phase(self) -> None:
        """diag(1, e^{i phi}) on the idler removes phi from arg rho[HH, VV]."""
        rotated = apply_idler_phase(bell_state(0.7), 0.7)
        assert phase_hh_vv(rotated) == pytest.approx(0.0, abs=1e-12)
        assert fidelity(rotated, bell_state()) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("alpha_sq", [0.0, 0.1, 0.25, 0.5])
    def test_metrics_constant_over_phase(self, alpha_sq: float) -> None:
        """Concurrence and purity do not depend on the HH-VV phase."""
        expected = 2 * np.sqrt(alpha_sq * (1 - alpha_sq))
        for phase in np.linspace(0.0, 2 * np.pi, 24, endpoint=False):
            rho = pure_two_term(alpha_sq, phase)
            assert concurrence(rho) == pytest.approx(expected, abs=1e-9)
            assert purity(rho) == pytest.approx(1.0, abs=1e-10)

    def test_apply_idler_phase_keeps_entanglement(self) -> None:
        """Local unitaries leave concurrence and purity alone."""
        rho = _werner(0.8)
        rotated = apply_idler_phase(rho, 1.3)
        assert concurrence(rotated) == pytest.approx(concurrence(rho), abs=1e-9)
        assert purity(rotated) == pytest.approx(purity(rho), abs=1e-12)


class TestParameterization:
    """Tests for the triangular parameterization."""

    def test_round_trip_full_rank(self) -> None:
        """params -> rho -> params -> rho is stable."""
        rho = random_state(np.random.default_rng(11), rank=4)
        back = params_to_density(density_to_params(rho))
        np.testing.assert_allclose(back.matrix, rho.matrix, atol=1e-8)

    def test_round_trip_pure(self, bell: DensityMatrix) -> None:
        """Rank-deficient states come back within the regularization."""
        back = params_to_density(density_to_params(bell))
        assert fidelity(back, bell) == pytest.approx(1.0, abs=1e-8)

    def test_any_params_give_a_state(self) -> None:
        """Every nonzero parameter vector is physical."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            rho = params_to_density(rng.standard_normal(16))
            assert np.trace(rho.matrix).real == pytest.approx(1.0)

    def test_single_photon_dimension_inferred(self) -> None:
        """Four parameters describe a qubit."""
        assert params_to_density([1.0, 1.0, 0.0, 0.0]).dim == 2

    def test_all_zero_is_degenerate(self) -> None:
        """T = 0 has no normalization."""
        with pytest.raises(DegenerateParameterizationError):
            params_to_density(np.zeros(16))

    def test_project_psd_clamps(self) -> None:
        """Negative eigenvalues are removed and the trace restored."""
        rho = project_psd(np.diag([0.7, 0.5, -0.2, 0.0]))
        np.testing.assert_allclose(np.diag(rho.matrix).real, [0.7 / 1.2, 0.5 / 1.2, 0, 0])


class TestRandomState:
    """Tests for random_state."""

    def test_rank(self) -> None:
        """Requested rank is honored."""
        rho = random_state(np.random.default_rng(1), rank=2)
        values, _ = eigen_hermitian(rho.matrix)
        assert np.sum(values > 1e-10) == 2

    def test_deterministic(self) -> None:
        """Same generator seed, same state."""
        a = random_state(np.random.default_rng(9))
        b = random_state(np.random.default_rng(9))
        np.testing.assert_array_equal(a.matrix, b.matrix)
