"""Dense complex linear algebra on 2x2 and 4x4 matrices.

Density matrices, the triangular (Cholesky) parameterization used by the
least-squares fit, a cyclic Jacobi eigensolver for Hermitian matrices, and
the purity / concurrence / fidelity metrics.

Two-photon matrices use the basis order {HH, HV, VH, VV}, i.e. signal (x) idler.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from stimtomo.errors import (
    DegenerateParameterizationError,
    InvalidStateError,
    NonConvergenceError,
    NonHermitianError,
)

logger = logging.getLogger(__name__)

ComplexMatrix = NDArray[np.complex128]

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
EIGEN_INPUT_TOL = 1e-10
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
# Eigenvalues below this are treated as exact zeros before square roots.
SQRT_FLOOR = 1e-14

SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_YY = np.kron(SIGMA_Y, SIGMA_Y)

HH, HV, VH, VV = 0, 1, 2, 3


def as_matrix(data: ArrayLike) -> ComplexMatrix:
    """Coerce input to a square complex matrix of dimension 2 or 4."""
    m = np.array(data, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] not in (2, 4):
        raise ValueError(f"matrix dimension must be 2 or 4, got {m.shape[0]}")
    return m


def tensor_product(a: ArrayLike, b: ArrayLike) -> ComplexMatrix:
    """Kronecker product a (x) b."""
    a_m = np.asarray(a, dtype=complex)
    b_m = np.asarray(b, dtype=complex)
    if a_m.ndim != 2 or a_m.shape[0] != a_m.shape[1]:
        raise ValueError("tensor_product needs square inputs")
    if b_m.ndim != 2 or b_m.shape[0] != b_m.shape[1]:
        raise ValueError("tensor_product needs square inputs")
    return np.kron(a_m, b_m)


def is_hermitian(m: ArrayLike, tol: float = HERMITIAN_TOL) -> bool:
    arr = np.asarray(m, dtype=complex)
    return bool(np.max(np.abs(arr - arr.conj().T)) <= tol)


def eigen_hermitian(m: ArrayLike) -> tuple[NDArray[np.float64], ComplexMatrix]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Each rotation first removes the phase of the pivot element with a
    diagonal unitary, then applies a real Givens rotation that zeroes it.

    Args:
        m: Hermitian matrix (within 1e-10)

    Returns:
        Tuple of (eigenvalues in descending order, unitary matrix whose
        columns are the matching eigenvectors)

    Raises:
        NonHermitianError: If m is not Hermitian
        NonConvergenceError: If the sweep cap is reached
    """
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    deviation = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if deviation > EIGEN_INPUT_TOL:
        raise NonHermitianError(f"matrix is not Hermitian (max deviation {deviation:.3e})")

    a = 0.5 * (a + a.conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    threshold = JACOBI_TOL * max(1.0, float(np.linalg.norm(a)))

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                b = abs(apq)
                if b == 0.0:
                    continue
                phase = apq / b
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * b)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array(
                    [[c, s], [-s * phase.conjugate(), c * phase.conjugate()]],
                    dtype=complex,
                )
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ rot
    else:
        raise NonConvergenceError(
            f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )
    logger.debug("jacobi converged after %d sweeps (n=%d)", sweep, n)

    eigenvalues = np.real(np.diag(a))
    order = np.argsort(eigenvalues)[::-1]
    return eigenvalues[order], v[:, order]


def matrix_sqrt_psd(m: ArrayLike) -> ComplexMatrix:
    """Square root of a PSD Hermitian matrix; small and negative eigenvalues clamp to 0."""
    eigenvalues, vectors = eigen_hermitian(m)
    roots = np.sqrt(np.where(eigenvalues > SQRT_FLOOR, eigenvalues, 0.0))
    return (vectors * roots) @ vectors.conj().T


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite state of one or two qubits.

    The wrapped array is read-only; build new states instead of mutating.
    """

    matrix: ComplexMatrix

    def __post_init__(self) -> None:
        m = as_matrix(self.matrix)
        if not is_hermitian(m, HERMITIAN_TOL):
            raise InvalidStateError("density matrix is not Hermitian")
        trace = np.trace(m)
        if abs(trace - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"density matrix trace is {trace.real:.15g}, expected 1")
        eigenvalues, _ = eigen_hermitian(m)
        if eigenvalues[-1] < -PSD_TOL:
            raise InvalidStateError(
                f"density matrix has negative eigenvalue {eigenvalues[-1]:.3e}"
            )
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @classmethod
    def from_unnormalized(cls, m: ArrayLike) -> DensityMatrix:
        """Symmetrize and divide by the trace."""
        arr = np.asarray(m, dtype=complex)
        arr = 0.5 * (arr + arr.conj().T)
        trace = np.trace(arr).real
        if trace <= 0:
            raise InvalidStateError("cannot normalize a matrix with non-positive trace")
        return cls(arr / trace)

    @classmethod
    def from_pure(cls, ket: ArrayLike) -> DensityMatrix:
        psi = np.asarray(ket, dtype=complex)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise InvalidStateError("zero state vector")
        psi = psi / norm
        return cls.from_unnormalized(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int) -> DensityMatrix:
        return cls(np.eye(dim, dtype=complex) / dim)

    def to_dict(self) -> dict[str, Any]:
        """Serialize as {"dim": n, "re": [...], "im": [...]} in row-major order."""
        flat = self.matrix.reshape(-1)
        return {
            "dim": self.dim,
            "re": [float(x) for x in flat.real],
            "im": [float(x) for x in flat.imag],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> DensityMatrix:
        try:
            dim = int(data["dim"])
            re = np.asarray(data["re"], dtype=float)
            im = np.asarray(data["im"], dtype=float)
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidStateError(f"malformed density matrix object: {e}") from e
        if re.size != dim * dim or im.size != dim * dim:
            raise InvalidStateError(f"expected {dim * dim} entries for dim {dim}")
        return cls((re + 1j * im).reshape(dim, dim))


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2)."""
    return float(np.real(np.sum(np.abs(rho.matrix) ** 2)))


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state.

    The square-rooted eigenvalues of rho (sy (x) sy) rho* (sy (x) sy) are taken
    from the Hermitian form sqrt(rho) rho~ sqrt(rho), which has the same spectrum.
    """
    if rho.dim != 4:
        raise ValueError("concurrence is defined for two-qubit states")
    rho_tilde = SIGMA_YY @ rho.matrix.conj() @ SIGMA_YY
    root = matrix_sqrt_psd(rho.matrix)
    product = root @ rho_tilde @ root
    eigenvalues, _ = eigen_hermitian(0.5 * (product + product.conj().T))
    lambdas = np.sqrt(np.where(eigenvalues > SQRT_FLOOR, eigenvalues, 0.0))
    return float(max(0.0, lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]))


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Jozsa fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.dim != sigma.dim:
        raise ValueError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    root = matrix_sqrt_psd(rho.matrix)
    inner = root @ sigma.matrix @ root
    eigenvalues, _ = eigen_hermitian(0.5 * (inner + inner.conj().T))
    if eigenvalues[-1] < -PSD_TOL:
        raise InvalidStateError("fidelity inner product is not positive semidefinite")
    total = float(np.sum(np.sqrt(np.where(eigenvalues > SQRT_FLOOR, eigenvalues, 0.0))))
    return float(min(1.0, max(0.0, total * total)))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Half the trace norm of rho - sigma."""
    eigenvalues, _ = eigen_hermitian(rho.matrix - sigma.matrix)
    return float(0.5 * np.sum(np.abs(eigenvalues)))


def partial_trace(rho: DensityMatrix, keep: str) -> DensityMatrix:
    """Reduce a two-photon state to the signal or idler photon."""
    if rho.dim != 4:
        raise ValueError("partial_trace expects a two-qubit state")
    blocks = rho.matrix.reshape(2, 2, 2, 2)
    if keep == "signal":
        reduced = np.einsum("ijkj->ik", blocks)
    elif keep == "idler":
        reduced = np.einsum("jijk->ik", blocks)
    else:
        raise ValueError(f"keep must be 'signal' or 'idler', got {keep!r}")
    return DensityMatrix.from_unnormalized(reduced)


def phase_hh_vv(rho: DensityMatrix) -> float:
    """arg rho[HH, VV] in (-pi, pi]."""
    if rho.dim != 4:
        raise ValueError("phase_hh_vv expects a two-qubit state")
    phase = float(np.angle(rho.matrix[HH, VV]))
    return np.pi if phase == -np.pi else phase


def apply_idler_phase(rho: DensityMatrix, phi: float) -> DensityMatrix:
    """Rotate the idler by diag(1, e^{i phi}); shifts phase_hh_vv by -phi."""
    u = np.kron(np.eye(2), np.diag([1.0, np.exp(1j * phi)]))
    return DensityMatrix.from_unnormalized(u @ rho.matrix @ u.conj().T)


def pure_two_term(alpha_sq: float, phase: float = 0.0) -> DensityMatrix:
    """Pure alpha|HH> + beta|VV> state with arg rho[HH, VV] = phase."""
    ket = np.zeros(4, dtype=complex)
    ket[HH] = np.sqrt(alpha_sq)
    ket[VV] = np.sqrt(1.0 - alpha_sq) * np.exp(-1j * phase)
    return DensityMatrix.from_pure(ket)


def bell_state(phase: float = 0.0) -> DensityMatrix:
    """Maximally entangled HH/VV state with arg rho[HH, VV] = phase."""
    return pure_two_term(0.5, phase)


# Triangular parameterization


def lower_indices(dim: int) -> list[tuple[int, int]]:
    """Strictly-lower-triangular positions in row-major order."""
    return [(r, c) for r in range(1, dim) for c in range(r)]


def param_count(dim: int) -> int:
    return dim * dim


def params_to_triangular(params: ArrayLike, dim: int = 4) -> ComplexMatrix:
    """Lower-triangular T: real diagonal first, then (re, im) per lower entry."""
    t = np.asarray(params, dtype=float)
    if t.size != param_count(dim):
        raise ValueError(f"expected {param_count(dim)} parameters for dim {dim}, got {t.size}")
    tri = np.zeros((dim, dim), dtype=complex)
    tri[np.diag_indices(dim)] = t[:dim]
    for k, (r, c) in enumerate(lower_indices(dim)):
        tri[r, c] = t[dim + 2 * k] + 1j * t[dim + 2 * k + 1]
    return tri


def triangular_to_params(tri: ArrayLike) -> NDArray[np.float64]:
    """Inverse of params_to_triangular (diagonal phases are dropped)."""
    m = np.asarray(tri, dtype=complex)
    dim = m.shape[0]
    t = np.zeros(param_count(dim))
    t[:dim] = np.abs(np.diag(m))
    for k, (r, c) in enumerate(lower_indices(dim)):
        t[dim + 2 * k] = m[r, c].real
        t[dim + 2 * k + 1] = m[r, c].imag
    return t


def params_to_density(params: ArrayLike, dim: int | None = None) -> DensityMatrix:
    """rho = T T^dagger / Tr(T T^dagger).

    Args:
        params: 16 reals (two photons) or 4 reals (one photon)
        dim: Matrix dimension; inferred from the parameter count if omitted

    Raises:
        DegenerateParameterizationError: If every parameter is zero
    """
    t = np.asarray(params, dtype=float)
    if dim is None:
        dim = {4: 2, 16: 4}.get(t.size, 0)
        if dim == 0:
            raise ValueError(f"cannot infer dimension from {t.size} parameters")
    if not np.any(t):
        raise DegenerateParameterizationError("all triangular parameters are zero")
    tri = params_to_triangular(t, dim)
    gram = tri @ tri.conj().T
    return DensityMatrix.from_unnormalized(gram)


def density_to_params(
    rho: DensityMatrix | ArrayLike, regularization: float = 1e-10
) -> NDArray[np.float64]:
    """Triangular parameters reproducing rho (up to a tiny identity admixture).

    Rank-deficient states are nudged by ``regularization * I`` so the
    Cholesky factor exists.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    dim = m.shape[0]
    eps = regularization
    for _ in range(6):
        try:
            tri = np.linalg.cholesky(m + eps * np.eye(dim))
        except np.linalg.LinAlgError:
            eps *= 100.0
            continue
        return triangular_to_params(tri)
    raise InvalidStateError("matrix is too far from positive definite for a Cholesky factor")


def project_psd(m: ArrayLike) -> DensityMatrix:
    """Closest-in-spectrum physical state: clamp negative eigenvalues, renormalize."""
    arr = np.asarray(m, dtype=complex)
    eigenvalues, vectors = eigen_hermitian(0.5 * (arr + arr.conj().T))
    clamped = np.clip(eigenvalues, 0.0, None)
    if clamped.sum() <= 0:
        raise InvalidStateError("matrix has no positive spectrum to project onto")
    return DensityMatrix.from_unnormalized((vectors * clamped) @ vectors.conj().T)


def random_state(rng: np.random.Generator, dim: int = 4, rank: int | None = None) -> DensityMatrix:
    """Ginibre-distributed density matrix of the given rank (random rank if omitted)."""
    if rank is None:
        rank = int(rng.integers(1, dim + 1))
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    g = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    return DensityMatrix.from_unnormalized(g @ g.conj().T)
