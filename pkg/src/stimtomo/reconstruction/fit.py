"""Physical least-squares fit of a two-photon density matrix.

rho is parameterized as T T^dagger / Tr(T T^dagger) with T lower triangular,
so every candidate is a valid state. The cost is

    C(t) = sum_k w_k (p_k(t) - P_k)^2,    p_k = Tr[O_k M] / Tr[G_k M],  M = T T^dagger

where G_k is the identity (plain trace normalization) or the sum of the
operators of k's basis-pair group when the data were group-normalized.
"""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import minimize

from stimtomo.config import require
from stimtomo.errors import InvalidStateError, NonConvergenceError, UnderdeterminedError
from stimtomo.quantum.core import (
    ComplexMatrix,
    DensityMatrix,
    bell_state,
    concurrence,
    density_to_params,
    fidelity,
    lower_indices,
    param_count,
    params_to_density,
    params_to_triangular,
    phase_hh_vv,
    project_psd,
    purity,
)
from stimtomo.quantum.polarization import MeasurementSetting, group_key
from stimtomo.reconstruction.probabilities import ProbabilityTable

logger = logging.getLogger(__name__)

FULL_RANK = 16
# scipy.optimize.minimize status for "maximum number of iterations exceeded"
_STATUS_MAXITER = 1

_PAULIS = (
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)
PAULI_BASIS: tuple[ComplexMatrix, ...] = tuple(np.kron(a, b) for a in _PAULIS for b in _PAULIS)

INIT_METHODS = ("linear_inversion", "mixed", "random")


@dataclass(frozen=True)
class FitOptions:
    """Optimizer settings. ``restarts`` random starts follow the ``init`` start."""

    max_iterations: int = 2000
    gradient_tolerance: float = 1e-10
    restarts: int = 5
    init: str = "linear_inversion"
    seed: int = 0

    def __post_init__(self) -> None:
        require(self.max_iterations > 0, "max_iterations", "must be positive")
        require(self.gradient_tolerance > 0, "gradient_tolerance", "must be positive")
        require(self.restarts >= 0, "restarts", "must be nonnegative")
        require(self.init in INIT_METHODS, "init", f"must be one of {', '.join(INIT_METHODS)}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_iterations": self.max_iterations,
            "gradient_tolerance": self.gradient_tolerance,
            "restarts": self.restarts,
            "init": self.init,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> FitOptions:
        data = data or {}
        return cls(
            max_iterations=int(data.get("max_iterations", 2000)),
            gradient_tolerance=float(data.get("gradient_tolerance", 1e-10)),
            restarts=int(data.get("restarts", 5)),
            init=str(data.get("init", "linear_inversion")),
            seed=int(data.get("seed", 0)),
        )


def operator_hash(operator: ComplexMatrix) -> str:
    """Short stable digest of an operator (rounded to 12 decimals)."""
    rounded = np.round(np.asarray(operator, dtype=complex), 12) + 0.0
    return hashlib.sha256(np.ascontiguousarray(rounded).tobytes()).hexdigest()[:16]


def state_metrics(rho: DensityMatrix) -> dict[str, float]:
    """Purity, concurrence, fidelity to (|HH>+|VV>)/sqrt(2) and the HH-VV phase."""
    return {
        "purity": purity(rho),
        "concurrence": concurrence(rho),
        "fidelity_vs_bell": fidelity(rho, bell_state()),
        "phase_hh_vv": phase_hh_vv(rho),
    }


@dataclass
class ReconstructionResult:
    """A fitted state with the inputs that produced it."""

    rho: DensityMatrix
    residual: float
    iterations: int
    settings: list[MeasurementSetting]
    probabilities: list[float]
    operators: list[ComplexMatrix]
    operator_kind: str = "ideal"  # ideal | rotated | naive
    converged: bool = True
    restart_index: int = 0
    metrics: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.metrics:
            self.metrics = state_metrics(self.rho)

    def audit(self) -> list[dict[str, Any]]:
        """(setting, probability, operator hash) for every fitted datum."""
        return [
            {"setting": str(s), "probability": p, "operator_hash": operator_hash(op)}
            for s, p, op in zip(self.settings, self.probabilities, self.operators, strict=True)
        ]

    def to_dict(self) -> dict[str, Any]:
        """Convert to a JSON-ready dictionary."""
        return {
            "rho": self.rho.to_dict(),
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "restart_index": self.restart_index,
            "operators": self.operator_kind,
            "metrics": dict(self.metrics),
            "audit": self.audit(),
        }


def _stack(operators: Sequence[ComplexMatrix]) -> NDArray[np.complex128]:
    ops = np.asarray(operators, dtype=complex)
    if ops.ndim != 3 or ops.shape[1:] != (4, 4):
        raise ValueError("operators must be a sequence of 4x4 matrices")
    return ops


def _params_gradient(a: ComplexMatrix, tri: ComplexMatrix) -> NDArray[np.float64]:
    """d Tr[A T T^dagger] / dt for Hermitian A: Re/Im of 2 A T at the parameter slots."""
    b = 2.0 * (a @ tri)
    dim = tri.shape[0]
    grad = np.empty(param_count(dim))
    grad[:dim] = np.real(np.diag(b))
    for k, (r, c) in enumerate(lower_indices(dim)):
        grad[dim + 2 * k] = b[r, c].real
        grad[dim + 2 * k + 1] = b[r, c].imag
    return grad


def cost_and_gradient(
    params: NDArray[np.float64],
    operators: Sequence[ComplexMatrix] | NDArray[np.complex128],
    probabilities: Sequence[float] | NDArray[np.float64],
    weights: Sequence[float] | NDArray[np.float64] | None = None,
    normalizers: Sequence[ComplexMatrix] | NDArray[np.complex128] | None = None,
) -> tuple[float, NDArray[np.float64]]:
    """Weighted least-squares cost and its analytic gradient in the triangular parameters.

    Args:
        params: 16 triangular parameters
        operators: O_k, aligned with ``probabilities``
        probabilities: Measured P_k
        weights: w_k (default 1)
        normalizers: G_k; None means trace normalization (G_k = I)
    """
    ops = _stack(operators)
    target = np.asarray(probabilities, dtype=float)
    w = np.ones(len(target)) if weights is None else np.asarray(weights, dtype=float)

    tri = params_to_triangular(params, 4)
    m = tri @ tri.conj().T
    f = np.einsum("kij,ji->k", ops, m).real
    tiny = np.finfo(float).tiny
    if normalizers is None:
        g_scalar = max(float(np.trace(m).real), tiny)
        g = np.full(len(target), g_scalar)
    else:
        norms = _stack(normalizers)
        g = np.maximum(np.einsum("kij,ji->k", norms, m).real, tiny)

    residuals = f / g - target
    cost = float(np.sum(w * residuals**2))

    c = 2.0 * w * residuals
    a = np.einsum("k,kij->ij", c / g, ops)
    if normalizers is None:
        a -= np.sum(c * f / g**2) * np.eye(4)
    else:
        a -= np.einsum("k,kij->ij", c * f / g**2, norms)
    return cost, _params_gradient(a, tri)


def group_normalizers(
    settings: Sequence[MeasurementSetting], operators: Sequence[ComplexMatrix]
) -> list[ComplexMatrix] | None:
    """Sum of the operators in each setting's basis-pair group.

    Returns None unless every group is complete (four members).
    """
    sums: dict[str, ComplexMatrix] = {}
    sizes: dict[str, int] = {}
    for setting, op in zip(settings, operators, strict=True):
        key = group_key(setting)
        sums[key] = sums.get(key, np.zeros((4, 4), dtype=complex)) + op
        sizes[key] = sizes.get(key, 0) + 1
    if any(size != 4 for size in sizes.values()):
        return None
    return [sums[group_key(s)] for s in settings]


def inverse_variance_weights(probs: ProbabilityTable) -> NDArray[np.float64]:
    """w = N / max(P(1 - P), 1/N) per setting, rescaled to unit mean.

    N is the total count of the setting's basis pair.
    """
    settings = probs.settings()
    weights = np.empty(len(settings))
    for k, setting in enumerate(settings):
        n = probs.totals.get(group_key(setting))
        require(n is not None and n > 0, "weights", "inverse-variance weighting needs counts")
        p = probs.entries[setting]
        weights[k] = n / max(p * (1.0 - p), 1.0 / n)  # type: ignore[operator]
    return weights / weights.mean()


def _check_rank(ops: NDArray[np.complex128]) -> None:
    flat = ops.reshape(len(ops), -1)
    rank = int(np.linalg.matrix_rank(flat, tol=1e-10))
    if rank < FULL_RANK:
        raise UnderdeterminedError(
            f"measurement operators span rank {rank} of the {FULL_RANK}-dim operator space"
        )


def linear_inversion(
    probs: ProbabilityTable,
    operators: Sequence[ComplexMatrix],
    weights: NDArray[np.float64] | None = None,
) -> DensityMatrix:
    """Least-squares solve of Tr[O_k rho] = P_k in the Pauli-product basis, made physical.

    Raises:
        UnderdeterminedError: If the operators do not span the operator space
    """
    ops = _stack(operators)
    target = np.array([probs.entries[s] for s in probs.settings()])
    design = np.array([[np.trace(op @ b).real / 4.0 for b in PAULI_BASIS] for op in ops])
    if weights is not None:
        root = np.sqrt(np.asarray(weights, dtype=float))
        design = design * root[:, None]
        target = target * root
    coefficients, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
    if rank < FULL_RANK:
        raise UnderdeterminedError(f"linear inversion has rank {rank}, need {FULL_RANK}")
    estimate = sum(x * b for x, b in zip(coefficients, PAULI_BASIS, strict=True)) / 4.0
    return project_psd(estimate)


def _initial_params(
    opts: FitOptions, index: int, probs: ProbabilityTable, ops: NDArray[np.complex128],
    weights: NDArray[np.float64] | None,
) -> NDArray[np.float64]:
    method = opts.init if index == 0 else "random"
    if method == "linear_inversion":
        try:
            return density_to_params(linear_inversion(probs, list(ops), weights))
        except InvalidStateError as e:
            logger.debug("Linear inversion start unusable (%s); using the mixed state", e)
            method = "mixed"
    if method == "mixed":
        return density_to_params(np.eye(4) / 4.0)
    rng = np.random.default_rng([opts.seed, index])
    return rng.standard_normal(param_count(4))


def fit_least_squares(
    probs: ProbabilityTable,
    operators: Sequence[ComplexMatrix],
    opts: FitOptions | None = None,
    weights: NDArray[np.float64] | None = None,
    normalizers: Sequence[ComplexMatrix] | None = None,
    operator_kind: str = "ideal",
) -> ReconstructionResult:
    """Fit the physical state closest (in the weighted cost) to ``probs``.

    ``operators`` are aligned with ``probs.settings()``. The best of
    1 + ``opts.restarts`` quasi-Newton runs is returned; ties go to the
    lowest start index.

    Raises:
        UnderdeterminedError: If the operator set is rank-deficient
        NonConvergenceError: If the best run hit max_iterations; the
            partial result rides on the exception
    """
    opts = opts or FitOptions()
    settings = probs.settings()
    ops = _stack(operators)
    if len(ops) != len(settings):
        raise ValueError(f"{len(ops)} operators for {len(settings)} probabilities")
    if len(ops) < FULL_RANK:
        raise UnderdeterminedError(f"need at least {FULL_RANK} settings, got {len(ops)}")
    _check_rank(ops)

    target = np.array([probs.entries[s] for s in settings])
    norms = None if normalizers is None else _stack(normalizers)

    best: tuple[float, int, Any] | None = None
    for index in range(opts.restarts + 1):
        x0 = _initial_params(opts, index, probs, ops, weights)
        run = minimize(
            cost_and_gradient,
            x0,
            args=(ops, target, weights, norms),
            jac=True,
            method="BFGS",
            options={"gtol": opts.gradient_tolerance, "maxiter": opts.max_iterations},
        )
        logger.debug(
            "Fit start %d: cost=%.3e nit=%d status=%d", index, run.fun, run.nit, run.status
        )
        if best is None or run.fun < best[0]:
            best = (float(run.fun), index, run)

    assert best is not None
    residual, index, run = best
    result = ReconstructionResult(
        rho=params_to_density(run.x, 4),
        residual=max(residual, 0.0),
        iterations=int(run.nit),
        settings=settings,
        probabilities=[float(p) for p in target],
        operators=[np.array(op) for op in ops],
        operator_kind=operator_kind,
        converged=bool(run.status != _STATUS_MAXITER),
        restart_index=index,
    )
    if not result.converged:
        raise NonConvergenceError(
            f"fit did not converge within {opts.max_iterations} iterations "
            f"(residual {residual:.3e})",
            result=result,
        )
    return result
