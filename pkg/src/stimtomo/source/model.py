"""Ground-truth model of the sandwich SPDC source and its stimulated response.

The spontaneous two-photon state is

    rho[HH,HH] = alpha_sq, rho[VV,VV] = 1 - alpha_sq,
    rho[HH,VV] = gamma * sqrt(alpha_sq (1 - alpha_sq)) * exp(i phi(theta)),

with phi(theta) = phase0 + phase_slope * theta (theta in mrad) and gamma the
coherence left after temporal compensation. Stimulated (DFG) light in the
idler is the two-photon state contracted with the seed on the signal side.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import NDArray

from stimtomo.config import require, require_finite
from stimtomo.errors import ConfigError, DegenerateLossError
from stimtomo.quantum.core import HH, VV, DensityMatrix
from stimtomo.quantum.polarization import JonesVector, PolLabel, density_of, jones_of

logger = logging.getLogger(__name__)

MIN_QUADRATURE_NODES = 33


@dataclass(frozen=True)
class SourceConfig:
    """Parameterization of the simulated SPDC/DFG source.

    Angles in external formats are mrad; phase_slope is rad per mrad.
    """

    alpha_sq: float = 0.5
    phase0: float = 0.0
    decoherence: float = 1.0
    phase_slope: float = 0.312
    emission_sigma_mrad: float = 3.5
    collection_halfwidth_mrad: float = 5.0
    wavelength_nm: float = 800.0
    waist_qst_um: float = 50.0
    waist_seed_um: float = 1000.0
    # Absolute powers are metadata for the logs; probabilities are ratios.
    seed_power_mw: float = 150.0
    stimulated_power_uw: float = 100.0
    quadrature_nodes: int = MIN_QUADRATURE_NODES
    # compensation-crystal rotation (deg) -> decoherence gamma
    decoherence_table: dict[float, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        require(0.0 <= self.alpha_sq <= 1.0, "alpha_sq", "must lie in [0, 1]")
        require(0.0 <= self.decoherence <= 1.0, "decoherence", "must lie in [0, 1]")
        require_finite(self.phase0, "phase0")
        require_finite(self.phase_slope, "phase_slope")
        require(self.emission_sigma_mrad > 0, "emission_sigma_mrad", "must be positive")
        require(
            self.collection_halfwidth_mrad > 0, "collection_halfwidth_mrad", "must be positive"
        )
        require(self.wavelength_nm > 0, "wavelength_nm", "must be positive")
        require(self.waist_qst_um > 0, "waist_qst_um", "must be positive")
        require(self.waist_seed_um > 0, "waist_seed_um", "must be positive")
        require(
            self.quadrature_nodes >= MIN_QUADRATURE_NODES,
            "quadrature_nodes",
            f"must be at least {MIN_QUADRATURE_NODES}",
        )
        for angle, gamma in self.decoherence_table.items():
            require(
                0.0 <= gamma <= 1.0, "decoherence_table", f"gamma at {angle} deg must lie in [0, 1]"
            )

    def phase_at(self, theta_mrad: float) -> float:
        """phi(theta) in radians."""
        return self.phase0 + self.phase_slope * theta_mrad

    def derived_collection_halfwidth(self, waist_um: float | None = None) -> float:
        """lambda / (pi w) in mrad for the QST waist (or the given waist)."""
        waist = self.waist_qst_um if waist_um is None else waist_um
        return derived_halfwidth_mrad(self.wavelength_nm, waist)

    @property
    def sigma_eff_mrad(self) -> float:
        """Width of the product of the emission and collection Gaussians."""
        return float(
            (self.emission_sigma_mrad**-2 + self.collection_halfwidth_mrad**-2) ** -0.5
        )

    def with_crystal_rotation(self, degrees: float) -> SourceConfig:
        """Copy with gamma looked up from the compensation-crystal table."""
        require(bool(self.decoherence_table), "decoherence_table", "no calibration table given")
        angles = np.array(sorted(self.decoherence_table))
        gammas = np.array([self.decoherence_table[a] for a in angles])
        gamma = float(np.interp(degrees, angles, gammas))
        return dataclasses.replace(self, decoherence=gamma)

    def replace(self, **overrides: Any) -> SourceConfig:
        unknown = set(overrides) - {f.name for f in dataclasses.fields(self)}
        require(not unknown, ",".join(sorted(unknown)), "not a SourceConfig field")
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary."""
        return {
            "alpha_sq": self.alpha_sq,
            "phase0": self.phase0,
            "decoherence": self.decoherence,
            "phase_slope": self.phase_slope,
            "emission_sigma_mrad": self.emission_sigma_mrad,
            "collection_halfwidth_mrad": self.collection_halfwidth_mrad,
            "wavelength_nm": self.wavelength_nm,
            "waist_qst_um": self.waist_qst_um,
            "waist_seed_um": self.waist_seed_um,
            "seed_power_mw": self.seed_power_mw,
            "stimulated_power_uw": self.stimulated_power_uw,
            "quadrature_nodes": self.quadrature_nodes,
            "decoherence_table": {str(k): v for k, v in self.decoherence_table.items()},
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SourceConfig:
        """Create a SourceConfig from a JSON mapping.

        ``collection_halfwidth_mrad`` may be the string ``"derived"``, in which
        case it is computed from the wavelength and the QST waist.
        """
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        require(not unknown, ",".join(sorted(unknown)), "unknown SourceConfig field")
        try:
            wavelength = float(data.get("wavelength_nm", 800.0))
            waist_qst = float(data.get("waist_qst_um", 50.0))
            halfwidth_raw = data.get("collection_halfwidth_mrad", 5.0)
            if halfwidth_raw == "derived":
                halfwidth = derived_halfwidth_mrad(wavelength, waist_qst)
            else:
                halfwidth = float(halfwidth_raw)
            table = {
                float(k): float(v) for k, v in (data.get("decoherence_table") or {}).items()
            }
            return cls(
                alpha_sq=float(data.get("alpha_sq", 0.5)),
                phase0=float(data.get("phase0", 0.0)),
                decoherence=float(data.get("decoherence", 1.0)),
                phase_slope=float(data.get("phase_slope", 0.312)),
                emission_sigma_mrad=float(data.get("emission_sigma_mrad", 3.5)),
                collection_halfwidth_mrad=halfwidth,
                wavelength_nm=wavelength,
                waist_qst_um=waist_qst,
                waist_seed_um=float(data.get("waist_seed_um", 1000.0)),
                seed_power_mw=float(data.get("seed_power_mw", 150.0)),
                stimulated_power_uw=float(data.get("stimulated_power_uw", 100.0)),
                quadrature_nodes=int(data.get("quadrature_nodes", MIN_QUADRATURE_NODES)),
                decoherence_table=table,
            )
        except (TypeError, ValueError) as e:
            raise ConfigError("source", f"malformed value: {e}") from e


@dataclass(frozen=True)
class SeedDistortion:
    """Birefringent phase and amplitude imbalance picked up by the seed."""

    birefringent_phase: float = 0.0
    amp_ratio: float = 1.0

    def __post_init__(self) -> None:
        require_finite(self.birefringent_phase, "birefringent_phase")
        require(
            np.isfinite(self.amp_ratio) and self.amp_ratio > 0,
            "amp_ratio",
            "must be finite and positive",
        )

    def apply(self, seed: JonesVector) -> JonesVector:
        """|a|H + |b|e^{i phase}V with |a|/|b| scaled by amp_ratio, renormalized."""
        return JonesVector.normalized(
            self.amp_ratio * seed.h, np.exp(1j * self.birefringent_phase) * seed.v
        )

    def to_dict(self) -> dict[str, Any]:
        return {"birefringent_phase": self.birefringent_phase, "amp_ratio": self.amp_ratio}

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> SeedDistortion:
        data = data or {}
        return cls(
            birefringent_phase=float(data.get("birefringent_phase", 0.0)),
            amp_ratio=float(data.get("amp_ratio", 1.0)),
        )


@dataclass(frozen=True)
class PdlConfig:
    """Amplitude transmissions (t_H, t_V) of the seed-detection and idler paths."""

    signal_loss_hv: tuple[float, float] = (1.0, 1.0)
    idler_loss_hv: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        for name in ("signal_loss_hv", "idler_loss_hv"):
            values = tuple(float(x) for x in getattr(self, name))
            require(len(values) == 2, name, "needs two transmissions (t_H, t_V)")
            require(all(0.0 < t <= 1.0 for t in values), name, "transmissions must lie in (0, 1]")
            object.__setattr__(self, name, values)

    def to_dict(self) -> dict[str, Any]:
        return {
            "signal_loss_hv": list(self.signal_loss_hv),
            "idler_loss_hv": list(self.idler_loss_hv),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any] | None) -> PdlConfig:
        data = data or {}
        return cls(
            signal_loss_hv=tuple(data.get("signal_loss_hv", (1.0, 1.0))),  # type: ignore[arg-type]
            idler_loss_hv=tuple(data.get("idler_loss_hv", (1.0, 1.0))),  # type: ignore[arg-type]
        )


@dataclass(frozen=True)
class StimulatedResponse:
    """Result of seeding the source with one polarization."""

    idler_state: DensityMatrix
    seed_detected: DensityMatrix
    gain: float  # relative stimulated intensity (pre-normalization trace)
    seed_transmission: float  # fraction of the seed surviving the signal path


@dataclass(frozen=True)
class PdlRatios:
    """H/V intensity ratios of the detected seed and the stimulated idler."""

    r_signal: float
    r_idler: float


def derived_halfwidth_mrad(wavelength_nm: float, waist_um: float) -> float:
    """Collected transverse-momentum range lambda / (pi w), in mrad."""
    return float(wavelength_nm * 1e-9 / (np.pi * waist_um * 1e-6) * 1e3)


def true_state(cfg: SourceConfig, theta_mrad: float = 0.0) -> DensityMatrix:
    """Two-photon polarization state emitted at angle theta."""
    rho = np.zeros((4, 4), dtype=complex)
    rho[HH, HH] = cfg.alpha_sq
    rho[VV, VV] = 1.0 - cfg.alpha_sq
    coherence = (
        cfg.decoherence
        * np.sqrt(cfg.alpha_sq * (1.0 - cfg.alpha_sq))
        * np.exp(1j * cfg.phase_at(theta_mrad))
    )
    rho[HH, VV] = coherence
    rho[VV, HH] = np.conj(coherence)
    return DensityMatrix(rho)


def angular_weight(cfg: SourceConfig) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Gauss-Legendre nodes (mrad) and normalized weights of the angular average.

    The weight is a Gaussian of width sigma_eff truncated at the collection
    half-width.
    """
    x, w = np.polynomial.legendre.leggauss(cfg.quadrature_nodes)
    half = cfg.collection_halfwidth_mrad
    nodes = half * x
    weights = half * w * np.exp(-(nodes**2) / (2.0 * cfg.sigma_eff_mrad**2))
    return nodes, weights / weights.sum()


def angle_averaged_state(cfg: SourceConfig) -> DensityMatrix:
    """State seen by a detector integrating over the collected emission angles."""
    nodes, weights = angular_weight(cfg)
    total = np.zeros((4, 4), dtype=complex)
    for theta, weight in zip(nodes, weights, strict=True):
        total += weight * true_state(cfg, float(theta)).matrix
    return DensityMatrix.from_unnormalized(total)


def angular_weight_at(cfg: SourceConfig, theta_mrad: NDArray[np.float64] | float) -> Any:
    """Unnormalized angular weight; zero outside the collection half-width."""
    theta = np.asarray(theta_mrad, dtype=float)
    weight = np.exp(-(theta**2) / (2.0 * cfg.sigma_eff_mrad**2))
    return np.where(np.abs(theta) <= cfg.collection_halfwidth_mrad, weight, 0.0)


def coupling_envelope(cfg: SourceConfig, theta_mrad: NDArray[np.float64] | float) -> Any:
    """Product of the signal-coupling and idler (phase-matching) Gaussians."""
    theta = np.asarray(theta_mrad, dtype=float)
    signal = np.exp(-(theta**2) / (2.0 * cfg.collection_halfwidth_mrad**2))
    idler = np.exp(-(theta**2) / (2.0 * cfg.emission_sigma_mrad**2))
    return signal * idler


def _path_loss(state: np.ndarray, loss_hv: tuple[float, float]) -> np.ndarray:
    k = np.diag(np.asarray(loss_hv, dtype=complex))
    return k @ state @ k


def stimulated_response(
    cfg: SourceConfig,
    seed: JonesVector,
    theta_mrad: float = 0.0,
    distortion: SeedDistortion | None = None,
    pdl: PdlConfig | None = None,
) -> StimulatedResponse:
    """Idler state, detected seed state and relative gain for one seed at angle theta."""
    return seeded_response(true_state(cfg, theta_mrad), seed, distortion, pdl)


def seeded_response(
    rho: DensityMatrix,
    seed: JonesVector,
    distortion: SeedDistortion | None = None,
    pdl: PdlConfig | None = None,
) -> StimulatedResponse:
    """Stimulated response of an arbitrary two-photon state to one seed.

    The distorted seed is contracted against the signal side of rho;
    because the seed ket is the conjugate of its Jones vector this is the
    phase-conjugate seeding that sends R to L. Signal-path PDL acts only on
    the detected seed, idler-path PDL only on the stimulated light.

    Raises:
        DegenerateLossError: If losses remove all of the light
    """
    distortion = distortion or SeedDistortion()
    pdl = pdl or PdlConfig()
    coupled = distortion.apply(seed)
    seed_state = density_of(coupled).matrix

    if rho.dim != 4:
        raise ValueError("seeding needs a two-photon state")
    blocks = rho.matrix.reshape(2, 2, 2, 2)
    conditional = np.einsum("ab,biaj->ij", seed_state, blocks)
    spontaneous_gain = float(np.trace(conditional).real)

    detected = _path_loss(seed_state, pdl.signal_loss_hv)
    seed_transmission = float(np.trace(detected).real)
    if seed_transmission <= 0.0:
        raise DegenerateLossError("signal-path loss removed the whole seed")
    seed_detected = DensityMatrix.from_unnormalized(detected)

    if spontaneous_gain <= 0.0:
        # Nothing is stimulated (e.g. a V seed on |HH>); the idler carries no light.
        return StimulatedResponse(
            idler_state=DensityMatrix.maximally_mixed(2),
            seed_detected=seed_detected,
            gain=0.0,
            seed_transmission=seed_transmission,
        )

    idler = _path_loss(conditional, pdl.idler_loss_hv)
    gain = float(np.trace(idler).real)
    if gain <= 0.0:
        raise DegenerateLossError("idler-path loss removed all stimulated light")
    return StimulatedResponse(
        idler_state=DensityMatrix.from_unnormalized(idler),
        seed_detected=seed_detected,
        gain=gain,
        seed_transmission=seed_transmission,
    )


def pdl_ratio(cfg: SourceConfig, pdl: PdlConfig, theta_mrad: float = 0.0) -> PdlRatios:
    """R_{s_H/s_V} and R_{i_H/i_V} for a diagonally polarized seed."""
    response = stimulated_response(cfg, jones_of(PolLabel.D), theta_mrad, pdl=pdl)
    seed = response.seed_detected.matrix
    idler = response.idler_state.matrix
    return PdlRatios(
        r_signal=float(seed[0, 0].real / seed[1, 1].real),
        r_idler=float(idler[0, 0].real / idler[1, 1].real),
    )


def transmissions_for_ratio(ratio: float) -> tuple[float, float]:
    """(t_H, t_V) with (t_H / t_V)^2 = ratio and the larger transmission 1."""
    require(ratio > 0, "ratio", "must be positive")
    if ratio >= 1.0:
        return (1.0, float(1.0 / np.sqrt(ratio)))
    return (float(np.sqrt(ratio)), 1.0)


def pdl_for_ratios(r_signal: float, r_idler: float) -> PdlConfig:
    """PdlConfig giving the target H/V intensity ratios for a D seed on a Bell source."""
    return PdlConfig(
        signal_loss_hv=transmissions_for_ratio(r_signal),
        idler_loss_hv=transmissions_for_ratio(r_idler),
    )
