"""Domain types and derived physical parameters.

All rates are angular frequencies in rad/s, all times in seconds. Ground
levels are indexed j = 1..3 and excited levels by an explicit index list
(k = 4..9 for the nine-level NV scheme). Coupling matrices are stored with
row j-1 and one column per retained excited level.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.constants as const

from .errors import InvalidInputError

N_GROUND = 3

T5_VALIDITY_MAX_K = 100.0


@dataclass(frozen=True)
class LevelScheme:
    """Level structure: ground splittings and excited detunings.

    delta is the splitting between ground levels 2 and 3; omega22/omega33
    are the ground eigenfrequencies relative to level 1. detunings maps
    each excited index k to Delta_k, the offset of the k-th excited level
    from the cavity-resonant transition.
    """

    excited_indices: tuple[int, ...]
    delta: float
    omega22: float
    omega33: float
    detunings: dict[int, float]
    n_ground: int = N_GROUND

    def __post_init__(self):
        if self.n_ground != N_GROUND:
            raise InvalidInputError("only 3 ground levels are supported")
        if self.delta < 0:
            raise InvalidInputError("ground splitting delta must be >= 0")
        ks = tuple(self.excited_indices)
        if len(set(ks)) != len(ks):
            raise InvalidInputError("excited indices must be distinct")
        if any(k <= self.n_ground for k in ks):
            raise InvalidInputError("excited indices must not overlap ground indices")
        if set(self.detunings) != set(ks):
            raise InvalidInputError("detunings must cover exactly the excited indices")

    @property
    def n_excited(self) -> int:
        return len(self.excited_indices)

    def column(self, k: int) -> int:
        """Matrix column of excited level k."""
        return self.excited_indices.index(k)

    def detuning_array(self) -> np.ndarray:
        return np.array([self.detunings[k] for k in self.excited_indices], float)


@dataclass(frozen=True)
class CouplingSet:
    """Cavity coupling rates G_jk and control Rabi rates Omega_jk.

    Entries may be real, imaginary or complex. The desired masks mark the
    intended Lambda transitions; everything else is an unwanted coupling.
    """

    cavity: np.ndarray        # G_jk [rad/s], shape (3, n_excited)
    control: np.ndarray       # Omega_jk [rad/s], shape (3, n_excited)
    desired_cavity: np.ndarray    # bool, same shape
    desired_control: np.ndarray   # bool, same shape

    def __post_init__(self):
        shape = self.cavity.shape
        for name in ("control", "desired_cavity", "desired_control"):
            if getattr(self, name).shape != shape:
                raise InvalidInputError(f"coupling matrix '{name}' has shape "
                                        f"{getattr(self, name).shape}, expected {shape}")
        object.__setattr__(self, "cavity", np.asarray(self.cavity, complex))
        object.__setattr__(self, "control", np.asarray(self.control, complex))
        object.__setattr__(self, "desired_cavity", np.asarray(self.desired_cavity, bool))
        object.__setattr__(self, "desired_control", np.asarray(self.desired_control, bool))

    def validate_against(self, levels: LevelScheme) -> None:
        if self.cavity.shape != (levels.n_ground, levels.n_excited):
            raise InvalidInputError(
                f"coupling matrices are {self.cavity.shape}, scheme needs "
                f"({levels.n_ground}, {levels.n_excited})")


KAPPA_CONVENTION = "omega_c_over_Q"


@dataclass(frozen=True)
class CavityParams:
    """Cavity geometry and its derived rates.

    Conventions (echoed into every serialized config so results stay
    auditable):
      omega_c = 2*pi*c*n / wavelength
      kappa   = omega_c / Q              (amplitude decay in adot = -kappa*a)
      volume  = volume_scale * (wavelength / n)**3  unless volume_m3 is given
      g_c     = d_z * sqrt(omega_c / (2 V hbar eps)),  eps = n**2 * eps0
    Explicit kappa_rad_per_s overrides the Q-derived value.
    """

    wavelength: float
    refractive_index: float
    quality_factor: float
    volume_scale: float
    dipole_moment: float
    volume_m3: float | None = None        # explicit override of the mode volume
    kappa_rad_per_s: float | None = None  # explicit override of the decay rate

    def __post_init__(self):
        if self.quality_factor <= 0:
            raise InvalidInputError("quality factor must be positive")
        if self.volume_scale <= 0:
            raise InvalidInputError("cavity volume scaling factor must be positive")
        if self.wavelength <= 0:
            raise InvalidInputError("wavelength must be positive")
        if self.kappa_rad_per_s is not None and self.kappa_rad_per_s <= 0:
            raise InvalidInputError("kappa override must be positive")

    @property
    def omega_c(self) -> float:
        return 2.0 * np.pi * const.c * self.refractive_index / self.wavelength

    @property
    def kappa(self) -> float:
        if self.kappa_rad_per_s is not None:
            return self.kappa_rad_per_s
        return self.omega_c / self.quality_factor

    @property
    def volume(self) -> float:
        if self.volume_m3 is not None:
            return self.volume_m3
        return self.volume_scale * (self.wavelength / self.refractive_index) ** 3

    @property
    def g_c(self) -> float:
        eps = self.refractive_index ** 2 * const.epsilon_0
        return self.dipole_moment * np.sqrt(
            self.omega_c / (2.0 * self.volume * const.hbar * eps))


@dataclass(frozen=True)
class RelaxationParams:
    """Dephasing rates and the T^5 optical-decoherence model.

    gamma_d is Gamma(T)/2 with Gamma(T) = gamma0 + c*r*T^5 when the
    temperature model is active; a direct gamma_d override bypasses it
    (used for non-solid-state systems).
    """

    gamma_s: float                 # spin inhomogeneous broadening [rad/s]
    gamma_e: float                 # optical inhomogeneous broadening [rad/s]
    temperature: float             # [K]
    gamma0: float                  # zero-T homogeneous linewidth [rad/s]
    c_coeff: float                 # [K^-5]
    r_rate: float                  # [1/s]
    gamma_r: float                 # radiative decay, cooperativity only [rad/s]
    gamma_d_override: float | None = None

    def __post_init__(self):
        for name in ("gamma_s", "gamma_e", "gamma0", "gamma_r"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be >= 0")
        if self.temperature < 0:
            raise InvalidInputError("temperature must be >= 0")

    @property
    def gamma_d(self) -> float:
        if self.gamma_d_override is not None:
            return self.gamma_d_override
        return 0.5 * homogeneous_linewidth(self)


@dataclass(frozen=True)
class EnsembleParams:
    """Emitter count and the population closure rule."""

    n_emitters: int
    population_closure: str = "fixed"   # level-2 population pinned at N

    def __post_init__(self):
        if self.n_emitters < 1:
            raise InvalidInputError("ensemble needs at least one emitter")
        if self.population_closure != "fixed":
            raise InvalidInputError(
                f"population closure '{self.population_closure}' not implemented")


@dataclass(frozen=True)
class SystemSpec:
    """Complete physical description of one memory system."""

    name: str
    levels: LevelScheme
    couplings: CouplingSet
    cavity: CavityParams
    relaxation: RelaxationParams
    ensemble: EnsembleParams
    include_level1: bool = True
    # Coherences sigma'_jk excluded from the dynamical state, as (j, k) pairs.
    dropped_pairs: tuple[tuple[int, int], ...] = ()
    # Couplings kept in the tables (serialized verbatim) but zeroed in the
    # dynamics; entries ("G"|"Omega", j, k).
    inactive_couplings: tuple[tuple[str, int, int], ...] = ()
    table_units: str = "angular"   # declared interpretation of coupling tables
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.couplings.validate_against(self.levels)
        if self.table_units not in ("angular", "cyclic"):
            raise InvalidInputError("table_units must be 'angular' or 'cyclic'")
        for (j, k) in self.dropped_pairs:
            if not (1 <= j <= self.levels.n_ground) or k not in self.levels.excited_indices:
                raise InvalidInputError(f"dropped pair ({j},{k}) is out of range")
        for (mat, j, k) in self.inactive_couplings:
            if mat not in ("G", "Omega"):
                raise InvalidInputError(f"inactive coupling matrix '{mat}' unknown")
            if not (1 <= j <= self.levels.n_ground) or k not in self.levels.excited_indices:
                raise InvalidInputError(f"inactive coupling ({mat},{j},{k}) out of range")

    def effective_couplings(self) -> tuple[np.ndarray, np.ndarray]:
        """Coupling matrices as used by the dynamics.

        Rows for level 1 are zeroed when the level-1 block is disabled;
        inactive entries are zeroed; under the 'cyclic' table convention
        every entry picks up 2*pi.
        """
        scale = 2.0 * np.pi if self.table_units == "cyclic" else 1.0
        G = scale * self.couplings.cavity.copy()
        Om = scale * self.couplings.control.copy()
        if not self.include_level1:
            G[0, :] = 0.0
            Om[0, :] = 0.0
        for (mat, j, k) in self.inactive_couplings:
            col = self.levels.column(k)
            if mat == "G":
                G[j - 1, col] = 0.0
            else:
                Om[j - 1, col] = 0.0
        return G, Om

    def desired_lambda(self) -> tuple[int, int, int]:
        """(signal ground, control ground, shared excited) of the desired Lambda.

        Raises when the desired masks do not single out one excited level
        coupled to two distinct ground levels.
        """
        gj, gk = np.nonzero(self.couplings.desired_cavity)
        cj, ck = np.nonzero(self.couplings.desired_control)
        if len(gj) != 1 or len(cj) != 1:
            raise InvalidInputError("desired masks must mark exactly one cavity "
                                    "and one control coupling")
        k_sig = self.levels.excited_indices[gk[0]]
        k_ctl = self.levels.excited_indices[ck[0]]
        if k_sig != k_ctl or gj[0] == cj[0]:
            raise InvalidInputError("desired couplings do not form a Lambda")
        return int(gj[0] + 1), int(cj[0] + 1), int(k_sig)

    def desired_only(self) -> "SystemSpec":
        """Copy with every unwanted coupling removed (ideal-memory ablation)."""
        G = np.where(self.couplings.desired_cavity, self.couplings.cavity, 0.0)
        Om = np.where(self.couplings.desired_control, self.couplings.control, 0.0)
        coup = CouplingSet(G, Om, self.couplings.desired_cavity,
                           self.couplings.desired_control)
        return replace(self, name=self.name + "-ideal", couplings=coup)


def homogeneous_linewidth(relax: RelaxationParams) -> float:
    """Temperature-dependent homogeneous linewidth Gamma(T) [rad/s].

    Gamma(T) = gamma0 + c*r*T^5. The T^5 law is documented up to 100 K;
    above that the formula value is still returned but a warning is issued.
    """
    T = relax.temperature
    if T < 0:
        raise InvalidInputError("temperature must be >= 0")
    if T > T5_VALIDITY_MAX_K:
        warnings.warn(f"T={T} K exceeds the {T5_VALIDITY_MAX_K:.0f} K validity "
                      "range of the T^5 linewidth model", stacklevel=2)
    return relax.gamma0 + relax.c_coeff * relax.r_rate * T ** 5


@dataclass(frozen=True)
class DerivedCavity:
    """Derived cavity quantities plus the ensemble cooperativity."""

    omega_c: float
    kappa: float
    volume: float
    g_c: float
    cooperativity: float


def derive_cavity(cav: CavityParams, n_emitters: int, gamma_r: float) -> DerivedCavity:
    """Fill in the derived cavity fields and the cooperativity C = g_c^2 N / (kappa gamma_r)."""
    if gamma_r < 0:
        raise InvalidInputError("gamma_r must be >= 0")
    kappa = cav.kappa
    g_c = cav.g_c
    coop = g_c ** 2 * n_emitters / (kappa * gamma_r) if gamma_r > 0 else np.inf
    return DerivedCavity(cav.omega_c, kappa, cav.volume, g_c, coop)


def couplings_from_dipoles(gx: np.ndarray, gy: np.ndarray, d_z: float,
                           e_control: float, g_c: float,
                           desired_cavity: np.ndarray,
                           desired_control: np.ndarray) -> CouplingSet:
    """Build a CouplingSet from dipole projection matrices.

    G_jk = g_c * gx(j,k) and Omega_jk = d_z * gy(j,k) * E2 / (2 hbar),
    where E2 is the control field amplitude.
    """
    gx = np.asarray(gx, complex)
    gy = np.asarray(gy, complex)
    if gx.shape != gy.shape:
        raise InvalidInputError("projection matrices must share a shape")
    G = g_c * gx
    Om = d_z * e_control / (2.0 * const.hbar) * gy
    return CouplingSet(G, Om, np.asarray(desired_cavity, bool),
                       np.asarray(desired_control, bool))
