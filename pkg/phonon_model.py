"""
Phonon model for an excitonic charge qubit in a quantum dot.

Holds the unit system, material and qubit parameters, the discretized
longitudinal-acoustic phonon modes and their deformation-potential couplings.

Unit system (all internal quantities):
    length nm, time ps, energy meV, temperature K

Usage:
    from phonon_model import MaterialParams, build_mode_grid

    grid = build_mode_grid(0.001, 0.9, 10, MaterialParams())
    for mode in grid.modes:
        print(mode.k, mode.omega, mode.coupling)
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, Tuple

from sim_errors import ConfigurationError, InfeasibleDimensionError

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════════════════════════
# UNIT SYSTEM
# ═══════════════════════════════════════════════════════════════════════════════

HBAR = 0.65821195  # meV·ps
K_B = 0.08617333  # meV/K

_MEV_PER_EV = 1000.0
# kg/m³ -> meV·ps²/nm⁵ (1 kg = 6.241509074e27 meV·ps²/nm², 1 m³ = 1e27 nm³)
_DENSITY_TO_INTERNAL = 6.241509074
# m/s -> nm/ps
_SPEED_TO_INTERNAL = 1.0e-3

DEFAULT_DIM_CAP = 4096


def _require_finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise ConfigurationError(f"{name} must be finite, got {value!r}")
    return float(value)


# ═══════════════════════════════════════════════════════════════════════════════
# PARAMETERS
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class MaterialParams:
    """Deformation-potential parameters of a GaAs-like self-assembled dot.

    Fields are in the customary laboratory units; the ``*_internal``
    properties convert them to the nm/ps/meV system. ``coupling_scale`` is a
    plain multiplier on every effective coupling (1.0 reproduces the model).
    """

    deformation_potential_difference: float = 9.5  # eV
    crystal_density: float = 5300.0  # kg/m³
    sound_speed: float = 5150.0  # m/s
    unit_cell_volume: float = 0.18  # nm³
    dot_width: float = 3.0  # nm
    coupling_scale: float = 1.0

    def __post_init__(self) -> None:
        for name in (
            "deformation_potential_difference",
            "crystal_density",
            "sound_speed",
            "unit_cell_volume",
            "dot_width",
            "coupling_scale",
        ):
            value = _require_finite(name, getattr(self, name))
            if value <= 0:
                raise ConfigurationError(f"{name} must be strictly positive, got {value}")

    @property
    def deformation_potential_internal(self) -> float:
        """σ_e − σ_h in meV."""
        return self.deformation_potential_difference * _MEV_PER_EV

    @property
    def density_internal(self) -> float:
        """ϱ in meV·ps²/nm⁵."""
        return self.crystal_density * _DENSITY_TO_INTERNAL

    @property
    def sound_speed_internal(self) -> float:
        """c in nm/ps."""
        return self.sound_speed * _SPEED_TO_INTERNAL


@dataclass(frozen=True)
class QubitParams:
    """Qubit splitting (meV) and initial amplitudes α|0⟩ + β|1⟩."""

    energy_splitting: float = 0.0
    amplitude_0: complex = complex(1.0 / math.sqrt(2.0))
    amplitude_1: complex = complex(1.0 / math.sqrt(2.0))

    def __post_init__(self) -> None:
        _require_finite("energy_splitting", self.energy_splitting)
        norm = abs(self.amplitude_0) ** 2 + abs(self.amplitude_1) ** 2
        if not math.isfinite(norm) or abs(norm - 1.0) > 1e-12:
            raise ConfigurationError(f"|alpha|^2 + |beta|^2 must equal 1, got {norm!r}")

    @property
    def alpha(self) -> complex:
        return complex(self.amplitude_0)

    @property
    def beta(self) -> complex:
        return complex(self.amplitude_1)


# ═══════════════════════════════════════════════════════════════════════════════
# MODES
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class PhononMode:
    """A single direction-averaged phonon mode."""

    k: float  # nm⁻¹
    omega: float  # ps⁻¹
    coupling: float  # meV
    dimensionless_displacement: float  # g/ħω

    @property
    def is_decoupled(self) -> bool:
        """Zero-frequency or zero-coupling modes never act on the environment state."""
        return self.omega == 0.0 or self.coupling == 0.0


@dataclass(frozen=True)
class ModeGrid:
    """Evenly spaced wave-vector lengths k_i = i·Δk + k_min (i = 0..n−1)."""

    k_min: float
    k_max: float
    mode_count: int
    delta_k: float
    modes: Tuple[PhononMode, ...] = field(default_factory=tuple)

    @property
    def cycle_time(self) -> float:
        """2π/(cΔk): the full revival period when k_min = 0."""
        spacing = self.modes[1].omega - self.modes[0].omega
        return 2.0 * math.pi / spacing

    def reversed(self) -> "ModeGrid":
        """The same modes in descending k order."""
        return ModeGrid(
            k_min=self.k_min,
            k_max=self.k_max,
            mode_count=self.mode_count,
            delta_k=self.delta_k,
            modes=tuple(reversed(self.modes)),
        )


@dataclass(frozen=True)
class Environment:
    """Discretized phonon bath at temperature T with per-mode Fock cutoffs."""

    grid: ModeGrid
    temperature: float
    cutoffs: Tuple[int, ...]
    dim_cap: int = DEFAULT_DIM_CAP

    def __post_init__(self) -> None:
        temperature = _require_finite("temperature", self.temperature)
        if temperature < 0:
            raise ConfigurationError(f"temperature must be >= 0, got {temperature}")
        if len(self.cutoffs) != len(self.grid.modes):
            raise ConfigurationError(
                f"{len(self.cutoffs)} cutoffs given for {len(self.grid.modes)} modes"
            )
        if any(d < 1 for d in self.cutoffs):
            raise ConfigurationError(f"cutoffs must be >= 1, got {self.cutoffs}")
        if self.dimension > self.dim_cap:
            raise InfeasibleDimensionError(
                f"environment dimension {self.dimension} exceeds cap {self.dim_cap}"
            )

    @property
    def modes(self) -> Tuple[PhononMode, ...]:
        return self.grid.modes

    @property
    def dimension(self) -> int:
        return math.prod(self.cutoffs)

    def with_grid(self, grid: ModeGrid, cutoffs: Sequence[int]) -> "Environment":
        return Environment(grid, self.temperature, tuple(cutoffs), self.dim_cap)


# ═══════════════════════════════════════════════════════════════════════════════
# COUPLING CONSTANTS
# ═══════════════════════════════════════════════════════════════════════════════


def form_factor(k: float, width: float) -> float:
    """Gaussian form factor exp(−k²l²/4) of a wave function ∝ exp(−r²/(2l²)), l = width."""
    k = _require_finite("k", k)
    width = _require_finite("width", width)
    if k < 0 or width <= 0:
        raise ConfigurationError(
            f"form_factor needs k >= 0 and width > 0, got k={k}, width={width}"
        )
    return math.exp(-(k * k * width * width) / 4.0)


def effective_coupling(k: float, delta_k: float, material: MaterialParams) -> float:
    """
    Direction-averaged coupling g_k (meV) of the shell [k, k + Δk].

    g_k² = [k²Δk/(2π²)]·[(σ_e−σ_h)²ħk/(2ϱc)]·F(k)², i.e. the squared
    deformation-potential coupling with the 4πk²Δk·V/(2π)³ shell weight so the
    normalization volume cancels.
    """
    k = _require_finite("k", k)
    delta_k = _require_finite("delta_k", delta_k)
    if k < 0 or delta_k <= 0:
        raise ConfigurationError(
            f"effective_coupling needs k >= 0 and delta_k > 0, got k={k}, delta_k={delta_k}"
        )
    if k == 0.0:
        return 0.0

    shell_weight = k * k * delta_k / (2.0 * math.pi**2)
    coupling_sq = (
        material.deformation_potential_internal**2
        * HBAR
        * k
        / (2.0 * material.density_internal * material.sound_speed_internal)
    )
    ff = form_factor(k, material.dot_width)
    return material.coupling_scale * math.sqrt(shell_weight * coupling_sq) * ff


def bose_occupation(omega: float, temperature: float) -> float:
    """Bose-Einstein occupation 1/(e^{ħω/k_BT} − 1); zero at T = 0."""
    omega = _require_finite("omega", omega)
    temperature = _require_finite("temperature", temperature)
    if temperature < 0:
        raise ConfigurationError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0.0:
        return 0.0
    if omega <= 0:
        raise ConfigurationError(
            f"Bose occupation diverges for omega={omega} at T={temperature} K"
        )
    return 1.0 / math.expm1(HBAR * omega / (K_B * temperature))


def build_mode_grid(k_min: float, k_max: float, n: int, material: MaterialParams) -> ModeGrid:
    """
    Discretize the wave-vector range into n modes k_i = (i−1)Δk + k_min.

    Δk = k_max/(n−1), so the grid spans [k_min, k_max + k_min].
    """
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise ConfigurationError(f"mode count must be an integer >= 2, got {n!r}")
    n = int(n)
    k_min = _require_finite("k_min", k_min)
    k_max = _require_finite("k_max", k_max)
    if k_min < 0 or k_max <= k_min:
        raise ConfigurationError(f"need 0 <= k_min < k_max, got k_min={k_min}, k_max={k_max}")

    delta_k = k_max / (n - 1)
    c = material.sound_speed_internal
    modes = []
    for i in range(n):
        k = i * delta_k + k_min
        omega = c * k
        if omega == 0.0:
            modes.append(PhononMode(k=k, omega=0.0, coupling=0.0, dimensionless_displacement=0.0))
            continue
        g = effective_coupling(k, delta_k, material)
        modes.append(
            PhononMode(k=k, omega=omega, coupling=g, dimensionless_displacement=g / (HBAR * omega))
        )

    logger.debug("Built %d-mode grid: k in [%.4g, %.4g], dk=%.4g", n, k_min, modes[-1].k, delta_k)
    return ModeGrid(k_min=k_min, k_max=k_max, mode_count=n, delta_k=delta_k, modes=tuple(modes))
