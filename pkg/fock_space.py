"""
Per-mode Fock-space numerics.

Generalized Laguerre polynomials, truncated displacement (evolution) matrices
of a single phonon mode, truncated thermal occupations and the cutoff policy
that decides how many Fock levels each mode keeps.

Usage:
    from fock_space import CutoffPolicy, mode_evolution_operator, plan_cutoffs

    plan = plan_cutoffs(grid.modes, temperature=6.0, t_max=12.0, policy=CutoffPolicy())
    u = mode_evolution_operator(grid.modes[3], t=1.5, d=plan.dims[3])
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.special import gammaln
from scipy.stats import poisson

from phonon_model import DEFAULT_DIM_CAP, HBAR, K_B, PhononMode, bose_occupation
from sim_errors import ConfigurationError, InfeasibleDimensionError

logger = logging.getLogger(__name__)


# ═══════════════════════════════════════════════════════════════════════════════
# LAGUERRE POLYNOMIALS
# ═══════════════════════════════════════════════════════════════════════════════


def laguerre(m: int, p: int, x: float) -> float:
    """Generalized Laguerre polynomial L_m^(p)(x) by the three-term recurrence in m."""
    if m < 0 or m + p < 0:
        raise ConfigurationError(f"laguerre needs m >= 0 and m + p >= 0, got m={m}, p={p}")

    previous = 1.0
    if m == 0:
        return previous
    current = 1.0 + p - x
    for k in range(1, m):
        previous, current = current, ((2 * k + 1 + p - x) * current - (k + p) * previous) / (k + 1)
    return current


def _normalized_laguerre_table(d: int, x: float) -> np.ndarray:
    """
    Table T[m, p] = e^{−x/2} x^{p/2} √(m!/(m+p)!) L_m^(p)(x) for m, p < d.

    The normalization is folded into the recurrence so every entry stays
    bounded by one (it is the modulus of a displacement matrix element).
    """
    p = np.arange(d, dtype=float)
    table = np.zeros((d, d), dtype=float)
    table[0] = np.exp(-0.5 * x + 0.5 * p * math.log(x) - 0.5 * gammaln(p + 1.0))
    if d == 1:
        return table
    table[1] = table[0] * (1.0 + p - x) / np.sqrt(1.0 + p)
    for k in range(1, d - 1):
        table[k + 1] = (
            (2 * k + 1 + p - x) * table[k] - np.sqrt(k * (k + p)) * table[k - 1]
        ) / np.sqrt((k + 1) * (k + 1 + p))
    return table


# ═══════════════════════════════════════════════════════════════════════════════
# DISPLACEMENT / EVOLUTION OPERATORS
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class DisplacementAmplitude:
    """λ_k(t) = (g/ħω)(1 − e^{−iωt}) and φ_k(t) = (g/ħω)² sin ωt."""

    value: complex
    global_phase: float


@dataclass(frozen=True, eq=False)
class ModeOperator:
    """A d×d operator in the truncated Fock basis |0⟩..|d−1⟩."""

    dimension: int
    entries: np.ndarray

    def unitarity_defect(self) -> float:
        """max |u†u − I| over all entries."""
        gram = self.entries.conj().T @ self.entries
        return float(np.max(np.abs(gram - np.eye(self.dimension))))

    def column_norm_defect(self) -> float:
        """max over columns of |‖u|m⟩‖ − 1|."""
        norms = np.linalg.norm(self.entries, axis=0)
        return float(np.max(np.abs(norms - 1.0)))


def displacement_amplitude(mode: PhononMode, t: float) -> DisplacementAmplitude:
    """Displacement and global phase of the mode's conditional evolution at time t."""
    if mode.is_decoupled:
        return DisplacementAmplitude(value=0j, global_phase=0.0)
    s = mode.dimensionless_displacement
    phase = mode.omega * t
    return DisplacementAmplitude(
        value=s * (1.0 - complex(math.cos(phase), -math.sin(phase))),
        global_phase=s * s * math.sin(phase),
    )


def max_displacement(mode: PhononMode, t_max: float) -> float:
    """max |λ(t)| for t in [0, t_max]."""
    if mode.is_decoupled:
        return 0.0
    half_phase = 0.5 * mode.omega * t_max
    envelope = 1.0 if half_phase >= math.pi / 2 else math.sin(half_phase)
    return 2.0 * mode.dimensionless_displacement * envelope


def displacement_matrix(lam: complex, d: int) -> ModeOperator:
    """
    Truncated displacement operator D(λ) = exp(λb† − λ*b).

    ⟨m+p|D|m⟩ = e^{−|λ|²/2} λ^p √(m!/(m+p)!) L_m^(p)(|λ|²) for p >= 0; the
    entries above the diagonal follow from D(λ)† = D(−λ):
    ⟨m|D|m+p⟩ = (−1)^p conj(⟨m+p|D|m⟩).
    """
    if d < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {d}")
    radius = abs(lam)
    if radius == 0.0:
        return ModeOperator(dimension=d, entries=np.eye(d, dtype=complex))

    table = _normalized_laguerre_table(d, radius * radius)
    angle = math.atan2(lam.imag, lam.real)
    entries = np.zeros((d, d), dtype=complex)
    for p in range(d):
        m = np.arange(d - p)
        lower = table[m, p] * complex(math.cos(p * angle), math.sin(p * angle))
        entries[m + p, m] = lower
        if p:
            entries[m, m + p] = (-1) ** p * np.conj(lower)
    return ModeOperator(dimension=d, entries=entries)


def mode_evolution_operator(mode: PhononMode, t: float, d: int) -> ModeOperator:
    """u^k(t) = e^{iφ_k(t)} D(λ_k(t)) truncated to d levels."""
    if not math.isfinite(t):
        raise ConfigurationError(f"time must be finite, got {t!r}")
    amplitude = displacement_amplitude(mode, t)
    operator = displacement_matrix(amplitude.value, d)
    if amplitude.global_phase == 0.0:
        return operator
    phase = complex(math.cos(amplitude.global_phase), math.sin(amplitude.global_phase))
    return ModeOperator(dimension=d, entries=phase * operator.entries)


# ═══════════════════════════════════════════════════════════════════════════════
# THERMAL STATES
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class ThermalWeights:
    """Renormalized truncated occupations c_m and the discarded probability."""

    dimension: int
    weights: np.ndarray
    tail_mass: float


def _boltzmann_ratio(omega: float, temperature: float) -> float:
    """q = e^{−ħω/k_BT}; zero at T = 0."""
    if temperature == 0.0:
        return 0.0
    return math.exp(-HBAR * omega / (K_B * temperature))


def thermal_weights(omega: float, temperature: float, d: int) -> ThermalWeights:
    """Geometric occupations c_m = (1 − q) q^m truncated at d and renormalized."""
    if d < 1:
        raise ConfigurationError(f"dimension must be >= 1, got {d}")
    if temperature < 0:
        raise ConfigurationError(f"temperature must be >= 0, got {temperature}")
    if omega <= 0 and temperature > 0:
        raise ConfigurationError(f"thermal state undefined for omega={omega} at T={temperature}")

    q = _boltzmann_ratio(omega, temperature)
    if q == 0.0:
        weights = np.zeros(d)
        weights[0] = 1.0
        return ThermalWeights(dimension=d, weights=weights, tail_mass=0.0)

    raw = (1.0 - q) * q ** np.arange(d, dtype=float)
    tail_mass = q**d
    return ThermalWeights(dimension=d, weights=raw / raw.sum(), tail_mass=float(tail_mass))


# ═══════════════════════════════════════════════════════════════════════════════
# CUTOFF POLICY
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True)
class CutoffPolicy:
    """How many Fock levels each mode keeps, and the per-run dimension cap."""

    tail_epsilon: float = 1e-6
    displacement_margin: float = 4.0
    dim_cap: int = DEFAULT_DIM_CAP
    decoupling_threshold: float = 1e-3
    allow_clamp: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.allow_clamp, bool):
            raise ConfigurationError(f"allow_clamp must be true or false, got {self.allow_clamp!r}")
        if not 0.0 < self.tail_epsilon < 1.0:
            raise ConfigurationError(f"tail_epsilon must be in (0, 1), got {self.tail_epsilon}")
        if self.displacement_margin < 0:
            raise ConfigurationError(
                f"displacement_margin must be >= 0, got {self.displacement_margin}"
            )
        if self.dim_cap < 2:
            raise ConfigurationError(f"dim_cap must be >= 2, got {self.dim_cap}")
        if self.decoupling_threshold < 0:
            raise ConfigurationError(
                f"decoupling_threshold must be >= 0, got {self.decoupling_threshold}"
            )


def _displacement_cutoff(displacement: float, policy: CutoffPolicy) -> int:
    return 1 + math.ceil(
        policy.displacement_margin * displacement * displacement + 3.0 * displacement
    )


def _thermal_tail_cutoff(omega: float, temperature: float, epsilon: float) -> int:
    """Smallest d with q^d < epsilon."""
    q = _boltzmann_ratio(omega, temperature)
    if q == 0.0:
        return 1
    return max(1, math.floor(math.log(epsilon) / math.log(q)) + 1)


def _poisson_tail_cutoff(displacement: float, epsilon: float) -> int:
    """Smallest d with P(m >= d) < epsilon for a coherent state of amplitude |λ|."""
    mean = displacement * displacement
    d = 1
    while poisson.sf(d - 1, mean) >= epsilon:
        d += 1
    return d


def _is_pruned(mode: PhononMode, t_max: float, policy: CutoffPolicy) -> bool:
    return mode.is_decoupled or max_displacement(mode, t_max) < policy.decoupling_threshold


def select_cutoff(
    mode: PhononMode, temperature: float, t_max: float, policy: CutoffPolicy
) -> int:
    """
    Fock dimension for one mode over the time window [0, t_max].

    The dimension must hold the thermal tail and the Poisson tail of the
    largest displacement below ``tail_epsilon`` and satisfy the displacement
    margin 1 + ceil(margin·|λ|² + 3|λ|). Decoupled modes, and modes whose
    displacement never exceeds ``decoupling_threshold``, keep one level.
    """
    if not t_max > 0:
        raise ConfigurationError(f"t_max must be > 0, got {t_max}")
    if _is_pruned(mode, t_max, policy):
        return 1

    displacement = max_displacement(mode, t_max)
    return max(
        _displacement_cutoff(displacement, policy),
        _thermal_tail_cutoff(mode.omega, temperature, policy.tail_epsilon),
        _poisson_tail_cutoff(displacement, policy.tail_epsilon),
    )


def mode_importance(mode: PhononMode, temperature: float, t_max: float) -> float:
    """max_t |λ(t)|·(2n̄ + 1): the mode's weight in the dephasing exponent."""
    if mode.is_decoupled:
        return 0.0
    occupation = bose_occupation(mode.omega, temperature)
    return max_displacement(mode, t_max) * (2.0 * occupation + 1.0)


@dataclass(frozen=True)
class CutoffPlan:
    """Per-mode dimensions for one run, plus the truncation bookkeeping."""

    dims: Tuple[int, ...]
    requested: Tuple[int, ...]
    pruned: Tuple[int, ...]
    displacement_bounds: Tuple[float, ...]
    clamped: Tuple[int, ...]
    tail_masses: Tuple[float, ...]
    pruned_error_bound: float = 0.0

    @property
    def total_dimension(self) -> int:
        return math.prod(self.dims)

    @property
    def tail_mass_total(self) -> float:
        return float(sum(self.tail_masses))

    def incremented(self, step: int = 1) -> Tuple[int, ...]:
        """
        Cutoffs of the convergence check: every kept mode raised by ``step``.

        Pruned modes stay at one level.
        """
        return tuple(d if i in self.pruned else d + step for i, d in enumerate(self.dims))


def tail_masses_for(
    modes: Sequence[PhononMode], temperature: float, dims: Sequence[int]
) -> Tuple[float, ...]:
    """
    Thermal probability discarded by each kept mode's truncation.

    Single-level modes are pruned (or decoupled) and contribute nothing here;
    their error is reported by ``pruned_dephasing_bound`` instead.
    """
    masses: List[float] = []
    for mode, d in zip(modes, dims):
        if mode.omega <= 0 or d == 1:
            masses.append(0.0)
        else:
            masses.append(thermal_weights(mode.omega, temperature, d).tail_mass)
    return tuple(masses)


def pruned_dephasing_bound(
    modes: Sequence[PhononMode], temperature: float, t_max: float, pruned: Sequence[int]
) -> float:
    """
    Upper bound on the coherence error from dropping the pruned modes.

    A mode left out of the joint state would have contributed a factor
    exp(−|λ|²(2n̄ + 1)/2) to the coherence; the sum of the exponents bounds
    the relative error of |ρ_01|.
    """
    bound = 0.0
    for i in pruned:
        mode = modes[i]
        if mode.is_decoupled:
            continue
        displacement = max_displacement(mode, t_max)
        occupation = bose_occupation(mode.omega, temperature)
        bound += 0.5 * displacement * displacement * (2.0 * occupation + 1.0)
    return bound


def plan_cutoffs(
    modes: Sequence[PhononMode], temperature: float, t_max: float, policy: CutoffPolicy
) -> CutoffPlan:
    """
    Select every mode's cutoff and check their product against ``policy.dim_cap``.

    Raises InfeasibleDimensionError when the requested cutoffs do not fit.
    With ``policy.allow_clamp`` the plan instead reduces modes in order of
    increasing importance, each down to its displacement-margin minimum,
    and only raises when even the minimal cutoffs do not fit; clamped modes
    are listed in ``CutoffPlan.clamped``.
    """
    requested = [select_cutoff(mode, temperature, t_max, policy) for mode in modes]
    pruned = [i for i, mode in enumerate(modes) if _is_pruned(mode, t_max, policy)]
    if not policy.allow_clamp and math.prod(requested) > policy.dim_cap:
        raise InfeasibleDimensionError(
            f"{len(modes)} modes at T={temperature:g} K request cutoffs {tuple(requested)} "
            f"with dimension {math.prod(requested)} (cap {policy.dim_cap})"
        )
    minimal = [
        1 if i in pruned else _displacement_cutoff(max_displacement(mode, t_max), policy)
        for i, mode in enumerate(modes)
    ]
    if math.prod(minimal) > policy.dim_cap:
        raise InfeasibleDimensionError(
            f"{len(modes)} modes need at least dimension {math.prod(minimal)} "
            f"(cap {policy.dim_cap})"
        )

    dims = list(requested)
    clamped: List[int] = []
    if math.prod(dims) > policy.dim_cap:
        order = sorted(
            range(len(modes)), key=lambda i: (mode_importance(modes[i], temperature, t_max), i)
        )
        for i in order:
            total = math.prod(dims)
            if total <= policy.dim_cap:
                break
            others = total // dims[i]
            allowed = max(minimal[i], min(dims[i], policy.dim_cap // others))
            if allowed < dims[i]:
                dims[i] = allowed
                clamped.append(i)
        logger.warning(
            "Cutoffs clamped to dimension cap %d: modes %s reduced (requested %s, using %s)",
            policy.dim_cap,
            clamped,
            requested,
            dims,
        )

    bounds = tuple(max_displacement(modes[i], t_max) for i in pruned)
    plan = CutoffPlan(
        dims=tuple(dims),
        requested=tuple(requested),
        pruned=tuple(pruned),
        displacement_bounds=bounds,
        clamped=tuple(sorted(clamped)),
        tail_masses=tail_masses_for(modes, temperature, dims),
        pruned_error_bound=pruned_dephasing_bound(modes, temperature, t_max, pruned),
    )
    logger.debug(
        "Cutoff plan at T=%.3g K: dims=%s (D=%d), pruned=%s (bound %.2e)",
        temperature,
        plan.dims,
        plan.total_dimension,
        plan.pruned,
        plan.pruned_error_bound,
    )
    return plan
