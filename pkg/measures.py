"""
Scalar observables of the qubit-environment state.

Coherence, Negativity, purity and the T = 0 entanglement entropy, each in a
closed form and a from-state variant, plus the first-maximum search for the
Negativity over a time window.

Usage:
    from measures import max_negativity, measure_series

    peak = max_negativity(env, qubit, (0.0, env.grid.cycle_time), grid_points=400)
    series = measure_series(env, qubit, times)
"""

import logging
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import eigvalsh
from scipy.optimize import minimize_scalar
from scipy.special import entr

from phonon_model import HBAR, K_B, Environment, QubitParams, bose_occupation
from sim_errors import ConfigurationError, NumericalFailureError
from state_assembly import (
    EvolvedBlocks,
    JointState,
    assemble_joint_state,
    evolve_blocks,
    partial_transpose_qubit,
    reduced_qubit_state,
)

logger = logging.getLogger(__name__)

HERMITIAN_TOLERANCE = 1e-10
EIGENVALUE_ZERO = 1e-12
DEFAULT_GRID_POINTS = 400
MIN_GRID_POINTS = 16

# The maximum search arms once the Negativity rises by more than this between samples.
_SCAN_TOLERANCE = 1e-10

ArrayOrFloat = Union[float, np.ndarray]


# ═══════════════════════════════════════════════════════════════════════════════
# DATA MODELS
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass
class MeasureSeries:
    """Observables sampled on a shared time grid (entropy only at T = 0)."""

    times: List[float]
    coherence: List[float]
    negativity: List[float]
    purity: List[float]
    entropy: Optional[List[float]] = None

    def __post_init__(self) -> None:
        lengths = {len(self.coherence), len(self.negativity), len(self.purity)}
        if self.entropy is not None:
            lengths.add(len(self.entropy))
        if lengths != {len(self.times)}:
            raise ConfigurationError("all series must share the length of times")


@dataclass(frozen=True)
class NegativityResult:
    """Negativity of a partially transposed state and its negative spectrum."""

    value: float
    negative_eigenvalue_count: int
    min_eigenvalue: float


class NegativityPeak(NamedTuple):
    t_at_max: float
    value: float
    degenerate: bool


# ═══════════════════════════════════════════════════════════════════════════════
# COHERENCE
# ═══════════════════════════════════════════════════════════════════════════════


def coherence_exponent(env: Environment, t: ArrayOrFloat) -> ArrayOrFloat:
    """Σ_k (g_k/ħω_k)²(1 − cos ω_k t)(2n_k + 1) over the coupled modes."""
    times = np.asarray(t, dtype=float)
    exponent = np.zeros_like(times)
    for mode in env.modes:
        if mode.is_decoupled:
            continue
        thermal_factor = 2.0 * bose_occupation(mode.omega, env.temperature) + 1.0
        exponent = exponent + (
            mode.dimensionless_displacement**2
            * (1.0 - np.cos(mode.omega * times))
            * thermal_factor
        )
    return float(exponent) if exponent.ndim == 0 else exponent


def coherence_closed_form(env: Environment, t: ArrayOrFloat) -> ArrayOrFloat:
    """Degree of coherence |⟨u(t)⟩| = exp(−exponent); accepts a scalar or an array of times."""
    exponent = coherence_exponent(env, t)
    if isinstance(exponent, np.ndarray):
        return np.exp(-exponent)
    return math.exp(-exponent)


def coherence_of_state(blocks: EvolvedBlocks) -> float:
    """|Tr R_10|, the qubit coherence read off the assembled environment blocks."""
    return float(abs(np.trace(blocks.r10)))


# ═══════════════════════════════════════════════════════════════════════════════
# NEGATIVITY
# ═══════════════════════════════════════════════════════════════════════════════


def negativity(pt_matrix: np.ndarray) -> NegativityResult:
    """
    Sum of |λ| over the negative eigenvalues of a partially transposed state.

    Eigenvalues with |λ| < 1e-12 count as zero. Input that is not Hermitian
    within 1e-10 raises NumericalFailureError.
    """
    matrix = np.asarray(pt_matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ConfigurationError(f"negativity needs a square matrix, got shape {matrix.shape}")
    asymmetry = float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0
    if asymmetry > HERMITIAN_TOLERANCE:
        raise NumericalFailureError(
            f"partial transpose is not Hermitian (max deviation {asymmetry:.3e})"
        )

    eigenvalues = eigvalsh(matrix)
    negative = eigenvalues[eigenvalues < -EIGENVALUE_ZERO]
    return NegativityResult(
        value=float(-negative.sum()) if negative.size else 0.0,
        negative_eigenvalue_count=int(negative.size),
        min_eigenvalue=float(eigenvalues[0]),
    )


def negativity_of_state(state: JointState) -> NegativityResult:
    return negativity(partial_transpose_qubit(state))


def negativity_at(env: Environment, qubit: QubitParams, t: float) -> NegativityResult:
    """Negativity of σ(t) for one environment and qubit."""
    blocks = evolve_blocks(env, t)
    return negativity_of_state(assemble_joint_state(blocks, qubit, t))


# ═══════════════════════════════════════════════════════════════════════════════
# PURITY
# ═══════════════════════════════════════════════════════════════════════════════


def mode_purity(omega: float, temperature: float) -> float:
    """(1−q)²/(1−q²) = tanh(ħω/2k_BT) for q = e^{−ħω/k_BT}; 1 at T = 0."""
    if temperature < 0:
        raise ConfigurationError(f"temperature must be >= 0, got {temperature}")
    if temperature == 0.0:
        return 1.0
    if omega <= 0:
        raise ConfigurationError(f"mode purity undefined for omega={omega} at T={temperature}")
    return math.tanh(HBAR * omega / (2.0 * K_B * temperature))


def purity_closed_form(env: Environment) -> float:
    """Product of per-mode purities of the initial thermal environment."""
    if env.temperature == 0.0:
        return 1.0
    purity = 1.0
    for mode in env.modes:
        if mode.omega > 0:
            purity *= mode_purity(mode.omega, env.temperature)
    return purity


def purity_of_state(state: JointState) -> float:
    """Tr σ², real part."""
    return float(np.einsum("ij,ji->", state.matrix, state.matrix).real)


# ═══════════════════════════════════════════════════════════════════════════════
# ENTROPY & DISTANCE
# ═══════════════════════════════════════════════════════════════════════════════


def pure_state_entropy(coherence: float, alpha: complex, beta: complex) -> float:
    """
    Entanglement entropy (bits) of the T = 0 joint pure state.

    The reduced qubit matrix has eigenvalues p± = (1 ± √Δ)/2 with
    Δ = 1 − 4|α|²|β|²(1 − |u|²); p ln p is taken as 0 at p = 0.
    """
    if not -1e-12 <= coherence <= 1.0 + 1e-12:
        raise ConfigurationError(f"coherence must lie in [0, 1], got {coherence}")
    norm = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(norm - 1.0) > 1e-12:
        raise ConfigurationError(f"|alpha|^2 + |beta|^2 must equal 1, got {norm!r}")

    weight = abs(alpha) ** 2 * abs(beta) ** 2
    delta = 1.0 - 4.0 * weight * (1.0 - coherence * coherence)
    root = math.sqrt(min(max(delta, 0.0), 1.0))
    populations = np.array([(1.0 + root) / 2.0, (1.0 - root) / 2.0])
    return float(entr(populations).sum() / math.log(2.0))


def entropy_of_state(state: JointState) -> float:
    """−Tr ρ log₂ ρ of the reduced qubit matrix ρ = Tr_E σ."""
    eigenvalues = np.clip(eigvalsh(reduced_qubit_state(state)), 0.0, 1.0)
    return float(entr(eigenvalues).sum() / math.log(2.0))


def _as_matrix(value: Union[JointState, np.ndarray]) -> np.ndarray:
    return value.matrix if isinstance(value, JointState) else np.asarray(value)


def trace_distance(a: Union[JointState, np.ndarray], b: Union[JointState, np.ndarray]) -> float:
    """½ Σ |eig(a − b)| for Hermitian a, b of equal shape."""
    left, right = _as_matrix(a), _as_matrix(b)
    if left.shape != right.shape:
        raise ConfigurationError(f"shape mismatch: {left.shape} vs {right.shape}")
    return float(0.5 * np.abs(eigvalsh(left - right)).sum())


# ═══════════════════════════════════════════════════════════════════════════════
# TIME SERIES
# ═══════════════════════════════════════════════════════════════════════════════


def measure_series(env: Environment, qubit: QubitParams, times: Sequence[float]) -> MeasureSeries:
    """Coherence (from state), Negativity, purity and, at T = 0, entropy at each time."""
    with_entropy = env.temperature == 0.0
    coherence: List[float] = []
    negativities: List[float] = []
    purities: List[float] = []
    entropies: List[float] = []

    for t in times:
        blocks = evolve_blocks(env, t)
        state = assemble_joint_state(blocks, qubit, t)
        coherence.append(coherence_of_state(blocks))
        negativities.append(negativity_of_state(state).value)
        purities.append(purity_of_state(state))
        if with_entropy:
            entropies.append(entropy_of_state(state))

    return MeasureSeries(
        times=[float(t) for t in times],
        coherence=coherence,
        negativity=negativities,
        purity=purities,
        entropy=entropies if with_entropy else None,
    )


# ═══════════════════════════════════════════════════════════════════════════════
# MAXIMUM SEARCH
# ═══════════════════════════════════════════════════════════════════════════════


def default_time_window(env: Environment) -> Tuple[float, float]:
    """One full cycle [0, 2π/(cΔk)] of the mode grid."""
    return 0.0, env.grid.cycle_time


def _refine_peak(
    env: Environment, qubit: QubitParams, bracket: Tuple[float, float, float], value: float
) -> Tuple[float, float]:
    def objective(t: float) -> float:
        return -negativity_at(env, qubit, t).value

    lower, middle, upper = bracket
    try:
        result = minimize_scalar(objective, bracket=bracket, method="golden", tol=1e-6)
    except (ValueError, RuntimeError) as err:
        logger.warning("Golden refinement on %s failed (%s); keeping the scanned peak", bracket, err)
        return middle, value
    refined_t, refined_value = float(result.x), float(-result.fun)
    if lower <= refined_t <= upper and refined_value >= value:
        return refined_t, refined_value
    return middle, value


def max_negativity(
    env: Environment,
    qubit: QubitParams,
    t_window: Optional[Tuple[float, float]] = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> NegativityPeak:
    """
    First local maximum of the Negativity over ``t_window``.

    A coarse scan arms once the Negativity rises above the scan tolerance,
    follows the highest sample and stops at the first sample strictly below
    it; that bracket is refined by golden-section search. States with αβ = 0
    never entangle and return a degenerate zero peak. A scan that stays at
    zero also returns a degenerate peak; a scan that never turns over raises
    NumericalFailureError.
    """
    if grid_points < MIN_GRID_POINTS:
        raise ConfigurationError(f"grid_points must be >= {MIN_GRID_POINTS}, got {grid_points}")
    t_start, t_end = t_window if t_window is not None else default_time_window(env)
    if not (math.isfinite(t_start) and math.isfinite(t_end)) or t_end <= t_start:
        raise ConfigurationError(f"invalid time window ({t_start}, {t_end})")

    if abs(qubit.alpha * qubit.beta) < EIGENVALUE_ZERO:
        logger.warning("Qubit starts in a basis state; Negativity is identically zero")
        return NegativityPeak(t_at_max=t_start, value=0.0, degenerate=True)

    times = np.linspace(t_start, t_end, grid_points)
    values: List[float] = []
    # Index of the highest sample since the curve first rose above the scan tolerance.
    candidate: Optional[int] = None
    for i, t in enumerate(times):
        value = negativity_at(env, qubit, float(t)).value
        values.append(value)
        if i == 0:
            continue
        if candidate is None:
            if value > values[i - 1] + _SCAN_TOLERANCE:
                candidate = i
        elif value > values[candidate]:
            candidate = i
        elif value < values[candidate]:
            bracket = (float(times[candidate - 1]), float(times[candidate]), float(t))
            t_at_max, peak = _refine_peak(env, qubit, bracket, values[candidate])
            logger.debug("First Negativity maximum %.6g at t=%.6g ps", peak, t_at_max)
            return NegativityPeak(t_at_max=t_at_max, value=peak, degenerate=False)

    if max(values) <= _SCAN_TOLERANCE:
        logger.warning(
            "Negativity stays zero over [%.4g, %.4g] ps at T=%.3g K",
            t_start,
            t_end,
            env.temperature,
        )
        return NegativityPeak(t_at_max=t_start, value=0.0, degenerate=True)

    raise NumericalFailureError(
        f"no interior Negativity maximum in [{t_start:.4g}, {t_end:.4g}] ps "
        f"(largest scanned value {max(values):.3e} at the window edge)"
    )
