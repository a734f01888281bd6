"""
Assembly of the joint qubit ⊗ environment density matrix.

The environment blocks R_00, R_10 = u R(0) and R_11 = u R(0) u† are built
mode by mode and combined by Kronecker products in grid order; the joint
state is the 2×2 qubit-block matrix of those blocks.
"""

import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Tuple

import numpy as np

from fock_space import mode_evolution_operator, thermal_weights
from phonon_model import HBAR, Environment, PhononMode, QubitParams

logger = logging.getLogger(__name__)


# ═══════════════════════════════════════════════════════════════════════════════
# DATA MODELS
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass(frozen=True, eq=False)
class EvolvedBlocks:
    """Environment blocks at one time; R_01 = R_10† is implied."""

    r00: np.ndarray
    r10: np.ndarray
    r11: np.ndarray
    dimension: int
    mode_dims: Tuple[int, ...]
    tail_mass_total: float = 0.0


@dataclass(frozen=True, eq=False)
class JointState:
    """σ(t) ordered as qubit-major blocks [[σ_00, σ_01], [σ_10, σ_11]]."""

    matrix: np.ndarray
    time: float
    dimension: int
    tail_mass_total: float = 0.0

    def block(self, i: int, j: int) -> np.ndarray:
        d = self.dimension
        return self.matrix[i * d : (i + 1) * d, j * d : (j + 1) * d]


# ═══════════════════════════════════════════════════════════════════════════════
# ASSEMBLY
# ═══════════════════════════════════════════════════════════════════════════════


def _mode_blocks(
    mode: PhononMode, temperature: float, t: float, d: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    # A single kept level is a pruned mode held in its ground state.
    if mode.omega <= 0 or d == 1:
        weights = np.zeros(d)
        weights[0] = 1.0
        tail_mass = 0.0
    else:
        thermal = thermal_weights(mode.omega, temperature, d)
        weights, tail_mass = thermal.weights, thermal.tail_mass

    u = mode_evolution_operator(mode, t, d).entries
    r00 = np.diag(weights).astype(complex)
    r10 = u * weights[np.newaxis, :]
    r11 = r10 @ u.conj().T
    return r00, r10, r11, tail_mass


def evolve_blocks(env: Environment, t: float) -> EvolvedBlocks:
    """Per-mode blocks diag(c), u·diag(c), u·diag(c)·u† tensored across the grid."""
    per_mode = [
        _mode_blocks(mode, env.temperature, t, d) for mode, d in zip(env.modes, env.cutoffs)
    ]
    r00 = reduce(np.kron, (blocks[0] for blocks in per_mode))
    r10 = reduce(np.kron, (blocks[1] for blocks in per_mode))
    r11 = reduce(np.kron, (blocks[2] for blocks in per_mode))
    return EvolvedBlocks(
        r00=r00,
        r10=r10,
        r11=r11,
        dimension=env.dimension,
        mode_dims=tuple(env.cutoffs),
        tail_mass_total=float(sum(blocks[3] for blocks in per_mode)),
    )


def assemble_joint_state(blocks: EvolvedBlocks, qubit: QubitParams, t: float) -> JointState:
    """
    σ(t) = [[|α|² R_00, αβ* e^{−iεt/ħ} R_01], [α*β e^{iεt/ħ} R_10, |β|² R_11]].

    The upper off-diagonal block is the adjoint of the lower one, so the
    result is Hermitian by construction.
    """
    alpha, beta = qubit.alpha, qubit.beta
    angle = qubit.energy_splitting * t / HBAR
    lower = alpha.conjugate() * beta * complex(math.cos(angle), math.sin(angle)) * blocks.r10
    matrix = np.block(
        [
            [abs(alpha) ** 2 * blocks.r00, lower.conj().T],
            [lower, abs(beta) ** 2 * blocks.r11],
        ]
    )
    return JointState(
        matrix=matrix,
        time=t,
        dimension=blocks.dimension,
        tail_mass_total=blocks.tail_mass_total,
    )


def joint_state_at(env: Environment, qubit: QubitParams, t: float) -> JointState:
    """Convenience: evolve the blocks and assemble σ(t) in one call."""
    return assemble_joint_state(evolve_blocks(env, t), qubit, t)


def partial_transpose_qubit(state: JointState) -> np.ndarray:
    """Partial transpose over the qubit: swap the two off-diagonal qubit blocks."""
    d = state.dimension
    source = state.matrix
    transposed = source.copy()
    transposed[:d, d:] = source[d:, :d]
    transposed[d:, :d] = source[:d, d:]
    return transposed


def reduced_qubit_state(state: JointState) -> np.ndarray:
    """ρ(t) = Tr_E σ(t) as a 2×2 matrix."""
    return np.array(
        [[np.trace(state.block(i, j)) for j in range(2)] for i in range(2)],
        dtype=complex,
    )
