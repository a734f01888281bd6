"""Tests for coherence, Negativity, purity, entropy and the first-maximum search."""

import math

import numpy as np
import pytest

from fock_space import CutoffPolicy, plan_cutoffs, thermal_weights
from measures import (
    MeasureSeries,
    NegativityResult,
    coherence_closed_form,
    coherence_of_state,
    default_time_window,
    entropy_of_state,
    max_negativity,
    measure_series,
    mode_purity,
    negativity,
    negativity_at,
    negativity_of_state,
    pure_state_entropy,
    purity_closed_form,
    purity_of_state,
    trace_distance,
)
from phonon_model import HBAR, K_B, Environment, MaterialParams, QubitParams, build_mode_grid
from sim_errors import ConfigurationError, NumericalFailureError
from state_assembly import JointState, evolve_blocks, joint_state_at, partial_transpose_qubit


def _environment(temperature, n=3, epsilon=1e-10):
    grid = build_mode_grid(0.0, 0.9, n, MaterialParams())
    policy = CutoffPolicy(tail_epsilon=epsilon)
    plan = plan_cutoffs(grid.modes, temperature, grid.cycle_time, policy)
    return Environment(grid, temperature, plan.dims)


# ═══════════════════════════════════════════════════════════════════════════════
# FIXTURES
# ═══════════════════════════════════════════════════════════════════════════════


@pytest.fixture(scope="module")
def cold_env():
    """Three modes at T = 0 with tight cutoffs."""
    return _environment(0.0)


@pytest.fixture(scope="module")
def warm_env():
    """Three modes at 6 K with tight cutoffs."""
    return _environment(6.0)


@pytest.fixture
def qubit():
    """(|0> + |1>)/sqrt(2), no splitting."""
    return QubitParams()


# ═══════════════════════════════════════════════════════════════════════════════
# COHERENCE
# ═══════════════════════════════════════════════════════════════════════════════


class TestCoherence:
    """Closed-form and from-state coherence."""

    def test_starts_at_one(self, warm_env):
        assert coherence_closed_form(warm_env, 0.0) == 1.0

    def test_array_matches_scalar(self, warm_env):
        times = np.array([0.2, 0.9, 1.6])
        values = coherence_closed_form(warm_env, times)
        assert isinstance(values, np.ndarray)
        for t, value in zip(times, values):
            assert value == pytest.approx(coherence_closed_form(warm_env, float(t)))

    @pytest.mark.parametrize("t", [0.3, 1.0, 2.2])
    def test_state_matches_closed_form_at_finite_temperature(self, warm_env, t):
        blocks = evolve_blocks(warm_env, t)
        assert coherence_of_state(blocks) == pytest.approx(
            coherence_closed_form(warm_env, t), abs=1e-6
        )

    def test_full_revival_on_commensurate_grid(self, warm_env):
        """With k_min = 0 every mode completes whole periods at 2 pi / (c dk)."""
        assert coherence_closed_form(warm_env, warm_env.grid.cycle_time) == pytest.approx(1.0)

    def test_warmer_bath_dephases_more(self, cold_env, warm_env):
        t = 0.5 * warm_env.grid.cycle_time
        assert coherence_closed_form(warm_env, t) < coherence_closed_form(cold_env, t)


# ═══════════════════════════════════════════════════════════════════════════════
# NEGATIVITY
# ═══════════════════════════════════════════════════════════════════════════════


class TestNegativity:
    """Negativity from the partially transposed state."""

    def test_bell_state(self):
        """A maximally entangled pair has Negativity 1/2."""
        psi = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0)
        state = JointState(matrix=np.outer(psi, psi), time=0.0, dimension=2)
        result = negativity_of_state(state)

        assert result.value == pytest.approx(0.5)
        assert result.negative_eigenvalue_count == 1
        assert result.min_eigenvalue == pytest.approx(-0.5)

    def test_product_state_has_none(self):
        plus = np.full((2, 2), 0.5)
        state = JointState(matrix=np.kron(plus, np.diag([0.7, 0.3])), time=0.0, dimension=2)
        assert negativity_of_state(state).value == 0.0

    def test_non_hermitian_input_rejected(self):
        with pytest.raises(NumericalFailureError, match="not Hermitian"):
            negativity(np.array([[0.5, 1.0], [0.0, 0.5]]))

    def test_non_square_input_rejected(self):
        with pytest.raises(ConfigurationError, match="square"):
            negativity(np.zeros((2, 3)))

    def test_zero_at_start_and_after_one_cycle(self, warm_env, qubit):
        assert negativity_at(warm_env, qubit, 0.0).value == 0.0
        assert negativity_at(warm_env, qubit, warm_env.grid.cycle_time).value < 1e-10

    @pytest.mark.parametrize("fraction", [0.1, 0.3, 0.5, 0.8])
    def test_pure_state_closed_form(self, cold_env, qubit, fraction):
        """At T = 0, N = |alpha beta| sqrt(1 - |u|^2)."""
        t = fraction * cold_env.grid.cycle_time
        coherence = coherence_closed_form(cold_env, t)
        expected = 0.5 * math.sqrt(1.0 - coherence**2)
        assert negativity_at(cold_env, qubit, t).value == pytest.approx(expected, abs=1e-6)

    def test_unbalanced_amplitudes_scale_negativity(self, cold_env):
        t = 0.5 * cold_env.grid.cycle_time
        balanced = negativity_at(cold_env, QubitParams(), t).value
        skewed = negativity_at(cold_env, QubitParams(amplitude_0=0.6, amplitude_1=0.8), t).value
        assert skewed == pytest.approx(balanced * 0.48 / 0.5, abs=1e-6)

    def test_partial_transpose_is_an_involution(self, warm_env, qubit):
        state = joint_state_at(warm_env, qubit, 0.7)
        transposed = JointState(
            matrix=partial_transpose_qubit(state), time=state.time, dimension=state.dimension
        )
        assert np.array_equal(partial_transpose_qubit(transposed), state.matrix)

    def test_uncoupled_mode_leaves_negativity_unchanged(self, warm_env, qubit):
        """Tensoring a thermal mode that never couples adds no entanglement."""
        state = joint_state_at(warm_env, qubit, 0.7)
        spectator = np.diag(thermal_weights(0.8, 6.0, 4).weights)
        widened = JointState(
            matrix=np.kron(state.matrix, spectator),
            time=state.time,
            dimension=state.dimension * 4,
        )
        assert negativity_of_state(widened).value == pytest.approx(
            negativity_of_state(state).value, abs=1e-10
        )

    def test_full_cycle_restores_initial_state(self, warm_env, qubit):
        """On a commensurate grid with k_min = 0, sigma returns to sigma(0)."""
        initial = joint_state_at(warm_env, qubit, 0.0)
        revived = joint_state_at(warm_env, qubit, warm_env.grid.cycle_time)

        assert trace_distance(revived, initial) <= 1e-6
        assert negativity_of_state(revived).value <= 1e-8


class TestZeroTemperatureIdentities:
    """Pure joint states match the closed forms at every sampled time."""

    @pytest.mark.parametrize("n", [2, 4])
    def test_negativity_and_entropy_over_one_cycle(self, n, qubit):
        env = _environment(0.0, n=n)
        for t in np.linspace(0.0, env.grid.cycle_time, 50):
            state = joint_state_at(env, qubit, float(t))
            coherence = coherence_closed_form(env, float(t))

            assert negativity_of_state(state).value == pytest.approx(
                0.5 * math.sqrt(max(0.0, 1.0 - coherence**2)), abs=1e-8
            )
            assert entropy_of_state(state) == pytest.approx(
                pure_state_entropy(coherence, qubit.alpha, qubit.beta), abs=1e-8
            )


# ═══════════════════════════════════════════════════════════════════════════════
# PURITY
# ═══════════════════════════════════════════════════════════════════════════════


class TestPurity:
    """Thermal purity of the environment."""

    @pytest.mark.parametrize("omega", [0.2, 1.0, 4.0])
    @pytest.mark.parametrize("temperature", [1.0, 6.0, 20.0])
    def test_mode_purity_matches_geometric_state(self, omega, temperature):
        q = math.exp(-HBAR * omega / (K_B * temperature))
        assert mode_purity(omega, temperature) == pytest.approx((1 - q) ** 2 / (1 - q * q))

    def test_zero_temperature_is_pure(self, cold_env):
        assert mode_purity(1.0, 0.0) == 1.0
        assert purity_closed_form(cold_env) == 1.0

    def test_purity_falls_with_temperature(self):
        grid = build_mode_grid(0.001, 0.9, 4, MaterialParams())
        values = [purity_closed_form(Environment(grid, t, (1,) * 4)) for t in (1.0, 6.0, 12.0)]
        assert values[0] > values[1] > values[2] > 0.0

    def test_state_purity_matches_closed_form(self, warm_env, qubit):
        assert purity_of_state(joint_state_at(warm_env, qubit, 0.0)) == pytest.approx(
            purity_closed_form(warm_env), abs=1e-6
        )

    @pytest.mark.parametrize("t", [0.4, 1.3, 2.0])
    def test_purity_conserved_under_evolution(self, warm_env, qubit, t):
        initial = purity_of_state(joint_state_at(warm_env, qubit, 0.0))
        assert purity_of_state(joint_state_at(warm_env, qubit, t)) == pytest.approx(
            initial, abs=1e-6
        )


# ═══════════════════════════════════════════════════════════════════════════════
# ENTROPY & DISTANCE
# ═══════════════════════════════════════════════════════════════════════════════


class TestEntropy:
    """Entanglement entropy of the T = 0 pure state."""

    def test_limits(self):
        half = 1.0 / math.sqrt(2.0)
        assert pure_state_entropy(1.0, half, half) == 0.0
        assert pure_state_entropy(0.0, half, half) == pytest.approx(1.0)
        assert pure_state_entropy(0.0, 1.0, 0.0) == 0.0

    def test_invalid_coherence_rejected(self):
        with pytest.raises(ConfigurationError, match="coherence"):
            pure_state_entropy(1.5, 1.0, 0.0)

    @pytest.mark.parametrize("fraction", [0.2, 0.5])
    def test_state_entropy_matches_closed_form(self, cold_env, qubit, fraction):
        t = fraction * cold_env.grid.cycle_time
        expected = pure_state_entropy(coherence_closed_form(cold_env, t), qubit.alpha, qubit.beta)
        assert entropy_of_state(joint_state_at(cold_env, qubit, t)) == pytest.approx(
            expected, abs=1e-6
        )


class TestTraceDistance:
    """Trace distance between states."""

    def test_orthogonal_and_identical(self):
        up, down = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
        assert trace_distance(up, down) == pytest.approx(1.0)
        assert trace_distance(up, up) == 0.0

    def test_accepts_joint_states(self, warm_env, qubit):
        early = joint_state_at(warm_env, qubit, 0.0)
        late = joint_state_at(warm_env, qubit, 1.0)
        assert 0.0 < trace_distance(early, late) <= 1.0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ConfigurationError, match="shape"):
            trace_distance(np.eye(2), np.eye(4))


# ═══════════════════════════════════════════════════════════════════════════════
# SERIES & MAXIMUM
# ═══════════════════════════════════════════════════════════════════════════════


class TestMeasureSeries:
    """Observables on a shared time grid."""

    def test_entropy_only_at_zero_temperature(self, cold_env, warm_env, qubit):
        times = [0.0, 0.5, 1.0]
        cold = measure_series(cold_env, qubit, times)
        warm = measure_series(warm_env, qubit, times)

        assert cold.entropy is not None and len(cold.entropy) == 3
        assert warm.entropy is None
        assert warm.coherence[0] == pytest.approx(1.0)

    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigurationError, match="length"):
            MeasureSeries(
                times=[0.0, 1.0], coherence=[1.0], negativity=[0.0, 0.0], purity=[1.0, 1.0]
            )


class TestMaxNegativity:
    """First maximum of the Negativity over a time window."""

    def test_default_window_is_one_cycle(self, cold_env):
        assert default_time_window(cold_env) == (0.0, cold_env.grid.cycle_time)

    def test_zero_temperature_peak_at_half_cycle(self, cold_env, qubit):
        """Three modes on [0, 0.9] peak once, halfway through the cycle."""
        peak = max_negativity(cold_env, qubit)
        half = 0.5 * cold_env.grid.cycle_time
        coherence = coherence_closed_form(cold_env, peak.t_at_max)

        assert not peak.degenerate
        assert peak.t_at_max == pytest.approx(half, abs=1e-3)
        assert peak.value == pytest.approx(0.5 * math.sqrt(1.0 - coherence**2), abs=1e-6)

    def test_refined_peak_beats_grid(self, cold_env, qubit):
        peak = max_negativity(cold_env, qubit)
        times = np.linspace(0.0, cold_env.grid.cycle_time, 400)
        best_scanned = max(negativity_at(cold_env, qubit, float(t)).value for t in times[190:210])
        assert peak.value >= best_scanned - 1e-12

    def test_basis_state_is_degenerate(self, cold_env):
        peak = max_negativity(cold_env, QubitParams(amplitude_0=1.0, amplitude_1=0.0))
        assert peak.degenerate
        assert peak.value == 0.0

    def test_rising_window_has_no_interior_maximum(self, cold_env, qubit):
        quarter = 0.25 * cold_env.grid.cycle_time
        with pytest.raises(NumericalFailureError, match="no interior"):
            max_negativity(cold_env, qubit, (0.0, quarter), grid_points=32)

    def test_slow_rise_is_followed_to_its_top(self, cold_env, qubit, monkeypatch):
        """A sample that is still rising, however slightly, is not taken as the maximum."""

        def profile(t):
            if t < 1.0:
                return t
            if t <= 2.0:
                return 1.0 + 1e-13 * (t - 1.0)
            return 1.0 + 1e-13 - (t - 2.0)

        monkeypatch.setattr(
            "measures.negativity_at",
            lambda env, qubit, t: NegativityResult(
                value=profile(t), negative_eigenvalue_count=1, min_eigenvalue=-profile(t)
            ),
        )
        peak = max_negativity(cold_env, qubit, (0.0, 3.0), grid_points=31)

        assert not peak.degenerate
        assert peak.t_at_max == pytest.approx(2.0, abs=1e-3)
        assert peak.value == pytest.approx(1.0, abs=1e-12)

    def test_too_few_grid_points_rejected(self, cold_env, qubit):
        with pytest.raises(ConfigurationError, match="grid_points"):
            max_negativity(cold_env, qubit, grid_points=8)

    def test_inverted_window_rejected(self, cold_env, qubit):
        with pytest.raises(ConfigurationError, match="window"):
            max_negativity(cold_env, qubit, (2.0, 1.0))
