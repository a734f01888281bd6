"""Tests for (n, T) sweeps of the first Negativity maximum."""

import math
from dataclasses import replace

import pytest

from fock_space import CutoffPolicy, plan_cutoffs
from measures import purity_closed_form
from phonon_model import Environment, build_mode_grid
from sim_errors import NumericalFailureError
from state_dump import read_state_dump
from surface_fit import fit_negativity_surface
from sweep_config import SweepSpec
from sweep_runner import (
    STATUS_FAILED,
    STATUS_SKIPPED,
    SweepRecord,
    cutoff_convergence,
    dump_record_state,
    evaluate_point,
    pool_width,
    run_sweep,
    sweep_points,
    time_window_for,
)


@pytest.fixture(scope="module")
def spec():
    """Two small grids starting at k = 0, at 0 K and 6 K."""
    return SweepSpec(mode_counts=(3, 2), temperatures=(6.0, 0.0), k_min=0.0)


@pytest.fixture(scope="module")
def records(spec):
    """Serial sweep over the fixture spec."""
    return run_sweep(spec)


# ═══════════════════════════════════════════════════════════════════════════════
# ORDERING & BOOKKEEPING
# ═══════════════════════════════════════════════════════════════════════════════


class TestSweepOrder:
    """Deterministic point order."""

    def test_points_sorted_by_n_then_temperature(self, spec):
        assert sweep_points(spec) == [(2, 0.0), (2, 6.0), (3, 0.0), (3, 6.0)]

    def test_records_follow_points(self, spec, records):
        assert [(r.n, r.temperature) for r in records] == sweep_points(spec)

    def test_configured_window_wins(self, spec):
        grid = build_mode_grid(0.0, 0.9, 3, spec.material)
        assert time_window_for(spec, grid) == (0.0, grid.cycle_time)
        assert time_window_for(replace(spec, time_window=(0.0, 2.0)), grid) == (0.0, 2.0)


class TestSweepRecords:
    """Content of completed records."""

    def test_all_points_complete(self, records):
        assert all(r.ok for r in records)
        assert all(r.reason == "" for r in records)

    def test_maximum_inside_window(self, spec, records):
        for record in records:
            grid = build_mode_grid(0.0, 0.9, record.n, spec.material)
            assert 0.0 < record.t_at_max < grid.cycle_time
            assert record.n_max > 0.0

    def test_zero_temperature_maximum_matches_coherence(self, records):
        """For a pure joint state N_max = |alpha beta| sqrt(1 - |u|^2)."""
        for record in records:
            if record.temperature == 0.0:
                expected = 0.5 * math.sqrt(1.0 - record.coherence_at_max**2)
                assert record.n_max == pytest.approx(expected, abs=1e-5)

    def test_initial_purity(self, spec, records):
        for record in records:
            grid = build_mode_grid(0.0, 0.9, record.n, spec.material)
            env = Environment(grid, record.temperature, (1,) * record.n)
            assert record.purity0 == pytest.approx(purity_closed_form(env), rel=1e-12)

    def test_truncation_bookkeeping(self, records):
        for record in records:
            assert len(record.cutoffs_used) == record.n
            assert record.cutoffs_used[0] == 1
            assert record.dimension == math.prod(record.cutoffs_used)
            assert 0.0 <= record.tail_mass_total < 1e-5

    def test_threaded_sweep_matches_serial(self, spec, records):
        threaded = run_sweep(replace(spec, threads=3))
        for serial, parallel in zip(records, threaded):
            assert parallel.cutoffs_used == serial.cutoffs_used
            assert parallel.t_at_max == pytest.approx(serial.t_at_max, rel=1e-12)
            assert parallel.n_max == pytest.approx(serial.n_max, rel=1e-12)


# ═══════════════════════════════════════════════════════════════════════════════
# FAILURES
# ═══════════════════════════════════════════════════════════════════════════════


class TestFailureIsolation:
    """Infeasible and failed points become records."""

    def test_infeasible_points_are_skipped(self, spec):
        tight = replace(spec, cutoff_policy=CutoffPolicy(dim_cap=2))
        skipped = run_sweep(tight)

        assert [r.status for r in skipped] == [STATUS_SKIPPED] * 4
        assert all("cap" in r.reason for r in skipped)
        assert all(math.isnan(r.n_max) for r in skipped)

    def test_numerical_failure_is_recorded(self, spec, monkeypatch):
        def fail(*_args, **_kwargs):
            raise NumericalFailureError("no interior Negativity maximum")

        monkeypatch.setattr("sweep_runner.max_negativity", fail)
        record = evaluate_point(spec, 2, 6.0)

        assert record.status == STATUS_FAILED
        assert "no interior" in record.reason
        assert not record.ok


# ═══════════════════════════════════════════════════════════════════════════════
# RESOURCES, CONVERGENCE & DUMPS
# ═══════════════════════════════════════════════════════════════════════════════


class TestPoolWidth:
    """Worker count under the memory budget."""

    def test_threads_bound_width(self):
        assert pool_width(SweepSpec(threads=4), [16, 32]) == 4

    def test_memory_budget_bounds_width(self):
        assert pool_width(SweepSpec(threads=8, memory_budget_mb=1.0), [2048]) == 1


class TestCutoffConvergence:
    """Raising every kept cutoff by one barely moves N_max."""

    def test_zero_temperature_is_converged(self, spec):
        rows = cutoff_convergence(replace(spec, mode_counts=(2,), temperatures=(0.0,)))

        assert len(rows) == 1
        assert rows[0].checked
        assert rows[0].refined_cutoffs == (1,) + tuple(d + 1 for d in rows[0].cutoffs[1:])
        assert rows[0].delta < 1e-5

    def test_finite_temperature_is_converged(self):
        """Default policy and k_min at 6 K: the pruned soft mode stays at one level."""
        rows = cutoff_convergence(SweepSpec(mode_counts=(3,), temperatures=(6.0,), time_points=64))

        assert len(rows) == 1
        assert rows[0].checked
        assert rows[0].cutoffs[0] == rows[0].refined_cutoffs[0] == 1
        assert rows[0].delta < 1e-4

    def test_raised_cutoffs_over_cap_are_recorded(self):
        base = SweepSpec(mode_counts=(2,), temperatures=(6.0,), time_points=32)
        grid = build_mode_grid(base.k_min, base.k_max, 2, base.material)
        cap = plan_cutoffs(grid.modes, 6.0, grid.cycle_time, CutoffPolicy()).total_dimension
        rows = cutoff_convergence(replace(base, cutoff_policy=CutoffPolicy(dim_cap=cap)))

        assert len(rows) == 1
        assert not rows[0].checked
        assert "cap" in rows[0].reason
        assert math.isnan(rows[0].delta)
        assert math.prod(rows[0].refined_cutoffs) > cap


class TestStateDumps:
    """sigma(t_at_max) written per record."""

    def test_dump_written_for_completed_record(self, spec, records, tmp_path):
        record = records[0]
        path = dump_record_state(spec, record, tmp_path / "states")
        matrix, dimension = read_state_dump(path)

        assert path.name == "sigma_n2_T0K.qesig"
        assert dimension == record.dimension
        assert matrix.shape == (2 * dimension, 2 * dimension)

    def test_no_dump_for_failed_record(self, spec, tmp_path):
        record = SweepRecord(n=2, temperature=6.0, status=STATUS_SKIPPED, reason="cap")
        assert dump_record_state(spec, record, tmp_path) is None
        assert not list(tmp_path.iterdir())


# ═══════════════════════════════════════════════════════════════════════════════
# TRENDS ON SIMULATED DATA
# ═══════════════════════════════════════════════════════════════════════════════


@pytest.fixture(scope="module")
def trend_records():
    """n = 2..4 at the default k range over 6, 9 and 12 K."""
    return run_sweep(
        SweepSpec(mode_counts=(2, 3, 4), temperatures=(6.0, 9.0, 12.0), time_points=96)
    )


def _n_max(records, n, temperature):
    return next(r.n_max for r in records if r.n == n and r.temperature == temperature)


class TestSimulatedTrends:
    """Temperature and size dependence of N_max on small grids."""

    def test_all_points_fit_the_default_cap(self, trend_records):
        assert all(r.ok for r in trend_records)

    def test_negativity_falls_with_temperature(self, trend_records):
        """At n = 4 each step 6 -> 9 -> 12 K loses more than 5 percent."""
        values = [_n_max(trend_records, 4, t) for t in (6.0, 9.0, 12.0)]
        for warmer, colder in zip(values[1:], values[:-1]):
            assert warmer < 0.95 * colder

    def test_larger_grids_lose_more_when_warmer(self, trend_records):
        """The drop from n = 2 to n = 4 is steeper at 12 K than at 6 K."""
        ratio_cold = _n_max(trend_records, 4, 6.0) / _n_max(trend_records, 2, 6.0)
        ratio_warm = _n_max(trend_records, 4, 12.0) / _n_max(trend_records, 2, 12.0)
        assert ratio_warm < ratio_cold

    def test_surface_fits_simulated_grid(self, trend_records):
        fit = fit_negativity_surface(trend_records, min_temperature=4.0)
        assert fit.r_squared >= 0.95
