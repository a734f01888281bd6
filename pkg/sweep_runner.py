"""
Sweeps of the first Negativity maximum over (n, T).

Each point builds its mode grid, plans cutoffs, scans the Negativity over the
time window and records the first maximum together with purity, coherence
and truncation bookkeeping. Points run in a thread pool whose width is
bounded by the memory budget; a failing point is recorded, never raised.

Usage:
    from sweep_config import SweepSpec
    from sweep_runner import run_sweep

    records = run_sweep(SweepSpec(mode_counts=(3, 4), temperatures=(6.0,)))
"""

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from fock_space import CutoffPlan, plan_cutoffs, tail_masses_for
from measures import coherence_closed_form, max_negativity, purity_closed_form
from phonon_model import Environment, ModeGrid, build_mode_grid
from sim_errors import InfeasibleDimensionError, SimulationError
from state_assembly import joint_state_at
from state_dump import write_state_dump
from sweep_config import SweepSpec

logger = logging.getLogger(__name__)

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"
STATUS_FAILED = "failed"

# σ(t), its partial transpose and the eigensolver workspace.
_MATRICES_PER_POINT = 4
_BYTES_PER_ENTRY = 16


# ═══════════════════════════════════════════════════════════════════════════════
# DATA MODELS
# ═══════════════════════════════════════════════════════════════════════════════


@dataclass
class SweepRecord:
    """Outcome of one (n, T) sweep point."""

    n: int
    temperature: float
    t_at_max: float = math.nan
    n_max: float = math.nan
    purity0: float = math.nan
    coherence_min: float = math.nan
    coherence_at_max: float = math.nan
    cutoffs_used: List[int] = field(default_factory=list)
    tail_mass_total: float = math.nan
    wall_time: float = 0.0
    status: str = STATUS_OK
    reason: str = ""
    degenerate: bool = False

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    @property
    def dimension(self) -> int:
        return math.prod(self.cutoffs_used) if self.cutoffs_used else 0


@dataclass(frozen=True)
class ConvergenceRow:
    """N_max at the planned cutoffs and with every kept mode's cutoff raised."""

    n: int
    temperature: float
    n_max: float
    n_max_refined: float
    cutoffs: Tuple[int, ...]
    refined_cutoffs: Tuple[int, ...]
    reason: str = ""

    @property
    def checked(self) -> bool:
        return not self.reason

    @property
    def delta(self) -> float:
        if not self.checked:
            return math.nan
        return abs(self.n_max_refined - self.n_max)


@dataclass(frozen=True)
class _PlannedPoint:
    n: int
    temperature: float
    grid: ModeGrid
    window: Tuple[float, float]
    plan: CutoffPlan


# ═══════════════════════════════════════════════════════════════════════════════
# SINGLE POINT
# ═══════════════════════════════════════════════════════════════════════════════


def time_window_for(spec: SweepSpec, grid: ModeGrid) -> Tuple[float, float]:
    """The configured window, or one full cycle of the grid."""
    if spec.time_window is not None:
        return spec.time_window
    return 0.0, grid.cycle_time


def _plan_point(spec: SweepSpec, n: int, temperature: float) -> _PlannedPoint:
    grid = build_mode_grid(spec.k_min, spec.k_max, n, spec.material)
    window = time_window_for(spec, grid)
    plan = plan_cutoffs(grid.modes, temperature, window[1], spec.cutoff_policy)
    return _PlannedPoint(n=n, temperature=temperature, grid=grid, window=window, plan=plan)


def _measure_point(
    spec: SweepSpec, point: _PlannedPoint, cutoffs: Optional[Sequence[int]] = None
) -> SweepRecord:
    started = time.perf_counter()
    dims = tuple(cutoffs) if cutoffs is not None else point.plan.dims
    env = Environment(
        point.grid,
        point.temperature,
        dims,
        dim_cap=max(spec.cutoff_policy.dim_cap, math.prod(dims)),
    )

    peak = max_negativity(env, spec.qubit, point.window, spec.time_points)
    scan = np.linspace(point.window[0], point.window[1], spec.time_points)
    coherence = coherence_closed_form(env, scan)
    record = SweepRecord(
        n=point.n,
        temperature=point.temperature,
        t_at_max=peak.t_at_max,
        n_max=peak.value,
        purity0=purity_closed_form(env),
        coherence_min=float(np.min(coherence)),
        coherence_at_max=float(coherence_closed_form(env, peak.t_at_max)),
        cutoffs_used=list(dims),
        tail_mass_total=float(sum(tail_masses_for(env.modes, point.temperature, dims))),
        degenerate=peak.degenerate,
    )
    record.wall_time = time.perf_counter() - started
    logger.info(
        "n=%d T=%.4g K: N_max=%.6g at t=%.4g ps (D=%d, %.2fs)",
        record.n,
        record.temperature,
        record.n_max,
        record.t_at_max,
        env.dimension,
        record.wall_time,
    )
    return record


def _failed(n: int, temperature: float, status: str, err: Exception) -> SweepRecord:
    logger.warning("n=%d T=%.4g K %s: %s", n, temperature, status, err)
    return SweepRecord(n=n, temperature=temperature, status=status, reason=str(err))


def _guarded(n: int, temperature: float, action: Callable[[], SweepRecord]) -> SweepRecord:
    try:
        return action()
    except InfeasibleDimensionError as err:
        return _failed(n, temperature, STATUS_SKIPPED, err)
    except (SimulationError, np.linalg.LinAlgError) as err:
        return _failed(n, temperature, STATUS_FAILED, err)


def evaluate_point(spec: SweepSpec, n: int, temperature: float) -> SweepRecord:
    """One sweep point; infeasible and failed points come back as records."""
    return _guarded(n, temperature, lambda: _measure_point(spec, _plan_point(spec, n, temperature)))


# ═══════════════════════════════════════════════════════════════════════════════
# SWEEPS
# ═══════════════════════════════════════════════════════════════════════════════


def sweep_points(spec: SweepSpec) -> List[Tuple[int, float]]:
    """(n, T) pairs in deterministic order: n ascending, then T ascending."""
    return [(n, t) for n in sorted(spec.mode_counts) for t in sorted(spec.temperatures)]


def pool_width(spec: SweepSpec, dimensions: Iterable[int]) -> int:
    """Worker count allowed by ``threads`` and the memory budget for the largest point."""
    largest = max(dimensions, default=1)
    per_point = _MATRICES_PER_POINT * _BYTES_PER_ENTRY * (2 * largest) ** 2
    budget = spec.memory_budget_mb * 1024 * 1024
    return max(1, min(spec.threads, int(budget // per_point)))


def run_sweep(
    spec: SweepSpec, points: Optional[Sequence[Tuple[int, float]]] = None
) -> List[SweepRecord]:
    """
    Evaluate every (n, T) point of ``spec`` (or of ``points``) in order.

    The returned list matches the order of the points regardless of the
    pool width; infeasible points are ``skipped`` and numerical failures
    ``failed``, each with the reason text.
    """
    pairs = list(points) if points is not None else sweep_points(spec)
    planned: List[Tuple[int, float, Optional[_PlannedPoint], Optional[SweepRecord]]] = []
    for n, temperature in pairs:
        try:
            planned.append((n, temperature, _plan_point(spec, n, temperature), None))
        except InfeasibleDimensionError as err:
            planned.append((n, temperature, None, _failed(n, temperature, STATUS_SKIPPED, err)))
        except SimulationError as err:
            planned.append((n, temperature, None, _failed(n, temperature, STATUS_FAILED, err)))

    dims = [entry[2].plan.total_dimension for entry in planned if entry[2] is not None]
    width = pool_width(spec, dims)
    logger.info("Sweeping %d point(s) with %d worker(s)", len(pairs), width)

    def run(entry) -> SweepRecord:
        n, temperature, point, ready = entry
        if ready is not None:
            return ready
        return _guarded(n, temperature, lambda: _measure_point(spec, point))

    if width == 1:
        records = [run(entry) for entry in planned]
    else:
        with ThreadPoolExecutor(max_workers=width) as pool:
            records = list(pool.map(run, planned))

    failed = sum(1 for record in records if not record.ok)
    if failed:
        logger.warning("%d of %d sweep point(s) did not complete", failed, len(records))
    return records


def cutoff_convergence(spec: SweepSpec, step: int = 1) -> List[ConvergenceRow]:
    """
    Re-run every point with each kept mode's cutoff raised by ``step``.

    Pruned modes stay at one level. Points whose planned or raised cutoffs
    exceed the dimension cap, or whose measurement fails, are returned as
    rows with a ``reason`` and no delta.
    """
    rows: List[ConvergenceRow] = []
    cap = spec.cutoff_policy.dim_cap
    for n, temperature in sweep_points(spec):
        cutoffs: Tuple[int, ...] = ()
        refined_dims: Tuple[int, ...] = ()
        try:
            point = _plan_point(spec, n, temperature)
            cutoffs = point.plan.dims
            refined_dims = point.plan.incremented(step)
            if math.prod(refined_dims) > cap:
                raise InfeasibleDimensionError(
                    f"raised cutoffs {refined_dims} need dimension "
                    f"{math.prod(refined_dims)} (cap {cap})"
                )
            base = _measure_point(spec, point)
            refined = _measure_point(spec, point, refined_dims)
        except SimulationError as err:
            logger.warning("Convergence check skipped for n=%d T=%.4g K: %s", n, temperature, err)
            rows.append(
                ConvergenceRow(
                    n=n,
                    temperature=temperature,
                    n_max=math.nan,
                    n_max_refined=math.nan,
                    cutoffs=cutoffs,
                    refined_cutoffs=refined_dims,
                    reason=str(err),
                )
            )
            continue
        row = ConvergenceRow(
            n=n,
            temperature=temperature,
            n_max=base.n_max,
            n_max_refined=refined.n_max,
            cutoffs=point.plan.dims,
            refined_cutoffs=refined_dims,
        )
        logger.info(
            "n=%d T=%.4g K: |dN_max| = %.3e with cutoffs %s -> %s",
            n,
            temperature,
            row.delta,
            row.cutoffs,
            row.refined_cutoffs,
        )
        rows.append(row)
    return rows


# ═══════════════════════════════════════════════════════════════════════════════
# STATE DUMPS
# ═══════════════════════════════════════════════════════════════════════════════


def dump_record_state(spec: SweepSpec, record: SweepRecord, directory: Path) -> Optional[Path]:
    """Write σ(t_at_max) of a completed record as a binary dump."""
    if not record.ok:
        return None
    grid = build_mode_grid(spec.k_min, spec.k_max, record.n, spec.material)
    dims = tuple(record.cutoffs_used)
    cap = max(spec.cutoff_policy.dim_cap, math.prod(dims))
    env = Environment(grid, record.temperature, dims, dim_cap=cap)
    state = joint_state_at(env, spec.qubit, record.t_at_max)
    name = f"sigma_n{record.n}_T{record.temperature:g}K.qesig"
    return write_state_dump(state, directory / name)
