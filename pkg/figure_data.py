"""
Figure data emission: one RFC-4180 CSV plus a JSON sidecar per figure.

Figures:
    fig2    coherence vs time at 6 K for n = 3, 5, 7, 100 and the continuum limit
    fig3    Negativity vs time for n = 10 at 6, 9, 12 K
    fig4    first Negativity maximum vs temperature for n = 2, 4, 6
    fig5    Negativity vs time for n = 6, 8, 10 at 6 K, with first-maximum times
    fig6    first Negativity maximum vs n at 6, 9, 12 K, with the fitted surface
    purity  environment purity vs temperature for n = 2, 4, 6

Outputs are byte-stable for an identical configuration and tool version:
numbers are written with 17 significant digits, rows end in CRLF and the
sidecar is sorted JSON. Wall-clock times never reach the files.

Usage:
    from figure_data import emit_figure_data

    paths = emit_figure_data("fig2", spec, Path("results"))
"""

import csv
import io
import json
import logging
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cli_utils import safe_save
from continuum import QuadratureSpec, continuum_curve
from fock_space import plan_cutoffs
from measures import coherence_closed_form, max_negativity, negativity_at, purity_closed_form
from phonon_model import Environment, ModeGrid, build_mode_grid
from sim_errors import ConfigurationError, InfeasibleDimensionError, SimulationError
from surface_fit import fit_negativity_surface, nmax_surface, power_law_exponent, records_at
from sweep_config import SweepSpec, spec_to_dict
from sweep_runner import SweepRecord, pool_width, run_sweep, time_window_for

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════════════════════════
# CONSTANTS
# ═══════════════════════════════════════════════════════════════════════════════

PROJECT_NAME = "qubit-phonon-entanglement"
_PYPROJECT_VERSION_RE = re.compile(r'^version\s*=\s*"([^"]+)"\s*$')

FIGURE_IDS = ("fig2", "fig3", "fig4", "fig5", "fig6", "purity")

# Samples per Negativity-vs-time series (each sample is one full eigensolve).
SERIES_POINTS = 121

SWEEP_COLUMNS = (
    "n",
    "T_K",
    "t_at_max_ps",
    "n_max",
    "purity0",
    "coherence_min",
    "coherence_at_max",
    "cutoffs",
    "tail_mass_total",
    "status",
    "reason",
)


@dataclass(frozen=True)
class FigureAxes:
    """Canonical axes of a figure; CLI flags may replace them."""

    mode_counts: Tuple[int, ...]
    temperatures: Tuple[float, ...]
    time_window: Optional[Tuple[float, float]] = None


DEFAULT_AXES: Dict[str, FigureAxes] = {
    "fig2": FigureAxes((3, 5, 7, 100), (6.0,), (0.0, 8.0)),
    "fig3": FigureAxes((10,), (6.0, 9.0, 12.0)),
    "fig4": FigureAxes(
        (2, 4, 6), (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0)
    ),
    "fig5": FigureAxes((6, 8, 10), (6.0,)),
    "fig6": FigureAxes((2, 3, 4, 5, 6, 7, 8), (6.0, 9.0, 12.0)),
    "purity": FigureAxes((2, 4, 6), tuple(0.5 * i for i in range(41))),
}


@dataclass
class FigureTable:
    """Columns, rows and sidecar metadata of one figure."""

    figure_id: str
    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


_resolved_version: Optional[str] = None


def resolve_tool_version() -> str:
    """Installed package version, falling back to pyproject parsing."""
    global _resolved_version
    if _resolved_version:
        return _resolved_version

    try:
        _resolved_version = version(PROJECT_NAME)
        return _resolved_version
    except PackageNotFoundError:
        pass

    pyproject_path = Path(__file__).resolve().with_name("pyproject.toml")
    try:
        for line in pyproject_path.read_text(encoding="utf-8").splitlines():
            match = _PYPROJECT_VERSION_RE.match(line.strip())
            if match:
                _resolved_version = match.group(1)
                return _resolved_version
    except OSError:
        pass

    _resolved_version = "unknown"
    return _resolved_version


# ═══════════════════════════════════════════════════════════════════════════════
# SERIALIZATION
# ═══════════════════════════════════════════════════════════════════════════════


def format_value(value: Any) -> str:
    """17 significant digits for floats, '' for NaN, str() for the rest."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return "" if math.isnan(value) else format(float(value), ".17g")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def render_csv(columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(value) for value in row])
    return buffer.getvalue()


def _json_ready(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def render_sidecar(payload: Dict[str, Any]) -> str:
    return json.dumps(_json_ready(payload), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _write_text(path: Path, text: str, description: str) -> Path:
    return safe_save(
        path,
        lambda target: target.write_bytes(text.encode("utf-8")),
        logger,
        description,
    )


def write_figure(table: FigureTable, spec: SweepSpec, output_dir: Path) -> Tuple[Path, Path]:
    """Write ``<id>.csv`` and ``<id>.json`` into ``output_dir``."""
    sidecar = {
        "figure": table.figure_id,
        "tool_version": resolve_tool_version(),
        "columns": table.columns,
        "spec": spec_to_dict(spec),
        "warnings": table.warnings,
        **table.metadata,
    }
    csv_path = _write_text(
        output_dir / f"{table.figure_id}.csv", render_csv(table.columns, table.rows), "CSV"
    )
    json_path = _write_text(output_dir / f"{table.figure_id}.json", render_sidecar(sidecar), "sidecar")
    return csv_path, json_path


def _record_row(record: SweepRecord) -> List[Any]:
    return [
        record.n,
        record.temperature,
        record.t_at_max,
        record.n_max,
        record.purity0,
        record.coherence_min,
        record.coherence_at_max,
        ";".join(str(d) for d in record.cutoffs_used),
        record.tail_mass_total,
        record.status,
        record.reason,
    ]


def write_sweep(records: Sequence[SweepRecord], spec: SweepSpec, output_dir: Path) -> Tuple[Path, Path]:
    """Write sweep records as ``sweep.csv`` and their sidecar ``sweep.json``."""
    table = FigureTable(
        figure_id="sweep",
        columns=list(SWEEP_COLUMNS),
        rows=[_record_row(record) for record in records],
        warnings=[
            f"n={r.n} T={r.temperature:g} K {r.status}: {r.reason}" for r in records if not r.ok
        ],
    )
    return write_figure(table, spec, output_dir)


def _parse_float(text: str) -> float:
    return float(text) if text else math.nan


def read_sweep_csv(path: Path) -> List[SweepRecord]:
    """Read records written by ``write_sweep`` back for fitting."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigurationError(f"Cannot read sweep records {path}: {err}") from err

    reader = csv.DictReader(io.StringIO(text, newline=""))
    missing = set(SWEEP_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ConfigurationError(f"{path} lacks sweep column(s): {', '.join(sorted(missing))}")

    records = []
    try:
        for row in reader:
            records.append(
                SweepRecord(
                    n=int(row["n"]),
                    temperature=float(row["T_K"]),
                    t_at_max=_parse_float(row["t_at_max_ps"]),
                    n_max=_parse_float(row["n_max"]),
                    purity0=_parse_float(row["purity0"]),
                    coherence_min=_parse_float(row["coherence_min"]),
                    coherence_at_max=_parse_float(row["coherence_at_max"]),
                    cutoffs_used=[int(d) for d in row["cutoffs"].split(";") if d],
                    tail_mass_total=_parse_float(row["tail_mass_total"]),
                    status=row["status"],
                    reason=row["reason"],
                )
            )
    except ValueError as err:
        raise ConfigurationError(f"Malformed sweep record in {path}: {err}") from err
    logger.info("Read %d sweep record(s) from %s", len(records), path)
    return records


# ═══════════════════════════════════════════════════════════════════════════════
# HELPERS
# ═══════════════════════════════════════════════════════════════════════════════


def _temperature_label(temperature: float) -> str:
    return f"T{temperature:g}"


def _unit_environment(grid: ModeGrid, temperature: float) -> Environment:
    """Closed forms need no Fock space; every mode keeps one level."""
    return Environment(grid, temperature, (1,) * len(grid.modes))


def _environment(
    spec: SweepSpec, grid: ModeGrid, temperature: float, t_max: float
) -> Tuple[Environment, Dict[str, Any]]:
    plan = plan_cutoffs(grid.modes, temperature, t_max, spec.cutoff_policy)
    env = Environment(grid, temperature, plan.dims, dim_cap=spec.cutoff_policy.dim_cap)
    bookkeeping = {
        "cutoffs": list(plan.dims),
        "requested_cutoffs": list(plan.requested),
        "pruned_modes": list(plan.pruned),
        "pruned_displacement_bounds": list(plan.displacement_bounds),
        "pruned_error_bound": plan.pruned_error_bound,
        "clamped_modes": list(plan.clamped),
        "tail_masses": list(plan.tail_masses),
        "tail_mass_total": plan.tail_mass_total,
    }
    return env, bookkeeping


def _feasible_mode_count(
    spec: SweepSpec, n: int, temperatures: Sequence[float], warnings: List[str]
) -> int:
    """Largest n' <= n whose cutoff plans fit the dimension cap at every temperature."""
    for candidate in range(n, 1, -1):
        grid = build_mode_grid(spec.k_min, spec.k_max, candidate, spec.material)
        window = time_window_for(spec, grid)
        try:
            for temperature in temperatures:
                plan_cutoffs(grid.modes, temperature, window[1], spec.cutoff_policy)
        except InfeasibleDimensionError as err:
            logger.debug("n=%d infeasible: %s", candidate, err)
            continue
        if candidate != n:
            message = (
                f"n reduced from {n} to {candidate}: requested cutoffs exceed dimension cap "
                f"{spec.cutoff_policy.dim_cap}"
            )
            logger.warning("%s", message)
            warnings.append(message)
        return candidate
    raise InfeasibleDimensionError(
        f"no mode count <= {n} fits dimension cap {spec.cutoff_policy.dim_cap}"
    )


def _negativity_series(spec: SweepSpec, env: Environment, times: np.ndarray) -> List[float]:
    width = pool_width(spec, [env.dimension])

    def at(t: float) -> float:
        return negativity_at(env, spec.qubit, float(t)).value

    if width == 1:
        return [at(t) for t in times]
    with ThreadPoolExecutor(max_workers=width) as pool:
        return list(pool.map(at, times))


def _sweep_columns(
    records: Sequence[SweepRecord], keys: Sequence[Any], key_of: Callable[[SweepRecord], Any]
) -> Dict[Any, float]:
    return {key_of(r): r.n_max for r in records if key_of(r) in keys}


def _sweep_bookkeeping(records: Sequence[SweepRecord]) -> Dict[str, Any]:
    return {
        f"n{r.n}_{_temperature_label(r.temperature)}": {
            "status": r.status,
            "cutoffs": list(r.cutoffs_used),
            "tail_mass_total": r.tail_mass_total,
            "t_at_max": r.t_at_max,
            "degenerate": r.degenerate,
        }
        for r in records
    }


def _record_warnings(records: Sequence[SweepRecord]) -> List[str]:
    return [f"n={r.n} T={r.temperature:g} K {r.status}: {r.reason}" for r in records if not r.ok]


# ═══════════════════════════════════════════════════════════════════════════════
# FIGURES
# ═══════════════════════════════════════════════════════════════════════════════


def build_fig2(spec: SweepSpec, axes: FigureAxes) -> FigureTable:
    temperature = axes.temperatures[0]
    start, end = axes.time_window or (0.0, 8.0)
    times = np.linspace(start, end, spec.time_points)
    columns = ["t_ps"] + [f"coherence_n{n}" for n in axes.mode_counts] + ["coherence_continuum"]

    series = []
    for n in axes.mode_counts:
        grid = build_mode_grid(spec.k_min, spec.k_max, n, spec.material)
        series.append(coherence_closed_form(_unit_environment(grid, temperature), times))
    continuum = continuum_curve(
        spec.material, temperature, [float(t) for t in times], QuadratureSpec(), spec.threads
    )

    rows = [
        [float(t)] + [float(s[i]) for s in series] + [continuum[i]] for i, t in enumerate(times)
    ]
    return FigureTable(
        figure_id="fig2",
        columns=columns,
        rows=rows,
        metadata={"temperature": temperature, "time_window": [start, end]},
    )


def build_negativity_series(
    figure_id: str, spec: SweepSpec, axes: FigureAxes, by_temperature: bool
) -> FigureTable:
    """fig3 (one n, several T) and fig5 (several n, one T)."""
    table = FigureTable(figure_id=figure_id, columns=["t_ps"])
    cutoffs: Dict[str, Any] = {}
    first_maxima: Dict[str, Any] = {}

    if by_temperature:
        n = _feasible_mode_count(spec, axes.mode_counts[0], axes.temperatures, table.warnings)
        curves = [(n, t, _temperature_label(t)) for t in axes.temperatures]
    else:
        temperature = axes.temperatures[0]
        curves = [(n, temperature, f"n{n}") for n in axes.mode_counts]

    grids = {n: build_mode_grid(spec.k_min, spec.k_max, n, spec.material) for n, _, _ in curves}
    window = axes.time_window or spec.time_window
    if window is None:
        window = (0.0, max(grid.cycle_time for grid in grids.values()))
    times = np.linspace(window[0], window[1], SERIES_POINTS)

    columns = []
    for n, temperature, label in curves:
        grid = grids[n]
        try:
            env, bookkeeping = _environment(spec, grid, temperature, window[1])
            if bookkeeping["clamped_modes"]:
                message = (
                    f"{label} (n={n}, T={temperature:g} K) uses clamped cutoffs for modes "
                    f"{bookkeeping['clamped_modes']}; results are not converged"
                )
                logger.warning("%s", message)
                table.warnings.append(message)
            values = _negativity_series(spec, env, times)
            peak = max_negativity(env, spec.qubit, time_window_for(spec, grid), spec.time_points)
        except SimulationError as err:
            message = f"{label} (n={n}, T={temperature:g} K) not computed: {err}"
            logger.warning("%s", message)
            table.warnings.append(message)
            values = [math.nan] * len(times)
            bookkeeping, peak = {}, None
        table.columns.append(f"negativity_{label}")
        columns.append(values)
        cutoffs[label] = bookkeeping
        if peak is not None:
            first_maxima[label] = {"t_at_max": peak.t_at_max, "value": peak.value}

    table.rows = [[float(t)] + [c[i] for c in columns] for i, t in enumerate(times)]
    table.metadata = {
        "mode_counts": sorted({n for n, _, _ in curves}),
        "temperatures": sorted({t for _, t, _ in curves}),
        "time_window": list(window),
        "truncation": cutoffs,
        "first_maxima": first_maxima,
    }
    return table


def build_fig4(spec: SweepSpec, axes: FigureAxes) -> FigureTable:
    records = run_sweep(spec, [(n, t) for t in axes.temperatures for n in axes.mode_counts])
    columns = ["T_K"] + [f"nmax_n{n}" for n in axes.mode_counts]
    rows = []
    for temperature in axes.temperatures:
        values = _sweep_columns(records_at(records, temperature), axes.mode_counts, lambda r: r.n)
        rows.append([temperature] + [values.get(n, math.nan) for n in axes.mode_counts])
    return FigureTable(
        figure_id="fig4",
        columns=columns,
        rows=rows,
        metadata={"truncation": _sweep_bookkeeping(records)},
        warnings=_record_warnings(records),
    )


def build_fig6(spec: SweepSpec, axes: FigureAxes) -> FigureTable:
    records = run_sweep(spec, [(n, t) for n in axes.mode_counts for t in axes.temperatures])
    warnings = _record_warnings(records)
    labels = [_temperature_label(t) for t in axes.temperatures]
    columns = ["n"] + [f"nmax_{label}" for label in labels] + [f"fit_{label}" for label in labels]

    fit_payload: Optional[Dict[str, Any]] = None
    fit = None
    try:
        fit = fit_negativity_surface(records, spec.fit_min_temperature)
        fit_payload = fit.to_dict()
    except SimulationError as err:
        message = f"surface fit unavailable: {err}"
        logger.warning("%s", message)
        warnings.append(message)

    # Slopes against log(n + D), with D from the fitted surface.
    offset = fit.D if fit is not None else 0.0
    exponents: Dict[str, Optional[float]] = {}
    for temperature, label in zip(axes.temperatures, labels):
        try:
            exponents[label] = power_law_exponent(records_at(records, temperature), d_offset=offset)
        except SimulationError as err:
            logger.debug("No power law at %s: %s", label, err)
            exponents[label] = None

    rows = []
    for n in axes.mode_counts:
        measured = _sweep_columns(
            [r for r in records if r.n == n], axes.temperatures, lambda r: r.temperature
        )
        fitted = [
            nmax_surface(n, t, fit) if fit is not None and t > 0 else math.nan
            for t in axes.temperatures
        ]
        rows.append([n] + [measured.get(t, math.nan) for t in axes.temperatures] + fitted)

    return FigureTable(
        figure_id="fig6",
        columns=columns,
        rows=rows,
        metadata={
            "fit": fit_payload,
            "power_law_exponents": exponents,
            "power_law_offset": offset,
            "truncation": _sweep_bookkeeping(records),
        },
        warnings=warnings,
    )


def build_purity(spec: SweepSpec, axes: FigureAxes) -> FigureTable:
    grids = [build_mode_grid(spec.k_min, spec.k_max, n, spec.material) for n in axes.mode_counts]
    rows = [
        [temperature] + [purity_closed_form(_unit_environment(grid, temperature)) for grid in grids]
        for temperature in axes.temperatures
    ]
    return FigureTable(
        figure_id="purity",
        columns=["T_K"] + [f"purity_n{n}" for n in axes.mode_counts],
        rows=rows,
    )


def figure_axes(
    figure_id: str,
    mode_counts: Optional[Sequence[int]] = None,
    temperatures: Optional[Sequence[float]] = None,
) -> FigureAxes:
    if figure_id not in DEFAULT_AXES:
        raise ConfigurationError(f"unknown figure {figure_id!r} (choose from {', '.join(FIGURE_IDS)})")
    axes = DEFAULT_AXES[figure_id]
    if mode_counts:
        axes = replace(axes, mode_counts=tuple(int(n) for n in mode_counts))
    if temperatures:
        axes = replace(axes, temperatures=tuple(float(t) for t in temperatures))
    return axes


def build_figure(figure_id: str, spec: SweepSpec, axes: FigureAxes) -> FigureTable:
    if figure_id == "fig2":
        return build_fig2(spec, axes)
    if figure_id == "fig3":
        return build_negativity_series("fig3", spec, axes, by_temperature=True)
    if figure_id == "fig4":
        return build_fig4(spec, axes)
    if figure_id == "fig5":
        return build_negativity_series("fig5", spec, axes, by_temperature=False)
    if figure_id == "fig6":
        return build_fig6(spec, axes)
    return build_purity(spec, axes)


def emit_figure_data(
    figure_id: str,
    spec: Optional[SweepSpec] = None,
    output_dir: Optional[Path] = None,
    mode_counts: Optional[Sequence[int]] = None,
    temperatures: Optional[Sequence[float]] = None,
) -> Tuple[Path, Path]:
    """Compute one figure's data and write its CSV and JSON sidecar."""
    spec = spec or SweepSpec()
    axes = figure_axes(figure_id, mode_counts, temperatures)
    logger.info(
        "Building %s: n=%s, T=%s K", figure_id, list(axes.mode_counts), list(axes.temperatures)
    )
    table = build_figure(figure_id, spec, axes)
    return write_figure(table, spec, Path(output_dir or spec.output_dir))
