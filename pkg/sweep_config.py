"""
Run configuration for sweeps and figure data.

A SweepSpec is read from a JSON or YAML file (both go through
``yaml.safe_load``), validated strictly, and overridden by CLI flags.

Example configuration:

    mode_counts: [3, 4, 5, 6, 7]
    temperatures: [6, 9, 12]
    qubit: {energy_splitting: 0.0, alpha: [0.7071067811865476, 0], beta: 0.7071067811865476}
    cutoff_policy: {tail_epsilon: 1.0e-6, dim_cap: 4096}
    output_dir: results
"""

import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import yaml

from fock_space import CutoffPolicy
from phonon_model import MaterialParams, QubitParams
from sim_errors import ConfigurationError

logger = logging.getLogger(__name__)

# ═══════════════════════════════════════════════════════════════════════════════
# DEFAULTS
# ═══════════════════════════════════════════════════════════════════════════════

DEFAULT_MODE_COUNTS = (3, 4, 5, 6, 7)
DEFAULT_TEMPERATURES = (6.0, 9.0, 12.0)
DEFAULT_K_MIN = 0.001  # nm⁻¹
DEFAULT_K_MAX = 0.9  # nm⁻¹
DEFAULT_TIME_POINTS = 400
DEFAULT_FIT_MIN_TEMPERATURE = 4.0  # K
DEFAULT_MEMORY_BUDGET_MB = 2048.0

_QUBIT_KEYS = ("energy_splitting", "alpha", "beta")


@dataclass(frozen=True)
class SweepSpec:
    """Everything a sweep or figure run depends on."""

    mode_counts: Tuple[int, ...] = DEFAULT_MODE_COUNTS
    temperatures: Tuple[float, ...] = DEFAULT_TEMPERATURES
    qubit: QubitParams = field(default_factory=QubitParams)
    k_min: float = DEFAULT_K_MIN
    k_max: float = DEFAULT_K_MAX
    material: MaterialParams = field(default_factory=MaterialParams)
    time_window: Optional[Tuple[float, float]] = None  # None: one full cycle per grid
    time_points: int = DEFAULT_TIME_POINTS
    cutoff_policy: CutoffPolicy = field(default_factory=CutoffPolicy)
    fit_min_temperature: float = DEFAULT_FIT_MIN_TEMPERATURE
    threads: int = 1
    memory_budget_mb: float = DEFAULT_MEMORY_BUDGET_MB
    output_dir: str = "results"
    dump_states: bool = False

    def __post_init__(self) -> None:
        if not self.mode_counts:
            raise ConfigurationError("mode_counts must not be empty")
        if not self.temperatures:
            raise ConfigurationError("temperatures must not be empty")
        for n in self.mode_counts:
            if isinstance(n, bool) or not isinstance(n, int) or n < 2:
                raise ConfigurationError(f"mode counts must be integers >= 2, got {n!r}")
        for temperature in self.temperatures:
            if not math.isfinite(temperature) or temperature < 0:
                raise ConfigurationError(f"temperatures must be finite and >= 0, got {temperature}")
        if not (math.isfinite(self.k_min) and math.isfinite(self.k_max)):
            raise ConfigurationError("k bounds must be finite")
        if self.k_min < 0 or self.k_max <= self.k_min:
            raise ConfigurationError(
                f"need 0 <= k_min < k_max, got k_min={self.k_min}, k_max={self.k_max}"
            )
        if self.time_window is not None:
            start, end = self.time_window
            if not (math.isfinite(start) and math.isfinite(end)) or start < 0 or end <= start:
                raise ConfigurationError(f"invalid time_window {self.time_window}")
        if self.time_points < 16:
            raise ConfigurationError(f"time_points must be >= 16, got {self.time_points}")
        if self.fit_min_temperature < 0:
            raise ConfigurationError("fit_min_temperature must be >= 0")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")
        if not self.memory_budget_mb > 0:
            raise ConfigurationError(f"memory_budget_mb must be > 0, got {self.memory_budget_mb}")


# ═══════════════════════════════════════════════════════════════════════════════
# PARSING
# ═══════════════════════════════════════════════════════════════════════════════


def _reject_unknown(section: str, data: Mapping[str, Any], allowed: Tuple[str, ...]) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ConfigurationError(
            f"unknown {section} key(s): {', '.join(map(str, unknown))} "
            f"(allowed: {', '.join(allowed)})"
        )


def _require_mapping(section: str, value: Any) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigurationError(f"{section} must be a mapping, got {type(value).__name__}")
    return value


def parse_complex(value: Any, name: str = "value") -> complex:
    """A number or an ``[re, im]`` pair as a complex number."""
    if isinstance(value, bool):
        raise ConfigurationError(f"{name} must be a number or [re, im], got {value!r}")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        try:
            return complex(float(value[0]), float(value[1]))
        except (TypeError, ValueError) as err:
            raise ConfigurationError(f"{name} must hold two numbers, got {value!r}") from err
    raise ConfigurationError(f"{name} must be a number or [re, im], got {value!r}")


def _parse_qubit(data: Mapping[str, Any]) -> QubitParams:
    _reject_unknown("qubit", data, _QUBIT_KEYS)
    defaults = QubitParams()
    return QubitParams(
        energy_splitting=float(data.get("energy_splitting", defaults.energy_splitting)),
        amplitude_0=parse_complex(data.get("alpha", defaults.amplitude_0), "qubit.alpha"),
        amplitude_1=parse_complex(data.get("beta", defaults.amplitude_1), "qubit.beta"),
    )


def _parse_dataclass(section: str, cls, data: Mapping[str, Any]):
    allowed = tuple(f.name for f in fields(cls))
    _reject_unknown(section, data, allowed)
    try:
        return cls(**dict(data))
    except TypeError as err:
        raise ConfigurationError(f"invalid {section}: {err}") from err


def _parse_numbers(name: str, value: Any, kind) -> Tuple:
    if not isinstance(value, (list, tuple)):
        raise ConfigurationError(f"{name} must be a list, got {type(value).__name__}")
    try:
        parsed = [kind(item) for item in value]
    except (TypeError, ValueError) as err:
        raise ConfigurationError(f"{name} holds a non-numeric entry: {value!r}") from err
    if kind is int and any(p != item for p, item in zip(parsed, value)):
        raise ConfigurationError(f"{name} must hold integers, got {value!r}")
    return tuple(sorted(set(parsed)))


def _parse_scalar(name: str, value: Any, kind) -> Any:
    if isinstance(value, bool):
        raise ConfigurationError(f"{name} must be a number, got {value!r}")
    try:
        return kind(value)
    except (TypeError, ValueError) as err:
        raise ConfigurationError(f"{name} must be a number, got {value!r}") from err


def sweep_spec_from_dict(data: Mapping[str, Any]) -> SweepSpec:
    """Build a SweepSpec from a parsed configuration mapping."""
    allowed = tuple(f.name for f in fields(SweepSpec))
    _reject_unknown("configuration", data, allowed)

    kwargs: Dict[str, Any] = {}
    for key, value in data.items():
        if key == "mode_counts":
            kwargs[key] = _parse_numbers(key, value, int)
        elif key == "temperatures":
            kwargs[key] = _parse_numbers(key, value, float)
        elif key == "qubit":
            kwargs[key] = _parse_qubit(_require_mapping(key, value))
        elif key == "material":
            kwargs[key] = _parse_dataclass(key, MaterialParams, _require_mapping(key, value))
        elif key == "cutoff_policy":
            kwargs[key] = _parse_dataclass(key, CutoffPolicy, _require_mapping(key, value))
        elif key == "time_window":
            if value is None:
                kwargs[key] = None
            elif isinstance(value, (list, tuple)) and len(value) == 2:
                kwargs[key] = (float(value[0]), float(value[1]))
            else:
                raise ConfigurationError(f"time_window must be [t0, t1] or null, got {value!r}")
        elif key in ("time_points", "threads"):
            kwargs[key] = _parse_scalar(key, value, int)
        elif key in ("k_min", "k_max", "fit_min_temperature", "memory_budget_mb"):
            kwargs[key] = _parse_scalar(key, value, float)
        elif key == "output_dir":
            kwargs[key] = str(value)
        elif key == "dump_states":
            kwargs[key] = bool(value)
    return SweepSpec(**kwargs)


def load_sweep_spec(
    path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping[str, Any]] = None
) -> SweepSpec:
    """
    Read a configuration file (JSON or YAML) and apply overrides.

    Without a path the compiled-in defaults are used. ``overrides`` maps
    SweepSpec field names to already-typed values; ``None`` entries are
    ignored so unset CLI flags pass through.
    """
    data: Dict[str, Any] = {}
    if path is not None:
        config_path = Path(path)
        try:
            text = config_path.read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigurationError(f"Cannot read configuration {config_path}: {err}") from err
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as err:
            raise ConfigurationError(f"Invalid configuration {config_path}: {err}") from err
        if loaded is not None:
            data = dict(_require_mapping("configuration", loaded))
        logger.info("Loaded configuration: %s", config_path)

    spec = sweep_spec_from_dict(data)
    if overrides:
        applied = {key: value for key, value in overrides.items() if value is not None}
        if "dim_cap" in applied:
            dim_cap = applied.pop("dim_cap")
            spec = replace(spec, cutoff_policy=replace(spec.cutoff_policy, dim_cap=int(dim_cap)))
        _reject_unknown("override", applied, tuple(f.name for f in fields(SweepSpec)))
        if applied:
            spec = replace(spec, **applied)
            logger.debug("Applied overrides: %s", sorted(applied))
    return spec


# ═══════════════════════════════════════════════════════════════════════════════
# SERIALIZATION
# ═══════════════════════════════════════════════════════════════════════════════


def _complex_pair(value: complex) -> List[float]:
    return [float(value.real), float(value.imag)]


def spec_to_dict(spec: SweepSpec) -> Dict[str, Any]:
    """JSON-ready form of a SweepSpec; ``sweep_spec_from_dict`` reads it back."""
    return {
        "mode_counts": list(spec.mode_counts),
        "temperatures": [float(t) for t in spec.temperatures],
        "qubit": {
            "energy_splitting": spec.qubit.energy_splitting,
            "alpha": _complex_pair(spec.qubit.alpha),
            "beta": _complex_pair(spec.qubit.beta),
        },
        "k_min": spec.k_min,
        "k_max": spec.k_max,
        "material": {f.name: getattr(spec.material, f.name) for f in fields(MaterialParams)},
        "time_window": list(spec.time_window) if spec.time_window is not None else None,
        "time_points": spec.time_points,
        "cutoff_policy": {f.name: getattr(spec.cutoff_policy, f.name) for f in fields(CutoffPolicy)},
        "fit_min_temperature": spec.fit_min_temperature,
        "threads": spec.threads,
        "memory_budget_mb": spec.memory_budget_mb,
        "output_dir": spec.output_dir,
        "dump_states": spec.dump_states,
    }
