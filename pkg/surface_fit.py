"""
Fit of the maximum-Negativity surface

    N_max(n, T) ≈ e^{−αT} · A / (T · (n − B·T + C·T² + D))

to sweep records, and the power-law exponent of N_max in n at fixed T.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from sim_errors import ConfigurationError, NumericalFailureError
from sweep_runner import SweepRecord

logger = logging.getLogger(__name__)

PARAMETER_NAMES = ("alpha_exp", "A", "B", "C", "D")

# Published surface parameters; the first multi-start sits on them.
REFERENCE_PARAMETERS = (0.0857, 3.51, 0.4674, 0.01865, 2.57)

MULTI_STARTS: Tuple[Tuple[float, ...], ...] = (
    REFERENCE_PARAMETERS,
    tuple(1.25 * p for p in REFERENCE_PARAMETERS),
    tuple(0.75 * p for p in REFERENCE_PARAMETERS),
    (0.1, 1.0, 0.1, 0.01, 1.0),
    (0.05, 5.0, 0.3, 0.01, 3.0),
)

MIN_FIT_RECORDS = 8
MIN_FIT_TEMPERATURES = 2
MIN_FIT_MODE_COUNTS = 3
MIN_POWER_LAW_POINTS = 4

_PENALTY = 1e300
_SIMPLEX_OPTIONS = {
    "xatol": 1e-12,
    "fatol": 1e-22,
    "maxiter": 40000,
    "maxfev": 80000,
    "adaptive": True,
}


@dataclass(frozen=True)
class FitParams:
    """Best-fit surface parameters and fit diagnostics."""

    alpha_exp: float  # 1/K
    A: float
    B: float  # 1/K
    C: float  # 1/K²
    D: float
    sse: float
    r_squared: float
    n_points: int = 0
    start_index: int = 0

    @property
    def vector(self) -> Tuple[float, float, float, float, float]:
        return (self.alpha_exp, self.A, self.B, self.C, self.D)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


# ═══════════════════════════════════════════════════════════════════════════════
# SURFACE
# ═══════════════════════════════════════════════════════════════════════════════


def nmax_surface(
    n: Union[float, np.ndarray],
    temperature: Union[float, np.ndarray],
    params: Union[FitParams, Sequence[float]],
) -> Union[float, np.ndarray]:
    """Evaluate the fitted surface at mode count(s) n and temperature(s) T > 0."""
    alpha_exp, a, b, c, d = params.vector if isinstance(params, FitParams) else params
    n_arr = np.asarray(n, dtype=float)
    t_arr = np.asarray(temperature, dtype=float)
    value = np.exp(-alpha_exp * t_arr) * a / (t_arr * (n_arr - b * t_arr + c * t_arr**2 + d))
    return float(value) if value.ndim == 0 else value


# ═══════════════════════════════════════════════════════════════════════════════
# FIT
# ═══════════════════════════════════════════════════════════════════════════════


def _fit_data(records: Sequence[SweepRecord], min_temperature: float) -> Tuple[np.ndarray, ...]:
    usable = [
        r
        for r in records
        if r.ok and r.temperature >= min_temperature and r.temperature > 0 and math.isfinite(r.n_max)
    ]
    temperatures = {r.temperature for r in usable}
    mode_counts = {r.n for r in usable}
    if (
        len(usable) < MIN_FIT_RECORDS
        or len(temperatures) < MIN_FIT_TEMPERATURES
        or len(mode_counts) < MIN_FIT_MODE_COUNTS
    ):
        raise ConfigurationError(
            f"surface fit needs >= {MIN_FIT_RECORDS} records over >= {MIN_FIT_TEMPERATURES} "
            f"temperatures and >= {MIN_FIT_MODE_COUNTS} mode counts at T >= {min_temperature} K; "
            f"got {len(usable)} records, {len(temperatures)} temperatures, "
            f"{len(mode_counts)} mode counts"
        )

    n = np.array([r.n for r in usable], dtype=float)
    t = np.array([r.temperature for r in usable], dtype=float)
    y = np.array([r.n_max for r in usable], dtype=float)
    if np.ptp(y) == 0.0:
        raise ConfigurationError("surface fit rejected: all N_max values are identical")
    return n, t, y


def fit_negativity_surface(
    records: Sequence[SweepRecord], min_temperature: float = 4.0
) -> FitParams:
    """
    Least-squares fit of the five surface parameters.

    Only completed records with T >= ``min_temperature`` enter. Nelder-Mead
    runs from each of the fixed multi-starts, the best result is polished by
    one more simplex restart, and its SSE and R² are reported.
    """
    n, t, y = _fit_data(records, min_temperature)

    def sse(params: np.ndarray) -> float:
        alpha_exp, a, b, c, d = params
        denominator = t * (n - b * t + c * t * t + d)
        if np.any(denominator <= 0):
            return _PENALTY
        residual = np.exp(-alpha_exp * t) * a / denominator - y
        value = float(residual @ residual)
        return value if math.isfinite(value) else _PENALTY

    best = None
    best_index = 0
    for index, start in enumerate(MULTI_STARTS):
        result = minimize(sse, np.array(start), method="Nelder-Mead", options=_SIMPLEX_OPTIONS)
        logger.debug("Fit start %d: SSE=%.6e after %d evaluations", index, result.fun, result.nfev)
        if best is None or result.fun < best.fun:
            best, best_index = result, index

    polished = minimize(sse, best.x, method="Nelder-Mead", options=_SIMPLEX_OPTIONS)
    if polished.fun <= best.fun:
        best = polished

    if not best.fun < _PENALTY:
        raise NumericalFailureError("surface fit found no admissible parameters")

    total = float(((y - y.mean()) ** 2).sum())
    fit = FitParams(
        *(float(v) for v in best.x),
        sse=float(best.fun),
        r_squared=1.0 - float(best.fun) / total,
        n_points=int(y.size),
        start_index=best_index,
    )
    logger.info(
        "Surface fit over %d records: SSE=%.3e, R^2=%.6f (alpha=%.5g, A=%.5g, B=%.5g, C=%.5g, D=%.5g)",
        fit.n_points,
        fit.sse,
        fit.r_squared,
        *fit.vector,
    )
    return fit


# ═══════════════════════════════════════════════════════════════════════════════
# POWER LAW
# ═══════════════════════════════════════════════════════════════════════════════


def power_law_exponent(records: Sequence[SweepRecord], d_offset: float = 0.0) -> float:
    """Slope of log N_max against log(n + d_offset) at a single temperature."""
    usable = [r for r in records if r.ok and math.isfinite(r.n_max)]
    temperatures = {r.temperature for r in usable}
    if len(temperatures) > 1:
        raise ConfigurationError(
            f"power law needs records at one temperature, got {sorted(temperatures)}"
        )
    if len({r.n for r in usable}) < MIN_POWER_LAW_POINTS:
        raise ConfigurationError(
            f"power law needs >= {MIN_POWER_LAW_POINTS} mode counts, got {len(usable)} record(s)"
        )

    n = np.array([r.n for r in usable], dtype=float) + d_offset
    y = np.array([r.n_max for r in usable], dtype=float)
    if np.any(n <= 0) or np.any(y <= 0):
        raise ConfigurationError("power law needs n + d_offset > 0 and N_max > 0")
    slope, _ = np.polyfit(np.log(n), np.log(y), 1)
    return float(slope)


def records_at(records: Sequence[SweepRecord], temperature: float) -> List[SweepRecord]:
    return [r for r in records if r.temperature == temperature]
