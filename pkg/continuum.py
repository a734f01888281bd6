"""
Continuum limit of the decoherence function.

Replaces the discrete mode sum by the radial integral

    W(t) = σ²/(4π²ϱc³ħ) ∫₀^{k_upper} dk k F(k)² (1 − cos ckt) coth(ħck/2k_BT)

so that |⟨u(t)⟩| = exp(−W(t)) serves as the reference the discrete grid is
checked against.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from phonon_model import HBAR, K_B, MaterialParams, form_factor
from sim_errors import ConfigurationError, NumericalFailureError

logger = logging.getLogger(__name__)

QUADRATURE_RULES = ("adaptive", "gauss-legendre")


@dataclass(frozen=True)
class QuadratureSpec:
    """Integration range, panel count and rule for the continuum integrals."""

    k_upper: float = 2.0  # nm⁻¹
    panels: int = 16
    rule: str = "adaptive"
    abs_tol: float = 1e-10
    order: int = 32  # nodes per panel for gauss-legendre

    def __post_init__(self) -> None:
        if not (math.isfinite(self.k_upper) and self.k_upper > 0):
            raise ConfigurationError(f"k_upper must be > 0, got {self.k_upper}")
        if self.panels < 8:
            raise ConfigurationError(f"panels must be >= 8, got {self.panels}")
        if self.rule not in QUADRATURE_RULES:
            raise ConfigurationError(
                f"rule must be one of {', '.join(QUADRATURE_RULES)}, got {self.rule!r}"
            )
        if not self.abs_tol > 0:
            raise ConfigurationError(f"abs_tol must be > 0, got {self.abs_tol}")
        if self.order < 2:
            raise ConfigurationError(f"order must be >= 2, got {self.order}")


# ═══════════════════════════════════════════════════════════════════════════════
# INTEGRAND
# ═══════════════════════════════════════════════════════════════════════════════


def _prefactor(material: MaterialParams) -> float:
    """σ²/(4π²ϱc³ħ) in nm²."""
    c = material.sound_speed_internal
    return (
        material.coupling_scale**2
        * material.deformation_potential_internal**2
        / (4.0 * math.pi**2 * material.density_internal * c**3 * HBAR)
    )


def _thermal_weight(k: float, c: float, temperature: float) -> float:
    """k·coth(ħck/2k_BT), continued to 2k_BT/(ħc) at k = 0."""
    if temperature == 0.0:
        return k
    if k == 0.0:
        return 2.0 * K_B * temperature / (HBAR * c)
    return k / math.tanh(HBAR * c * k / (2.0 * K_B * temperature))


def _integrand(
    material: MaterialParams, temperature: float, t: Optional[float]
) -> Callable[[float], float]:
    """Integrand of W(t); ``t=None`` replaces 1 − cos ckt by its long-time mean 1."""
    prefactor = _prefactor(material)
    c = material.sound_speed_internal
    width = material.dot_width

    def integrand(k: float) -> float:
        oscillation = 1.0 if t is None else 1.0 - math.cos(c * k * t)
        if oscillation == 0.0:
            return 0.0
        ff = form_factor(k, width)
        return prefactor * _thermal_weight(k, c, temperature) * ff * ff * oscillation

    return integrand


# ═══════════════════════════════════════════════════════════════════════════════
# QUADRATURE
# ═══════════════════════════════════════════════════════════════════════════════


def _panel_edges(spec: QuadratureSpec) -> np.ndarray:
    return np.linspace(0.0, spec.k_upper, spec.panels + 1)


def _adaptive(integrand: Callable[[float], float], spec: QuadratureSpec):
    edges = _panel_edges(spec)
    total, error = 0.0, 0.0
    for lower, upper in zip(edges[:-1], edges[1:]):
        value, estimate = quad(
            integrand, lower, upper, epsabs=spec.abs_tol / spec.panels, epsrel=0.0, limit=200
        )
        total += value
        error += estimate
    return total, error


def _gauss_legendre(integrand: Callable[[float], float], spec: QuadratureSpec):
    edges = _panel_edges(spec)

    def rule(order: int) -> float:
        nodes, weights = np.polynomial.legendre.leggauss(order)
        total = 0.0
        for lower, upper in zip(edges[:-1], edges[1:]):
            half, mid = 0.5 * (upper - lower), 0.5 * (upper + lower)
            total += half * sum(w * integrand(mid + half * x) for x, w in zip(nodes, weights))
        return total

    coarse, fine = rule(spec.order), rule(2 * spec.order)
    return fine, abs(fine - coarse)


def _integrate(integrand: Callable[[float], float], spec: QuadratureSpec, label: str) -> float:
    if spec.rule == "adaptive":
        value, error = _adaptive(integrand, spec)
    else:
        value, error = _gauss_legendre(integrand, spec)

    logger.debug("%s: %.12g (error estimate %.3e, rule %s)", label, value, error, spec.rule)
    if not math.isfinite(value) or error > spec.abs_tol:
        raise NumericalFailureError(
            f"{label} did not converge: error estimate {error:.3e} exceeds {spec.abs_tol:.3e}"
        )
    return value


# ═══════════════════════════════════════════════════════════════════════════════
# PUBLIC API
# ═══════════════════════════════════════════════════════════════════════════════


def continuum_exponent(
    material: MaterialParams, temperature: float, t: float, spec: QuadratureSpec
) -> float:
    """W(t) ≥ 0, the continuum decoherence exponent."""
    if temperature < 0:
        raise ConfigurationError(f"temperature must be >= 0, got {temperature}")
    if not (math.isfinite(t) and t >= 0):
        raise ConfigurationError(f"time must be finite and >= 0, got {t!r}")
    if t == 0.0:
        return 0.0
    return _integrate(_integrand(material, temperature, t), spec, f"W(t={t:.4g} ps)")


def continuum_coherence(
    material: MaterialParams,
    temperature: float,
    t: float,
    spec: Optional[QuadratureSpec] = None,
) -> float:
    """exp(−W(t)): the coherence of an infinitely dense mode grid."""
    return math.exp(-continuum_exponent(material, temperature, t, spec or QuadratureSpec()))


def continuum_plateau(
    material: MaterialParams, temperature: float, spec: Optional[QuadratureSpec] = None
) -> float:
    """Long-time value exp(−W(∞)) at which the coherence stabilizes."""
    if temperature < 0:
        raise ConfigurationError(f"temperature must be >= 0, got {temperature}")
    exponent = _integrate(
        _integrand(material, temperature, None), spec or QuadratureSpec(), "W(∞)"
    )
    return math.exp(-exponent)


def continuum_curve(
    material: MaterialParams,
    temperature: float,
    times: Sequence[float],
    spec: Optional[QuadratureSpec] = None,
    threads: int = 1,
) -> List[float]:
    """continuum_coherence over a time grid, optionally across worker threads."""
    spec = spec or QuadratureSpec()
    if threads <= 1:
        return [continuum_coherence(material, temperature, t, spec) for t in times]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda t: continuum_coherence(material, temperature, t, spec), times))
