"""
Fast self-checks of the numerical core against closed forms.

Every check compares a computed quantity with an independent analytic value
and reports PASS/FAIL with the observed deviation. Used by ``qe-sim selftest``.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Tuple

import numpy as np

from fock_space import CutoffPolicy, displacement_matrix, laguerre, plan_cutoffs
from measures import (
    coherence_closed_form,
    coherence_of_state,
    entropy_of_state,
    mode_purity,
    negativity_of_state,
    pure_state_entropy,
)
from phonon_model import HBAR, K_B, Environment, MaterialParams, QubitParams, build_mode_grid
from state_assembly import assemble_joint_state, evolve_blocks
from surface_fit import (
    PARAMETER_NAMES,
    REFERENCE_PARAMETERS,
    fit_negativity_surface,
    nmax_surface,
)
from sweep_runner import SweepRecord

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one self-check."""

    name: str
    passed: bool
    deviation: float
    tolerance: float
    detail: str = ""


@dataclass
class SelfAuditReport:
    """All self-check outcomes."""

    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def _result(name: str, deviation: float, tolerance: float, detail: str) -> CheckResult:
    passed = math.isfinite(deviation) and deviation <= tolerance
    return CheckResult(name, passed, float(deviation), tolerance, detail)


# ═══════════════════════════════════════════════════════════════════════════════
# CHECKS
# ═══════════════════════════════════════════════════════════════════════════════


def _laguerre_sum(m: int, p: int, x: float) -> float:
    """Explicit finite sum Σ_j (−1)^j C(m+p, m−j) x^j / j!."""
    return sum(
        (-1) ** j * math.comb(m + p, m - j) * x**j / math.factorial(j) for j in range(m + 1)
    )


def check_laguerre() -> CheckResult:
    deviation = max(abs(laguerre(1, 1, 0.5) - 1.5), abs(laguerre(2, 0, 1.0) + 0.5))
    for m in range(11):
        for p in range(6):
            for x in (0.1, 0.7, 2.5):
                exact = _laguerre_sum(m, p, x)
                deviation = max(deviation, abs(laguerre(m, p, x) - exact) / max(1.0, abs(exact)))
    return _result("laguerre", deviation, 1e-10, "recurrence vs explicit sum, m <= 10")


def check_displacement() -> CheckResult:
    lam = complex(0.8, 0.3)
    entries = displacement_matrix(lam, 40).entries
    column_defect = float(np.max(np.abs(np.linalg.norm(entries[:, :10], axis=0) - 1.0)))
    vacuum_defect = abs(entries[0, 0] - math.exp(-abs(lam) ** 2 / 2.0))
    return _result(
        "displacement",
        max(column_defect, vacuum_defect),
        1e-8,
        "column norms and vacuum overlap of D(0.8+0.3i), d = 40",
    )


def check_zero_temperature_identities() -> CheckResult:
    grid = build_mode_grid(0.0, 0.9, 3, MaterialParams())
    t_max = grid.cycle_time
    plan = plan_cutoffs(grid.modes, 0.0, t_max, CutoffPolicy(tail_epsilon=1e-12))
    env = Environment(grid, 0.0, plan.dims)
    qubit = QubitParams()
    weight = abs(qubit.alpha * qubit.beta)

    deviation = 0.0
    for t in np.linspace(0.0, t_max, 9):
        blocks = evolve_blocks(env, float(t))
        state = assemble_joint_state(blocks, qubit, float(t))
        coherence = coherence_closed_form(env, float(t))
        expected = weight * math.sqrt(max(0.0, 1.0 - coherence**2))
        deviation = max(
            deviation,
            abs(coherence_of_state(blocks) - coherence),
            abs(negativity_of_state(state).value - expected),
            abs(entropy_of_state(state) - pure_state_entropy(coherence, qubit.alpha, qubit.beta)),
        )
    return _result(
        "zero_temperature",
        deviation,
        1e-6,
        f"Negativity, entropy and coherence vs closed forms, n = 3, cutoffs {plan.dims}",
    )


def check_purity_identity() -> CheckResult:
    deviation = 0.0
    for omega in (0.1, 0.5, 1.0, 3.0):
        for temperature in (1.0, 6.0, 12.0, 40.0):
            q = math.exp(-HBAR * omega / (K_B * temperature))
            deviation = max(
                deviation, abs(mode_purity(omega, temperature) - (1 - q) ** 2 / (1 - q * q))
            )
    return _result("purity", deviation, 1e-12, "tanh form vs geometric-state purity")


def _synthetic_records() -> List[SweepRecord]:
    return [
        SweepRecord(n=n, temperature=t, n_max=nmax_surface(n, t, REFERENCE_PARAMETERS))
        for n in range(3, 8)
        for t in (4.0, 6.0, 8.0, 10.0, 12.0)
    ]


def check_fit_round_trip() -> CheckResult:
    fit = fit_negativity_surface(_synthetic_records())
    deviation = max(
        abs(value - reference) / abs(reference)
        for value, reference in zip(fit.vector, REFERENCE_PARAMETERS)
    )
    detail = ", ".join(f"{name}={value:.6g}" for name, value in zip(PARAMETER_NAMES, fit.vector))
    return _result("fit_round_trip", deviation, 0.01, f"relative error ({detail})")


CHECKS: Tuple[Callable[[], CheckResult], ...] = (
    check_laguerre,
    check_displacement,
    check_zero_temperature_identities,
    check_purity_identity,
    check_fit_round_trip,
)


# ═══════════════════════════════════════════════════════════════════════════════
# REPORT
# ═══════════════════════════════════════════════════════════════════════════════


def run_self_audit() -> SelfAuditReport:
    report = SelfAuditReport()
    for check in CHECKS:
        try:
            result = check()
        except Exception as err:  # a crashing check is a failed check
            name = check.__name__.replace("check_", "")
            result = CheckResult(name, False, math.nan, 0.0, str(err))
        logger.debug("%s: deviation %.3e", result.name, result.deviation)
        report.checks.append(result)
    return report


def format_self_audit(report: SelfAuditReport) -> str:
    """Human-readable PASS/FAIL listing."""
    lines = [f"Status: {'PASS' if report.passed else 'FAIL'}"]
    for check in report.checks:
        lines.append(
            f"  [{'PASS' if check.passed else 'FAIL'}] {check.name}: "
            f"deviation {check.deviation:.3e} (tolerance {check.tolerance:.0e}) - {check.detail}"
        )
    return "\n".join(lines)
