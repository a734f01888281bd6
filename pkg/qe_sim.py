"""
Qubit-phonon entanglement simulator CLI.

Usage:
    qe-sim fig2 --out results/                 # coherence vs time, discrete and continuum
    qe-sim fig3 --dim-cap 2048                 # Negativity vs time, n = 10 (auto-reduced if needed)
    qe-sim fig6 --threads 4                    # N_max vs n with the fitted surface
    qe-sim sweep --config sweep.yaml           # (n, T) sweep to sweep.csv + sweep.json
    qe-sim sweep --check-convergence           # also re-run with kept cutoffs raised by one
    qe-sim fit --records results/sweep.csv     # fit the N_max surface to saved records
    qe-sim selftest --json                     # closed-form self-checks as JSON

Exit codes:
    0 success, 2 configuration error, 3 infeasible dimension, 4 numerical failure
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

from cli_utils import resolve_config_path, safe_save
from cli_utils import setup_logging as configure_logging
from figure_data import (
    FIGURE_IDS,
    emit_figure_data,
    read_sweep_csv,
    render_sidecar,
    resolve_tool_version,
    write_sweep,
)
from self_audit import format_self_audit, run_self_audit
from sim_errors import (
    ConfigurationError,
    InfeasibleDimensionError,
    NumericalFailureError,
    SimulationError,
)
from surface_fit import fit_negativity_surface, power_law_exponent, records_at
from sweep_config import SweepSpec, load_sweep_spec, spec_to_dict
from sweep_runner import cutoff_convergence, dump_record_state, run_sweep

logger = logging.getLogger("qe_sim")

EXIT_OK = 0
EXIT_UNEXPECTED = 4


# ═══════════════════════════════════════════════════════════════════════════════
# CLI
# ═══════════════════════════════════════════════════════════════════════════════


def build_parser() -> argparse.ArgumentParser:
    """Build CLI argument parser"""
    parser = argparse.ArgumentParser(
        prog="qe-sim",
        description="Entanglement and dephasing of a charge qubit in a discretized phonon bath",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
    qe-sim fig2 --out results/
    qe-sim fig4 --modes 2 4 --temperatures 3 6 9 12
    qe-sim sweep --config sweep.json --dim-cap 1024 --threads 2
    qe-sim fit --records results/sweep.csv
    qe-sim selftest
        """,
    )
    parser.add_argument(
        "command",
        choices=list(FIGURE_IDS) + ["sweep", "fit", "selftest"],
        help="Figure to emit, or sweep / fit / selftest",
    )

    config_group = parser.add_argument_group("configuration")
    config_group.add_argument("--config", help="JSON or YAML run configuration")
    config_group.add_argument("--out", help="Output directory (overrides output_dir)")
    config_group.add_argument("--dim-cap", type=int, help="Per-run total dimension cap")
    config_group.add_argument("--threads", type=int, help="Worker threads")
    config_group.add_argument(
        "--seedless",
        action="store_true",
        help="Assert that no random number generator is used (always true)",
    )

    figure_group = parser.add_argument_group("figure axes")
    figure_group.add_argument("--modes", type=int, nargs="+", help="Mode counts for the figure")
    figure_group.add_argument(
        "--temperatures", type=float, nargs="+", help="Temperatures (K) for the figure"
    )

    sweep_group = parser.add_argument_group("sweep / fit")
    sweep_group.add_argument("--records", help="Sweep CSV to fit (fit command)")
    sweep_group.add_argument(
        "--check-convergence",
        action="store_true",
        help="Re-run each sweep point with every kept cutoff raised by one",
    )
    sweep_group.add_argument(
        "--dump-states",
        action="store_true",
        help="Write sigma(t_at_max) of each sweep point as a binary dump",
    )

    parser.add_argument(
        "--json",
        action="store_true",
        help="Print the selftest report as JSON",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose (debug) output",
    )
    return parser


def load_spec(args: argparse.Namespace) -> SweepSpec:
    config_path: Optional[Path] = None
    if args.config:
        config_path = resolve_config_path(args.config, Path(__file__))
    overrides: Dict[str, Any] = {
        "dim_cap": args.dim_cap,
        "threads": args.threads,
        "output_dir": args.out,
        "dump_states": True if args.dump_states else None,
    }
    return load_sweep_spec(config_path, overrides)


# ═══════════════════════════════════════════════════════════════════════════════
# COMMANDS
# ═══════════════════════════════════════════════════════════════════════════════


def run_figure(args: argparse.Namespace, spec: SweepSpec) -> int:
    csv_path, json_path = emit_figure_data(
        args.command,
        spec,
        Path(spec.output_dir),
        mode_counts=args.modes,
        temperatures=args.temperatures,
    )
    print(f"\n{'=' * 65}")
    print(f"  {args.command} data written")
    print(f"  CSV:     {csv_path}")
    print(f"  Sidecar: {json_path}")
    print(f"{'=' * 65}\n")
    return EXIT_OK


def run_sweep_command(args: argparse.Namespace, spec: SweepSpec) -> int:
    output_dir = Path(spec.output_dir)
    records = run_sweep(spec)
    write_sweep(records, spec, output_dir)

    if spec.dump_states:
        for record in records:
            path = dump_record_state(spec, record, output_dir / "states")
            if path is not None:
                logger.info("State dump: %s", path)

    if args.check_convergence:
        rows = cutoff_convergence(spec)
        checked = [row for row in rows if row.checked]
        payload = {
            "tool_version": resolve_tool_version(),
            "spec": spec_to_dict(spec),
            "points": [dict(asdict(row), delta=row.delta) for row in rows],
            "max_delta": max((row.delta for row in checked), default=0.0),
            "skipped": len(rows) - len(checked),
        }
        safe_save(
            output_dir / "convergence.json",
            lambda path: path.write_bytes(render_sidecar(payload).encode("utf-8")),
            logger,
            "convergence report",
        )

    completed = sum(1 for record in records if record.ok)
    print(f"[SWEEP] Completed: {completed} of {len(records)} point(s)")
    return EXIT_OK


def run_fit_command(args: argparse.Namespace, spec: SweepSpec) -> int:
    if args.records:
        records = read_sweep_csv(Path(args.records))
    else:
        records = run_sweep(spec)

    fit = fit_negativity_surface(records, spec.fit_min_temperature)
    exponents: Dict[str, Optional[float]] = {}
    for temperature in sorted({r.temperature for r in records}):
        try:
            exponents[f"T{temperature:g}"] = power_law_exponent(records_at(records, temperature))
        except ConfigurationError:
            exponents[f"T{temperature:g}"] = None
        else:
            exponents[f"T{temperature:g}_offset"] = power_law_exponent(
                records_at(records, temperature), d_offset=fit.D
            )

    payload = {
        "tool_version": resolve_tool_version(),
        "fit": fit.to_dict(),
        "power_law_exponents": exponents,
    }
    safe_save(
        Path(spec.output_dir) / "fit.json",
        lambda path: path.write_bytes(render_sidecar(payload).encode("utf-8")),
        logger,
        "fit",
    )
    print(
        f"[FIT] R^2={fit.r_squared:.6f} SSE={fit.sse:.3e} "
        f"alpha={fit.alpha_exp:.5g} A={fit.A:.5g} B={fit.B:.5g} C={fit.C:.5g} D={fit.D:.5g}"
    )
    return EXIT_OK


def run_selftest(args: argparse.Namespace) -> int:
    if args.json:
        logging.disable(logging.CRITICAL)
        try:
            report = run_self_audit()
        finally:
            logging.disable(logging.NOTSET)
        print(json.dumps(asdict(report), indent=2, sort_keys=True))
    else:
        report = run_self_audit()
        print(format_self_audit(report))
    return EXIT_OK if report.passed else NumericalFailureError.exit_code


def run_command(args: argparse.Namespace) -> int:
    """
    Execute one subcommand and map failures to exit codes.

    Returns:
        Exit code (0 success, 2 configuration, 3 infeasible dimension, 4 numerical)
    """
    try:
        if args.command == "selftest":
            return run_selftest(args)
        spec = load_spec(args)
        if args.command == "sweep":
            return run_sweep_command(args, spec)
        if args.command == "fit":
            return run_fit_command(args, spec)
        return run_figure(args, spec)

    except ConfigurationError as e:
        logger.error("Configuration error: %s", e)
        return e.exit_code

    except InfeasibleDimensionError as e:
        logger.error("Infeasible dimension: %s", e)
        print("\nTip: raise --dim-cap or reduce the mode count")
        return e.exit_code

    except SimulationError as e:
        logger.error("%s", e)
        if args.verbose:
            import traceback

            traceback.print_exc()
        return e.exit_code

    except Exception as e:
        logger.error("Unexpected error: %s", e)
        if args.verbose:
            import traceback

            traceback.print_exc()
        return EXIT_UNEXPECTED


def main(argv: Optional[List[str]] = None) -> None:
    """Main entry point with CLI argument parsing"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.json:
        configure_logging(verbose=args.verbose)
    if args.seedless:
        logger.debug("Seedless run: no random number generator is used")

    sys.exit(run_command(args))


if __name__ == "__main__":
    main()
