"""End-to-end tests for the qe-sim command line."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from figure_data import write_sweep
from qe_sim import build_parser, main, run_command
from surface_fit import REFERENCE_PARAMETERS, nmax_surface
from sweep_config import SweepSpec
from sweep_runner import SweepRecord

REPO_ROOT = Path(__file__).resolve().parent.parent


def _run(argv):
    """Parse argv the way main() does and execute the command."""
    return run_command(build_parser().parse_args(argv))


@pytest.fixture
def small_config(tmp_path):
    """YAML configuration for a one-point sweep at T = 0."""
    path = tmp_path / "sweep.yaml"
    path.write_text(
        "mode_counts: [2]\ntemperatures: [0]\nk_min: 0.0\ntime_points: 32\n", encoding="utf-8"
    )
    return path


# ═══════════════════════════════════════════════════════════════════════════════
# FIGURES
# ═══════════════════════════════════════════════════════════════════════════════


class TestFigureCommands:
    """Figure subcommands write CSV + sidecar."""

    def test_purity_figure(self, tmp_path, capsys):
        exit_code = _run(
            ["purity", "--modes", "2", "4", "--temperatures", "0", "6", "--out", str(tmp_path)]
        )

        assert exit_code == 0
        assert (tmp_path / "purity.csv").exists()
        assert json.loads((tmp_path / "purity.json").read_text(encoding="utf-8"))["figure"] == (
            "purity"
        )
        assert "purity data written" in capsys.readouterr().out

    def test_infeasible_cap_exits_3(self, tmp_path):
        exit_code = _run(["fig3", "--dim-cap", "2", "--out", str(tmp_path)])
        assert exit_code == 3
        assert not (tmp_path / "fig3.csv").exists()


# ═══════════════════════════════════════════════════════════════════════════════
# SWEEP & FIT
# ═══════════════════════════════════════════════════════════════════════════════


class TestSweepCommand:
    """sweep writes records, dumps and convergence reports."""

    def test_sweep_with_dumps_and_convergence(self, small_config, tmp_path, capsys):
        out = tmp_path / "results"
        exit_code = _run(
            [
                "sweep",
                "--config",
                str(small_config),
                "--out",
                str(out),
                "--dump-states",
                "--check-convergence",
            ]
        )
        convergence = json.loads((out / "convergence.json").read_text(encoding="utf-8"))

        assert exit_code == 0
        assert (out / "sweep.csv").exists()
        assert (out / "sweep.json").exists()
        assert (out / "states" / "sigma_n2_T0K.qesig").exists()
        assert len(convergence["points"]) == 1
        assert convergence["max_delta"] < 1e-5
        assert "Completed: 1 of 1" in capsys.readouterr().out


class TestFitCommand:
    """fit reads saved records."""

    def test_fit_from_records(self, tmp_path, capsys):
        records = [
            SweepRecord(n=n, temperature=t, n_max=nmax_surface(n, t, REFERENCE_PARAMETERS))
            for n in range(3, 8)
            for t in (4.0, 6.0, 8.0, 10.0, 12.0)
        ]
        csv_path, _ = write_sweep(records, SweepSpec(), tmp_path / "saved")
        out = tmp_path / "fit"

        exit_code = _run(["fit", "--records", str(csv_path), "--out", str(out)])
        payload = json.loads((out / "fit.json").read_text(encoding="utf-8"))

        assert exit_code == 0
        assert payload["fit"]["r_squared"] == pytest.approx(1.0, abs=1e-6)
        assert payload["power_law_exponents"]["T6"] < 0.0
        assert "[FIT] R^2=" in capsys.readouterr().out

    def test_missing_records_exits_2(self, tmp_path):
        exit_code = _run(["fit", "--records", str(tmp_path / "absent.csv"), "--out", str(tmp_path)])
        assert exit_code == 2


# ═══════════════════════════════════════════════════════════════════════════════
# ERRORS & SELFTEST
# ═══════════════════════════════════════════════════════════════════════════════


class TestConfigurationErrors:
    """Bad configuration maps to exit code 2."""

    def test_unknown_key(self, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text("mode_counts: [2]\nbogus: 1\n", encoding="utf-8")
        assert _run(["purity", "--config", str(config), "--out", str(tmp_path)]) == 2

    def test_main_exits_with_code(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["purity", "--threads", "0", "--out", str(tmp_path)])
        assert excinfo.value.code == 2

    def test_unknown_command_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["fig9"])


class TestSelftest:
    """selftest as a subprocess."""

    def test_json_report(self):
        result = subprocess.run(
            [sys.executable, "qe_sim.py", "selftest", "--json"],
            capture_output=True,
            cwd=str(REPO_ROOT),
            timeout=300,
        )
        report = json.loads(result.stdout.decode("utf-8"))

        assert result.returncode == 0
        assert all(check["passed"] for check in report["checks"])
