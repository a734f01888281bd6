"""
Exception hierarchy shared by the simulation modules and the CLI.

Each error class carries the process exit code the CLI reports for it.
"""


class SimulationError(Exception):
    """Base class for all simulation errors."""

    exit_code = 1


class ConfigurationError(SimulationError, ValueError):
    """Invalid parameters, configuration files or output locations."""

    exit_code = 2


class InfeasibleDimensionError(SimulationError, RuntimeError):
    """The truncated environment cannot fit under the dimension cap."""

    exit_code = 3


class NumericalFailureError(SimulationError, RuntimeError):
    """A numerical stage (quadrature, maximum search, fit) did not converge."""

    exit_code = 4
