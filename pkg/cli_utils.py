"""
Shared CLI helpers for the simulation entry points.
"""

import logging
import sys
import warnings
from pathlib import Path
from typing import Callable, Optional

from sim_errors import ConfigurationError

class LogFormatter(logging.Formatter):
    """``[LEVEL] message``; DEBUG lines also name the emitting module."""

    def format(self, record: logging.LogRecord) -> str:
        message = record.getMessage()
        if record.levelno <= logging.DEBUG:
            return f"[{record.levelname}] {record.name}: {message}"
        return f"[{record.levelname}] {message}"


def setup_logging(verbose: bool = False) -> None:
    """
    Configure root logging for the CLI.

    Numerical modules log through ``logging.getLogger(__name__)`` and reach
    this single stdout handler. Runtime warnings from numpy/scipy are routed
    into the same stream so they carry the ``[WARNING]`` prefix.
    """
    level = logging.DEBUG if verbose else logging.INFO
    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(LogFormatter())

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()
    root_logger.addHandler(handler)

    logging.captureWarnings(True)
    if not verbose:
        warnings.filterwarnings("once", category=RuntimeWarning)


def resolve_config_path(config_file: str, script_path: Path) -> Path:
    """Resolve a configuration path: absolute, then cwd, then next to the script."""
    config_path = Path(config_file)

    if config_path.is_absolute():
        return config_path

    cwd_path = Path.cwd() / config_file
    if cwd_path.exists():
        return cwd_path

    script_candidate = script_path.resolve().parent / config_file
    if script_candidate.exists():
        return script_candidate

    return cwd_path


def safe_save(
    output_path: Path,
    save_action: Callable[[Path], None],
    logger: logging.Logger,
    description: Optional[str] = None,
) -> Path:
    """Create the parent directory and save output, reporting unwritable targets."""
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        save_action(output_path)
    except OSError as err:
        raise ConfigurationError(f"Cannot write {output_path}: {err}") from err

    logger.info("Saved%s: %s", f" {description}" if description else "", output_path)
    return output_path
