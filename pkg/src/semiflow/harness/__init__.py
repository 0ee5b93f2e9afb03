"""Experiment harness: config, checks, runner, export and CLI."""

from .checks import CHECKS, Check
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .report import RunReport, export, report_from_json
from .runner import SeedFailure, run

__all__ = [
    "CHECKS",
    "Check",
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "RunReport",
    "export",
    "report_from_json",
    "SeedFailure",
    "run",
]
