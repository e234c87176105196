"""Experiment runner: configs, scenarios, reports and the CLI."""

from .config import DEFAULTS, SCENARIOS, ExperimentConfig, build_config
from .report import ExperimentReport
from .scenarios import RUNNERS, run_scenario

__all__ = ["DEFAULTS", "SCENARIOS", "ExperimentConfig", "build_config", "ExperimentReport",
           "RUNNERS", "run_scenario"]
