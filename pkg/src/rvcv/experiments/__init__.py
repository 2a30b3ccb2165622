"""Configuration-driven experiment runner."""

from .config import EXAMPLES, EXPERIMENTS, ExperimentConfig, config_from_dict, load_config
from .report import ExperimentReport
from .runners import run_experiment

__all__ = ["EXAMPLES", "EXPERIMENTS", "ExperimentConfig", "ExperimentReport", "config_from_dict",
           "load_config", "run_experiment"]
