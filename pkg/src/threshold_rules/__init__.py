"""Oblivious threshold rules for online sample selection."""

from .schedule import ThresholdSchedule, build_schedule, threshold_at
from .montecarlo import ExperimentConfig, RatioReport, run_experiment

__all__ = ["ThresholdSchedule", "build_schedule", "threshold_at",
           "ExperimentConfig", "RatioReport", "run_experiment"]
__version__ = "0.1.0"
