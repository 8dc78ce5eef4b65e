"""Deterministic teleoperation-under-delay simulator and scaling test bench."""

from .core import ConfigError
from .harness import TrialRecord, run_study, run_trial, summarize
from .pipeline import TeleopSession
from .scenario import Scenario, find_scenario, preset

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Scenario",
    "TeleopSession",
    "TrialRecord",
    "find_scenario",
    "preset",
    "run_study",
    "run_trial",
    "summarize",
    "__version__",
]
