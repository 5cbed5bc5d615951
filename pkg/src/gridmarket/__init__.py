"""Minute-resolution agent-based electricity market simulator coupling a
day-ahead spot auction with an in-hour balancing market."""

__version__ = "0.1.0"

from .scenario import Scenario, load_scenario  # noqa: F401
from .engine import Simulator, run_scenario  # noqa: F401
