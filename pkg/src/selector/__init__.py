"""
Secondary selection by σ = c² among cost-optimal plans.
"""

from src.selector.secondary import SecondaryCost, SelectionResult, extract_map, solve_secondary
from src.selector.monotonicity import monotonicity_check

__all__ = ["SecondaryCost", "SelectionResult", "extract_map", "solve_secondary", "monotonicity_check"]
