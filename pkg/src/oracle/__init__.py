"""
Brute-force ground truth for tiny assignment instances.
"""

from src.oracle.instances import TinyInstance, random_instance, split_atoms, synthetic_metric
from src.oracle.brute_force import OracleResult, SolverResult, brute_lexicographic, compare, primary_tie_tolerance
from src.oracle.harness import run_oracle_suite, run_pipeline

__all__ = [
    "TinyInstance",
    "random_instance",
    "split_atoms",
    "synthetic_metric",
    "OracleResult",
    "SolverResult",
    "brute_lexicographic",
    "compare",
    "primary_tie_tolerance",
    "run_oracle_suite",
    "run_pipeline",
]
