"""
Acceptance checks and refinement trends.
"""

from src.evaluation.metrics import refinement_trend, trend_summary
from src.evaluation.validator import STATEMENT, AcceptanceRunner, run_acceptance

__all__ = ["refinement_trend", "trend_summary", "STATEMENT", "AcceptanceRunner", "run_acceptance"]
