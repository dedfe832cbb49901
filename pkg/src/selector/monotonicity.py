"""
Pairwise swap test of σ-monotonicity on the support of a plan.

For support pairs (x,y), (x′,y′) whose swapped pairs (x,y′), (x′,y) are
also tight, a σ-minimal plan cannot gain by swapping:

    σ(x,y′) + σ(x′,y) − σ(x,y) − σ(x′,y′) ≥ 0.

When all four pairs are tight the increment equals
2·(u(x) − u(x′))·(u(y) − u(y′)), so the sign is that of the factored form.
"""

import logging
from typing import Optional

import numpy as np

from src.ot_solver.primary import DualPotential, TransportPlan
from src.schemas import MonotonicityReport

logger = logging.getLogger(__name__)


def _sample_pairs(size: int, sample_count: int, rng: np.random.Generator):
    """All index pairs i < j when few enough, otherwise random distinct pairs."""
    total = size * (size - 1) // 2
    if total <= sample_count:
        first, second = np.triu_indices(size, k=1)
        return first, second
    first = rng.integers(0, size, size=sample_count)
    second = rng.integers(0, size - 1, size=sample_count)
    second = second + (second >= first)
    return first, second


def monotonicity_check(plan: TransportPlan,
                       potential: DualPotential,
                       cost_rows,
                       sample_count: int = 10_000,
                       tol_tight: float = 1e-9,
                       seed: int = 0,
                       tolerance: float = 1e-9) -> MonotonicityReport:
    """Min swap increment and min factored form over applicable support quadruples."""
    if len(plan) < 2:
        return MonotonicityReport(quadruples_checked=0, applicable=0, tolerance=tolerance)

    rng = np.random.default_rng(seed)
    first, second = _sample_pairs(len(plan), sample_count, rng)
    x, y = plan.sources[first], plan.targets[first]
    xp, yp = plan.sources[second], plan.targets[second]
    u = potential.values

    c_xy = cost_rows.pair_values(x, y)
    c_xpyp = cost_rows.pair_values(xp, yp)
    c_xyp = cost_rows.pair_values(x, yp)
    c_xpy = cost_rows.pair_values(xp, y)

    applicable = (
        (np.abs(c_xyp - (u[yp] - u[x])) <= tol_tight)
        & (np.abs(c_xpy - (u[y] - u[xp])) <= tol_tight)
    )
    increments = (c_xyp ** 2 + c_xpy ** 2 - c_xy ** 2 - c_xpyp ** 2)[applicable]
    factored = ((u[x] - u[xp]) * (u[y] - u[yp]))[applicable]

    report = MonotonicityReport(
        quadruples_checked=int(first.size),
        applicable=int(applicable.sum()),
        min_increment=float(increments.min()) if increments.size else None,
        min_factored=float(factored.min()) if factored.size else None,
        negative_count=int(np.sum(increments < -tolerance)),
        tolerance=tolerance,
    )
    if not report.passed:
        logger.warning(
            f"Swap monotonicity violated on {report.negative_count} quadruples "
            f"(min increment {report.min_increment:.3g})"
        )
    return report
