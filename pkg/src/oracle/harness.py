"""
Runs the two-stage solver on tiny instances and checks it against the oracle.
"""

import logging
from typing import List, Optional, Tuple

from tqdm import tqdm

from src.oracle.brute_force import SolverResult, compare
from src.oracle.instances import TinyInstance, random_instance
from src.ot_solver.certificates import default_tol_tight, tight_set
from src.ot_solver.primary import solve_transport
from src.schemas import OracleSummary, OracleVerdict
from src.selector.secondary import SecondaryCost, SelectionResult, solve_secondary

logger = logging.getLogger(__name__)


def run_pipeline(instance: TinyInstance, tol_tight: Optional[float] = None) -> Tuple[SolverResult, SelectionResult]:
    """Stage 1 on the explicit cost, tight set, stage 2; values rescaled to plain sums."""
    n = instance.n
    weights = instance.weights
    solution = solve_transport(instance.cost, weights, weights)
    tol = default_tol_tight(instance.cost) if tol_tight is None else tol_tight
    tight = tight_set(solution.potential, solution.cost_rows, solution.marginals, tol)
    selection = solve_secondary(tight, SecondaryCost.from_tight_set(tight), solution.marginals,
                                reference=solution.plan)

    assignment = None
    if selection.is_map and len(selection.map) == n:
        assignment = tuple(selection.map[i] - n for i in range(n))
    result = SolverResult(
        primary=selection.primary_cost * n,
        secondary=selection.secondary_cost * n,
        assignment=assignment,
    )
    return result, selection


def run_oracle_suite(seeds: int,
                     n: Optional[int] = None,
                     mode: str = "synthetic",
                     show_progress: bool = False) -> Tuple[List[OracleVerdict], OracleSummary]:
    """
    One verdict per seed. With n=None the size cycles through 2..7.
    """
    verdicts = []
    iterator = range(seeds)
    if show_progress:
        iterator = tqdm(iterator, desc="Oracle instances")
    for seed in iterator:
        size = n if n is not None else 2 + seed % 6
        instance = random_instance(seed, size, mode)
        result, _ = run_pipeline(instance)
        verdict = compare(instance, result)
        if not verdict.passed:
            logger.warning(f"Oracle mismatch on seed {seed} (n={size}): {verdict.reason}")
        verdicts.append(verdict)

    passed = sum(1 for v in verdicts if v.passed)
    summary = OracleSummary(
        n=-1 if n is None else n,
        mode=mode,
        seeds=seeds,
        passed=passed,
        all_passed=passed == seeds,
    )
    logger.info(f"Oracle suite ({mode}): {passed}/{seeds} instances agree")
    return verdicts, summary
