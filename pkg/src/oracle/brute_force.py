"""
Exhaustive lexicographic optimum over permutations.

For equal atoms the vertices of the transportation polytope are the
permutation matrices, so the best permutation under (Σc, Σσ) is the exact
lexicographic optimum. Values are plain sums over the permutation (not
weighted by the atom mass 1/n).
"""

import logging
from dataclasses import dataclass
from itertools import permutations
from typing import Optional, Tuple

import numpy as np

from src.exceptions import SizeError
from src.oracle.instances import MAX_ATOMS, TinyInstance
from src.ot_solver.certificates import default_tol_tight
from src.schemas import OracleVerdict

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12  # relative, on Σσ
UNIQUE_GAP = 1e-9
MATCH_TOL = 1e-9


@dataclass(frozen=True)
class OracleResult:
    permutation: Tuple[int, ...]
    primary: float
    secondary: float
    unique: bool
    gap: float


@dataclass(frozen=True)
class SolverResult:
    """What a solver reports on a tiny instance, in oracle units (plain sums)."""
    primary: float
    secondary: float
    assignment: Optional[Tuple[int, ...]] = None


def primary_tie_tolerance(instance: TinyInstance, tol_tight: Optional[float] = None) -> float:
    """n · tol_tight: the Σc slack of a permutation whose pairs are all tight."""
    tol = default_tol_tight(instance.cost) if tol_tight is None else tol_tight
    return instance.n * tol


def brute_lexicographic(instance: TinyInstance, tol_tight: Optional[float] = None) -> OracleResult:
    """
    Min Σc, then min Σσ, then the first permutation in lexicographic order.

    Permutations within `primary_tie_tolerance` of the best Σc count as
    optimal, matching the tight set the solver selects from.

    Raises:
        SizeError: if n > 8
    """
    n = instance.n
    if n > MAX_ATOMS:
        raise SizeError(f"brute force limited to n ≤ {MAX_ATOMS}, got {n}")

    perms = np.asarray(list(permutations(range(n))), dtype=np.int64)
    rows = np.arange(n)
    primary = instance.cost[rows, perms].sum(axis=1)
    secondary = instance.sigma[rows, perms].sum(axis=1)

    tie = primary_tie_tolerance(instance, tol_tight)
    optimal = primary <= primary.min() + tie
    s_min = secondary[optimal].min()
    selected = optimal & (secondary <= s_min + TIE_TOL * (1.0 + abs(s_min)))
    best = int(np.flatnonzero(selected)[0])

    others = np.ones(perms.shape[0], dtype=bool)
    others[best] = False
    if not others.any():
        gap = float("inf")
    else:
        primary_gap = float(primary[others].min() - primary[best])
        if primary_gap > tie:
            gap = primary_gap
        else:
            near = others & (primary <= primary[best] + tie)
            gap = float(secondary[near].min() - secondary[best])

    return OracleResult(
        permutation=tuple(int(j) for j in perms[best]),
        primary=float(primary[best]),
        secondary=float(secondary[best]),
        unique=bool(gap > UNIQUE_GAP),
        gap=gap,
    )


def compare(instance: TinyInstance, solver_result: SolverResult,
            tol_tight: Optional[float] = None) -> OracleVerdict:
    """
    Pass iff both objective values match the oracle within 1e-9 and, when
    the oracle optimum is unique, the assignments coincide.
    """
    oracle = brute_lexicographic(instance, tol_tight)
    reasons = []
    if abs(solver_result.primary - oracle.primary) > MATCH_TOL:
        reasons.append("primary value differs")
    if abs(solver_result.secondary - oracle.secondary) > MATCH_TOL:
        reasons.append("secondary value differs")

    support_match = None
    if oracle.unique:
        support_match = solver_result.assignment == oracle.permutation
        if not support_match:
            reasons.append("support differs from the unique optimum")

    return OracleVerdict(
        seed=-1 if instance.seed is None else int(instance.seed),
        n=instance.n,
        mode=instance.mode,
        passed=not reasons,
        oracle_primary=oracle.primary,
        oracle_secondary=oracle.secondary,
        solver_primary=float(solver_result.primary),
        solver_secondary=float(solver_result.secondary),
        unique=oracle.unique,
        support_match=support_match,
        reason="; ".join(reasons),
    )
