"""
Stage 2: among cost-optimal plans, minimize ∫σ dμ with σ = c².

Cost-optimal plans are exactly the plans supported on the tight set, so
the second stage is a transportation LP restricted to tight pairs. The dual
simplex returns a basic solution, which is what bounds the support size by
|supp μ₀| + |supp μ₁| − 1.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csr_matrix

from src.exceptions import RestrictionError
from src.ot_solver.certificates import TightSet
from src.ot_solver.marginals import Marginals
from src.ot_solver.primary import TransportPlan
from src.schemas import MapEntryModel, MonotonicityReport, SelectionOutput

logger = logging.getLogger(__name__)

PRUNE_MASS = 1e-12
LP_TOL = 1e-10
# Presolve declares tiny-tailed equality systems infeasible; it is only the fallback.
LP_ATTEMPTS = ({"presolve": False}, {"presolve": True})


@dataclass(frozen=True)
class SecondaryCost:
    """σ(x,y) = c(x,y)² on the tight pairs; pairs outside the tight set are absent (σ = ∞)."""
    values: np.ndarray

    @classmethod
    def from_tight_set(cls, tight: TightSet) -> "SecondaryCost":
        return cls(np.asarray(tight.costs, dtype=float) ** 2)


@dataclass(frozen=True)
class SelectionResult:
    plan: TransportPlan
    primary_cost: float
    secondary_cost: float
    map: Dict[int, int]
    lambda_nodes: np.ndarray
    lambda_mass: float
    support_bound: int
    support: List[Tuple[int, int]] = field(default_factory=list)

    @property
    def support_size(self) -> int:
        return len(self.plan)

    @property
    def degeneracy(self) -> int:
        """How far the selected vertex is below the generic support size."""
        return self.support_bound - self.support_size

    @property
    def is_map(self) -> bool:
        return self.lambda_nodes.size == 0

    def to_output(self, config_digest: str = "", monotonicity: Optional[MonotonicityReport] = None) -> SelectionOutput:
        return SelectionOutput(
            config_digest=config_digest,
            pairs=self.plan.entries(),
            primary_cost=self.primary_cost,
            secondary_cost=self.secondary_cost,
            map=[MapEntryModel(source=s, target=t) for s, t in sorted(self.map.items())],
            lambda_nodes=[int(x) for x in self.lambda_nodes],
            lambda_mass=self.lambda_mass,
            support_size=self.support_size,
            support_bound=self.support_bound,
            degeneracy=self.degeneracy,
            monotonicity=monotonicity,
        )


def extract_map(plan: TransportPlan, prune: float = PRUNE_MASS) -> Tuple[Dict[int, int], np.ndarray, float]:
    """
    Induced map on single-valued sources.

    Returns (F, Λ, μ₀-mass of Λ) where Λ are the sources with two or more
    entries of mass at least `prune`, and the mass of Λ is read from the
    plan's row sums.
    """
    keep = plan.masses >= prune
    sources, targets, masses = plan.sources[keep], plan.targets[keep], plan.masses[keep]
    unique, counts = np.unique(sources, return_counts=True)
    multivalued = unique[counts >= 2]
    single = set(unique[counts == 1].tolist())
    mapping = {int(s): int(t) for s, t in zip(sources, targets) if int(s) in single}
    lambda_mass = float(masses[np.isin(sources, multivalued)].sum())
    return mapping, multivalued.astype(np.int64), lambda_mass


def _on_tight_set(plan: TransportPlan, tight: TightSet) -> bool:
    pairs = set(zip(tight.sources.tolist(), tight.targets.tolist()))
    return all(pair in pairs for pair in plan.support)


def _solve_lp(values: np.ndarray, A_eq, b_eq: np.ndarray):
    result = None
    for attempt in LP_ATTEMPTS:
        result = linprog(
            values,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=(0, None),
            method="highs-ds",
            options={"primal_feasibility_tolerance": LP_TOL, "dual_feasibility_tolerance": LP_TOL, **attempt},
        )
        if result.status != 2:
            return result
        logger.debug(f"Secondary LP reported infeasible with {attempt}")
    return result


def solve_secondary(tight: TightSet, secondary_cost: SecondaryCost, marginals: Marginals,
                    reference: Optional[TransportPlan] = None) -> SelectionResult:
    """
    Vertex-optimal plan for σ on the tight pairs with marginals μ₀, μ₁.

    `reference` is a cost-optimal plan (usually the stage-1 plan). When it
    lies on the tight set the restriction is feasible, so an infeasible
    verdict from the LP is reported as a solver failure instead.

    Raises:
        RestrictionError: if no plan on the tight pairs meets the marginals
            (usually tol_tight chosen too small)
    """
    supp0, supp1 = marginals.support0, marginals.support1
    if len(tight) == 0:
        raise RestrictionError("tight set is empty")
    missing0 = np.setdiff1d(supp0, tight.sources)
    missing1 = np.setdiff1d(supp1, tight.targets)
    if missing0.size or missing1.size:
        raise RestrictionError(
            f"tight set misses {missing0.size} source and {missing1.size} target support nodes"
        )

    n_pairs = len(tight)
    row0 = np.searchsorted(supp0, tight.sources)
    row1 = supp0.size + np.searchsorted(supp1, tight.targets)
    columns = np.arange(n_pairs)
    A_eq = csr_matrix(
        (np.ones(2 * n_pairs), (np.concatenate([row0, row1]), np.concatenate([columns, columns]))),
        shape=(supp0.size + supp1.size, n_pairs),
    )
    b_eq = np.concatenate([marginals.mu0[supp0], marginals.mu1[supp1]])

    result = _solve_lp(secondary_cost.values, A_eq, b_eq)
    if result.status == 2:
        if reference is not None and _on_tight_set(reference, tight):
            raise RestrictionError(
                f"LP solver reported infeasible although the reference plan lies on the tight set: {result.message}"
            )
        raise RestrictionError("tight set admits no plan with the prescribed marginals")
    if result.status != 0:
        raise RestrictionError(f"secondary problem not solved: {result.message}")

    masses = np.asarray(result.x, dtype=float)
    keep = masses >= PRUNE_MASS
    pairs = {
        (int(x), int(y)): float(m)
        for x, y, m in zip(tight.sources[keep], tight.targets[keep], masses[keep])
    }
    primary = float(masses[keep] @ tight.costs[keep])
    secondary = float(masses[keep] @ secondary_cost.values[keep])
    plan = TransportPlan.from_pairs(pairs, value=primary)
    mapping, lambda_nodes, lambda_mass = extract_map(plan)

    selection = SelectionResult(
        plan=plan,
        primary_cost=primary,
        secondary_cost=secondary,
        map=mapping,
        lambda_nodes=lambda_nodes,
        lambda_mass=lambda_mass,
        support_bound=marginals.support_bound,
        support=plan.support,
    )
    if selection.degeneracy < 0:
        logger.warning(f"Selected plan has {selection.support_size} entries, above the vertex bound {selection.support_bound}")
    logger.info(
        f"Secondary selection: Σσμ={secondary:.12g}, support {selection.support_size}/"
        f"{selection.support_bound} (degeneracy {selection.degeneracy}), |Λ|={lambda_nodes.size}, Λ-mass={lambda_mass:.3g}"
    )
    return selection
