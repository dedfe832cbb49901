"""
Optimality certificates for a plan/potential pair and the tight set
{(x,y) : u(y) − u(x) = c(x,y)} on the supports of the marginals.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.cost_engine.edge_costs import EdgeCostTable
from src.geometry.manifold import DiscreteManifold
from src.ot_solver.marginals import Marginals
from src.ot_solver.primary import DualPotential, TransportPlan
from src.schemas import OptimalityCertificate

logger = logging.getLogger(__name__)


def default_tol_tight(weights: np.ndarray) -> float:
    """1e-9 · (1 + largest finite weight)."""
    weights = np.asarray(weights, dtype=float)
    finite = weights[np.isfinite(weights)]
    return 1e-9 * (1.0 + (float(np.abs(finite).max()) if finite.size else 0.0))


@dataclass(frozen=True)
class TightSet:
    """Tight pairs with their cost values, sorted by (source, target)."""
    sources: np.ndarray
    targets: np.ndarray
    costs: np.ndarray
    tol: float

    def __len__(self) -> int:
        return int(self.sources.size)

    def pairs(self) -> set:
        return set(zip(self.sources.tolist(), self.targets.tolist()))

    def contains(self, x: int, y: int) -> bool:
        hits = np.flatnonzero(self.sources == x)
        return bool(np.any(self.targets[hits] == y))

    def lookup(self) -> dict:
        return {(int(x), int(y)): float(c) for x, y, c in zip(self.sources, self.targets, self.costs)}


def tight_set(potential: DualPotential,
              cost_rows,
              marginals: Marginals,
              tol_tight: float) -> TightSet:
    """
    Pairs x ∈ supp μ₀, y ∈ supp μ₁ with |c(x,y) − (u(y) − u(x))| ≤ tol_tight.

    Rows are fetched in chunks so that only |supp μ₀| rows are computed.
    """
    u = potential.values
    supp0, supp1 = marginals.support0, marginals.support1
    sources, targets, costs = [], [], []
    for block, rows in cost_rows.iter_rows(supp0):
        values = rows[:, supp1]
        residual = np.abs(values - (u[supp1][None, :] - u[block][:, None]))
        ii, jj = np.nonzero(residual <= tol_tight)
        sources.append(block[ii])
        targets.append(supp1[jj])
        costs.append(values[ii, jj])

    if sources:
        sources = np.concatenate(sources)
        targets = np.concatenate(targets)
        costs = np.concatenate(costs)
    else:
        sources = targets = np.zeros(0, dtype=np.int64)
        costs = np.zeros(0)
    order = np.lexsort((targets, sources))
    result = TightSet(sources[order], targets[order], costs[order], float(tol_tight))
    logger.info(f"Tight set: {len(result)} pairs (tol={tol_tight:.3g})")
    return result


def certify_optimality(plan: TransportPlan,
                       potential: DualPotential,
                       cost_rows,
                       pair_samples: int = 100_000,
                       seed: int = 0,
                       tolerance: float = 1e-9,
                       manifold: Optional[DiscreteManifold] = None,
                       edge_costs: Optional[EdgeCostTable] = None,
                       sources: Optional[Sequence[int]] = None) -> OptimalityCertificate:
    """
    Feasibility, complementary slackness and duality gap.

    Feasibility u(y) − u(x) ≤ c(x,y) is checked on `pair_samples` random
    pairs drawn from the rows of `sources` (plan sources by default), and
    per edge when the manifold and its edge costs are given. The dual value
    uses the plan's own marginals.
    """
    u = potential.values
    n = u.size
    rng = np.random.default_rng(seed)

    if sources is None:
        sources = np.unique(plan.sources)
    sources = np.asarray(sources, dtype=np.int64)
    max_violation = 0.0
    checked = 0
    if sources.size and pair_samples > 0:
        xs = sources[rng.integers(0, sources.size, size=pair_samples)]
        ys = rng.integers(0, n, size=pair_samples)
        gain = u[ys] - u[xs] - cost_rows.pair_values(xs, ys)
        max_violation = max(0.0, float(np.nanmax(gain)))
        checked = int(pair_samples)

    edge_violation = None
    if manifold is not None and edge_costs is not None:
        edge_violation = potential.edge_violation(manifold, edge_costs)
        max_violation = max(max_violation, edge_violation)

    if len(plan):
        plan_costs = cost_rows.pair_values(plan.sources, plan.targets)
        slackness = float(np.max(np.abs(plan_costs - (u[plan.targets] - u[plan.sources]))))
        primal = float(plan.masses @ plan_costs)
    else:
        slackness, primal = 0.0, 0.0
    dual = float(u @ (plan.col_sums(n) - plan.row_sums(n)))

    certificate = OptimalityCertificate(
        pairs_checked=checked,
        max_feasibility_violation=max_violation,
        max_edge_feasibility_violation=edge_violation,
        max_slackness_residual=slackness,
        primal_value=primal,
        dual_value=dual,
        duality_gap=primal - dual,
        tolerance=tolerance,
    )
    if certificate.passed:
        logger.info(f"Optimality certified: K={primal:.12g}, gap={primal - dual:.3g}")
    else:
        logger.warning(
            f"Optimality not certified: feasibility {max_violation:.3g}, "
            f"slackness {slackness:.3g}, gap {primal - dual:.3g}"
        )
    return certificate
