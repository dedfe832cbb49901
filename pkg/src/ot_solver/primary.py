"""
Stage 1: the Kantorovich problem for the Mañé cost.

Because c is the shortest-path metric of the edge weights, the optimal plan
value equals the min-cost flow of the excess μ₀ − μ₁ over the sparse edge
graph, and the flow's node potentials are a Kantorovich potential u with
u(y) − u(x) ≤ c(x,y).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.cost_engine.edge_costs import EdgeCostTable
from src.cost_engine.mane import MatrixCostRows, check_supercritical
from src.exceptions import MarginalError
from src.geometry.manifold import DiscreteManifold
from src.ot_solver.flow import MASS_EPS, decompose_paths, successive_shortest_paths
from src.ot_solver.marginals import Marginals
from src.schemas import PlanEntryModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransportPlan:
    """Sparse coupling stored as parallel (source, target, mass) arrays sorted by (source, target)."""
    sources: np.ndarray
    targets: np.ndarray
    masses: np.ndarray
    value: float

    @classmethod
    def from_pairs(cls, pairs: Dict[Tuple[int, int], float], value: float = float("nan")) -> "TransportPlan":
        keys = sorted(key for key, mass in pairs.items() if mass > 0.0)
        sources = np.asarray([k[0] for k in keys], dtype=np.int64)
        targets = np.asarray([k[1] for k in keys], dtype=np.int64)
        masses = np.asarray([pairs[k] for k in keys], dtype=float)
        return cls(sources, targets, masses, float(value))

    def __len__(self) -> int:
        return int(self.masses.size)

    @property
    def support(self) -> List[Tuple[int, int]]:
        return list(zip(self.sources.tolist(), self.targets.tolist()))

    def row_sums(self, n_nodes: int) -> np.ndarray:
        return np.bincount(self.sources, weights=self.masses, minlength=n_nodes)

    def col_sums(self, n_nodes: int) -> np.ndarray:
        return np.bincount(self.targets, weights=self.masses, minlength=n_nodes)

    def marginal_error(self, marginals: Marginals) -> float:
        n = marginals.n_nodes
        return float(max(
            np.max(np.abs(self.row_sums(n) - marginals.mu0)),
            np.max(np.abs(self.col_sums(n) - marginals.mu1)),
        ))

    def cost_under(self, cost_rows) -> float:
        """⟨c, plan⟩ with c read from a row provider."""
        if len(self) == 0:
            return 0.0
        return float(self.masses @ cost_rows.pair_values(self.sources, self.targets))

    def entries(self) -> List[PlanEntryModel]:
        return [
            PlanEntryModel(i=int(i), j=int(j), mass=float(m))
            for i, j, m in zip(self.sources, self.targets, self.masses)
        ]


@dataclass(frozen=True)
class DualPotential:
    """Node function u, normalized so that u(anchor) = 0."""
    values: np.ndarray
    anchor: int

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __getitem__(self, node) -> float:
        return self.values[node]

    def shifted(self, node: int, amount: float) -> "DualPotential":
        """Copy with u(node) raised by `amount`."""
        values = self.values.copy()
        values[node] += amount
        return DualPotential(values, self.anchor)

    def dual_value(self, marginals: Marginals) -> float:
        return float(self.values @ (marginals.mu1 - marginals.mu0))

    def edge_violation(self, manifold: DiscreteManifold, edge_costs: EdgeCostTable) -> float:
        """max over edges of u(y) − u(x) − w(x,y), clipped at 0."""
        gain = self.values[manifold.heads] - self.values[manifold.tails] - edge_costs.weights
        return max(0.0, float(gain.max())) if gain.size else 0.0


@dataclass(frozen=True)
class TransportSolution:
    """Stage-1 result on an explicit cost matrix, in the bipartite node space."""
    plan: TransportPlan
    potential: DualPotential
    cost_rows: MatrixCostRows
    marginals: Marginals
    augmentations: int

    @property
    def n_sources(self) -> int:
        return self.cost_rows.n_sources

    def assignment(self) -> List[Tuple[int, int, float]]:
        """Plan entries as (row, column, mass) of the cost matrix."""
        offset = self.n_sources
        return [(int(i), int(j) - offset, float(m))
                for i, j, m in zip(self.plan.sources, self.plan.targets, self.plan.masses)]


def _anchor(marginals: Marginals) -> int:
    return int(marginals.support0[0])


def solve_primary(manifold: DiscreteManifold,
                  edge_costs: EdgeCostTable,
                  marginals: Marginals) -> Tuple[TransportPlan, DualPotential]:
    """
    Optimal plan and Kantorovich potential for the Mañé cost of `edge_costs`.

    Raises:
        SupercriticalityViolatedError: if an edge weight is nonpositive
        MarginalError: if the marginals do not live on this manifold
    """
    check_supercritical(edge_costs)
    n = manifold.n_nodes
    if marginals.n_nodes != n:
        raise MarginalError(f"marginals have {marginals.n_nodes} nodes, manifold has {n}")

    supply = marginals.mu0 - marginals.mu1
    solution = successive_shortest_paths(n, manifold.tails, manifold.heads, edge_costs.weights, supply)

    pairs: Dict[Tuple[int, int], float] = {}
    for node in np.flatnonzero(np.minimum(marginals.mu0, marginals.mu1) > 0.0):
        pairs[(int(node), int(node))] = float(min(marginals.mu0[node], marginals.mu1[node]))
    for key, mass in decompose_paths(n, solution, supply).items():
        if mass > MASS_EPS:
            pairs[key] = pairs.get(key, 0.0) + mass

    plan = TransportPlan.from_pairs(pairs, value=solution.value)
    anchor = _anchor(marginals)
    potential = DualPotential(solution.potential - solution.potential[anchor], anchor)

    logger.info(
        f"Primary transport: K={plan.value:.12g}, {len(plan)} plan entries, "
        f"{solution.augmentations} augmentations"
    )
    return plan, potential


def bipartite_marginals(a, b) -> Marginals:
    """Source weights on nodes 0..m-1 and target weights on m..m+n-1."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return Marginals(np.concatenate([a, np.zeros(b.size)]), np.concatenate([np.zeros(a.size), b]))


def solve_transport(cost, a, b) -> TransportSolution:
    """
    Stage 1 on an explicit m x n cost matrix with source weights a and target weights b.

    Runs the same successive-shortest-path engine on the complete bipartite
    graph; infinite entries are treated as missing arcs.
    """
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    marginals = bipartite_marginals(a, b)
    rows = MatrixCostRows(cost)

    src, col = np.nonzero(np.isfinite(cost))
    tails, heads, weights = src, col + m, cost[src, col]
    # negative entries are allowed: start targets at the column minimum
    initial = np.zeros(m + n)
    if weights.size:
        column_min = np.full(n, np.inf)
        np.minimum.at(column_min, col, weights)
        initial[m:] = np.minimum(np.where(np.isfinite(column_min), column_min, 0.0), 0.0)

    solution = successive_shortest_paths(
        m + n, tails, heads, weights, marginals.mu0 - marginals.mu1, initial_potential=initial
    )
    pairs = {
        (int(t), int(h)): float(f)
        for t, h, f in zip(solution.tails, solution.heads, solution.flow)
        if f > MASS_EPS
    }
    plan = TransportPlan.from_pairs(pairs, value=solution.value)
    anchor = _anchor(marginals)
    potential = DualPotential(solution.potential - solution.potential[anchor], anchor)
    return TransportSolution(plan, potential, rows, marginals, solution.augmentations)

