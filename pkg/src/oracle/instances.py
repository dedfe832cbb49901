"""
Tiny assignment instances with n ≤ 8 equal source and target atoms.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse.csgraph import shortest_path

from src.exceptions import InvalidConfigError, SizeError

logger = logging.getLogger(__name__)

MAX_ATOMS = 8
SLICE_SIDE = 4
DROP_FRACTION = 0.3

Mode = Literal["synthetic", "sliced"]


@dataclass(frozen=True)
class TinyInstance:
    """
    Explicit n x n cost between n source atoms and n target atoms of mass 1/n.

    `metric` holds the full cost matrix over all 2n points when the instance
    comes from a metric (sources first, then targets); `nodes` are the parent
    manifold nodes for sliced instances.
    """
    cost: np.ndarray
    mode: str = "explicit"
    seed: Optional[int] = None
    metric: Optional[np.ndarray] = None
    nodes: Tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        cost = np.array(self.cost, dtype=float, copy=True)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
            raise InvalidConfigError(f"tiny instances need a square cost matrix, got {cost.shape}")
        if cost.shape[0] > MAX_ATOMS:
            raise SizeError(f"n={cost.shape[0]} exceeds the brute-force limit {MAX_ATOMS}")
        cost.setflags(write=False)
        object.__setattr__(self, "cost", cost)

    @property
    def n(self) -> int:
        return int(self.cost.shape[0])

    @property
    def sigma(self) -> np.ndarray:
        return self.cost ** 2

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.n, 1.0 / self.n)


def split_atoms(cost, row_counts: Sequence[int], col_counts: Sequence[int]) -> TinyInstance:
    """
    Equal-mass instance for integer-weighted atoms.

    Row i is repeated row_counts[i] times and column j col_counts[j] times,
    so a source of weight 2/n becomes two sources of weight 1/n.
    """
    cost = np.asarray(cost, dtype=float)
    if sum(row_counts) != sum(col_counts):
        raise InvalidConfigError("split atoms need equal total multiplicities")
    expanded = np.repeat(np.repeat(cost, row_counts, axis=0), col_counts, axis=1)
    return TinyInstance(expanded, mode="split")


def synthetic_metric(seed: int, n_points: int) -> np.ndarray:
    """
    Shortest-path costs of a random positive-weight digraph on n_points nodes.

    Each ordered pair is an edge with weight in [0.5, 1.5]; a random 30% are
    dropped, except the edges of a random Hamiltonian cycle.
    """
    rng = np.random.default_rng(seed)
    weights = rng.uniform(0.5, 1.5, size=(n_points, n_points))
    keep = rng.random((n_points, n_points)) >= DROP_FRACTION
    cycle = rng.permutation(n_points)
    keep[cycle, np.roll(cycle, -1)] = True
    np.fill_diagonal(keep, False)
    graph = np.where(keep, weights, 0.0)
    return shortest_path(graph, directed=True)


def random_instance(seed: int, n: int, mode: Mode = "synthetic", parent=None) -> TinyInstance:
    """
    Deterministic tiny instance.

    synthetic: c sliced from `synthetic_metric` on 2n points (sources are
        the first n, targets the last n).
    sliced: 2n distinct nodes of a parent cost-row provider (by default a
        side-4 Randers torus), c read from its rows.
    """
    if n < 1 or n > MAX_ATOMS:
        raise SizeError(f"n must lie in [1, {MAX_ATOMS}], got {n}")

    if mode == "synthetic":
        full = synthetic_metric(seed, 2 * n)
        return TinyInstance(full[:n, n:], mode=mode, seed=seed, metric=full)

    if mode == "sliced":
        rows = parent if parent is not None else default_parent()
        rng = np.random.default_rng(seed)
        nodes = rng.choice(rows.n_nodes, size=2 * n, replace=False)
        full = rows.values(nodes, nodes)
        return TinyInstance(full[:n, n:], mode=mode, seed=seed, metric=full, nodes=tuple(int(x) for x in nodes))

    raise InvalidConfigError(f"unknown instance mode '{mode}'")


def default_parent():
    """Cost rows of a side-4 Randers torus with a smooth drift field."""
    from src.cost_engine import CostModel, CostRowProvider, edge_cost_table
    from src.geometry import FinslerMetric, build_torus_grid, swirl_drift

    manifold = build_torus_grid(SLICE_SIDE, stencil=16)
    omega = swirl_drift(manifold.positions, 0.3)
    metric = FinslerMetric.randers(None, omega, manifold.n_nodes)
    table = edge_cost_table(manifold, CostModel.from_metric(metric))
    return CostRowProvider(manifold, table, threads=1)
