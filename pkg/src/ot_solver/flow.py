"""
Uncapacitated min-cost flow by successive shortest paths with node potentials.

Every augmentation runs one multi-source Dijkstra over reduced costs from
all nodes that still hold excess, picks the closest deficit node (lowest
index on ties) and pushes along the shortest path. The potentials keep every
residual reduced cost nonnegative, so at termination they are an optimal
dual solution.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from src.exceptions import MarginalError

logger = logging.getLogger(__name__)

MASS_EPS = 1e-15
# csgraph drops explicit zeros inconsistently, so reduced costs are clipped to this
TINY_COST = np.finfo(float).tiny


@dataclass(frozen=True)
class FlowSolution:
    tails: np.ndarray
    heads: np.ndarray
    costs: np.ndarray
    flow: np.ndarray
    potential: np.ndarray
    augmentations: int

    @property
    def value(self) -> float:
        return float(self.flow @ self.costs)


def dedupe_arcs(tails: np.ndarray, heads: np.ndarray, costs: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Keep one arc per ordered pair (the cheapest), sorted by (tail, head)."""
    order = np.lexsort((costs, heads, tails))
    t, h, c = tails[order], heads[order], costs[order]
    first = np.ones(t.size, dtype=bool)
    first[1:] = (t[1:] != t[:-1]) | (h[1:] != h[:-1])
    return t[first], h[first], c[first]


class _Residual:
    """Residual graph of the current flow with entries deduplicated per ordered pair."""

    def __init__(self, n_nodes, tails, heads, costs, flow, potential):
        reduced = costs + potential[tails] - potential[heads]
        back = flow > MASS_EPS
        rows = np.concatenate([tails, heads[back]])
        cols = np.concatenate([heads, tails[back]])
        weights = np.maximum(np.concatenate([reduced, -reduced[back]]), TINY_COST)
        arc = np.concatenate([np.arange(tails.size), np.flatnonzero(back)])
        forward = np.concatenate([np.ones(tails.size, dtype=bool), np.zeros(int(back.sum()), dtype=bool)])

        order = np.lexsort((weights, cols, rows))
        rows, cols, weights, arc, forward = rows[order], cols[order], weights[order], arc[order], forward[order]
        first = np.ones(rows.size, dtype=bool)
        first[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        self.rows, self.cols = rows[first], cols[first]
        self.arc, self.forward = arc[first], forward[first]
        self.keys = self.rows * n_nodes + self.cols
        self.n_nodes = n_nodes
        self.matrix = csr_matrix((weights[first], (self.rows, self.cols)), shape=(n_nodes, n_nodes))

    def lookup(self, tail: int, head: int) -> Tuple[int, bool]:
        position = int(np.searchsorted(self.keys, tail * self.n_nodes + head))
        return int(self.arc[position]), bool(self.forward[position])


def successive_shortest_paths(n_nodes: int,
                              tails: np.ndarray,
                              heads: np.ndarray,
                              costs: np.ndarray,
                              supply: np.ndarray,
                              initial_potential: Optional[np.ndarray] = None) -> FlowSolution:
    """
    Min-cost flow with node supply `supply` (positive = excess) on uncapacitated arcs.

    Arcs must have nonnegative reduced cost under `initial_potential`
    (zero by default, i.e. nonnegative costs).
    """
    tails, heads, costs = dedupe_arcs(
        np.asarray(tails, dtype=np.int64), np.asarray(heads, dtype=np.int64), np.asarray(costs, dtype=float)
    )
    excess = np.array(supply, dtype=float, copy=True)
    if abs(excess.sum()) > 1e-12:
        raise MarginalError(f"supply does not balance (net {excess.sum():.3g})")
    potential = np.zeros(n_nodes) if initial_potential is None else np.array(initial_potential, dtype=float)
    flow = np.zeros(tails.size)
    augmentations = 0

    while True:
        sources = np.flatnonzero(excess > MASS_EPS)
        deficits = np.flatnonzero(excess < -MASS_EPS)
        if sources.size == 0 or deficits.size == 0:
            break

        residual = _Residual(n_nodes, tails, heads, costs, flow, potential)
        dist, predecessors, origin = dijkstra(
            residual.matrix, directed=True, indices=sources, return_predecessors=True, min_only=True
        )
        reach = dist[deficits]
        best = int(np.argmin(reach))
        bound = float(reach[best])
        if not np.isfinite(bound):
            raise MarginalError("no residual path from the remaining excess to any deficit node")
        target = int(deficits[best])
        source = int(origin[target])

        path = []
        node = target
        while node != source:
            parent = int(predecessors[node])
            path.append(residual.lookup(parent, node))
            node = parent

        amount = min(excess[source], -excess[target])
        for arc, is_forward in path:
            if not is_forward:
                amount = min(amount, flow[arc])
        for arc, is_forward in path:
            flow[arc] += amount if is_forward else -amount
        excess[source] -= amount
        excess[target] += amount
        potential += np.minimum(dist, bound)
        augmentations += 1

    np.maximum(flow, 0.0, out=flow)
    logger.debug(f"Successive shortest paths: {augmentations} augmentations")
    return FlowSolution(tails, heads, costs, flow, potential, augmentations)


def decompose_paths(n_nodes: int,
                    solution: FlowSolution,
                    supply: np.ndarray) -> Dict[Tuple[int, int], float]:
    """
    Split the arc flow into (origin, destination) masses.

    From each excess node in index order, walk along the lowest-index
    positive-flow out-arc until a node with remaining deficit is met, and
    move the bottleneck mass. The flow of an optimal solution is acyclic
    because every arc has positive cost.
    """
    remaining = solution.flow.copy()
    excess = np.array(supply, dtype=float, copy=True)
    starts = np.searchsorted(solution.tails, np.arange(n_nodes + 1))
    pairs: Dict[Tuple[int, int], float] = {}

    for origin in np.flatnonzero(excess > MASS_EPS):
        origin = int(origin)
        while excess[origin] > MASS_EPS:
            node, arcs, steps = origin, [], 0
            while not (node != origin and excess[node] < -MASS_EPS):
                window = np.arange(starts[node], starts[node + 1])
                live = window[remaining[window] > MASS_EPS]
                if live.size == 0:
                    break
                arc = int(live[0])
                arcs.append(arc)
                node = int(solution.heads[arc])
                steps += 1
                if steps > n_nodes:
                    raise RuntimeError("flow decomposition met a cycle")
            if node == origin or excess[node] >= -MASS_EPS:
                # only rounding dust left on this origin
                break
            amount = min(excess[origin], -excess[node], float(remaining[arcs].min()))
            remaining[arcs] -= amount
            excess[origin] -= amount
            excess[node] += amount
            key = (origin, node)
            pairs[key] = pairs.get(key, 0.0) + amount
    return pairs
