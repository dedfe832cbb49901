"""
Mañé potential c(x,·) as single-source shortest paths over positive edge
weights. Rows are computed on demand and kept in an LRU cache.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from cachetools import LRUCache
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from tqdm import tqdm

from config.settings import settings
from src.cost_engine.edge_costs import EdgeCostTable
from src.exceptions import SupercriticalityViolatedError
from src.geometry.manifold import DiscreteManifold

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CostField:
    """Values c(source, ·) for one source node."""
    source: int
    values: np.ndarray
    model_digest: str

    def __post_init__(self):
        self.values.setflags(write=False)

    def __getitem__(self, target: int) -> float:
        return float(self.values[target])


def weight_matrix(n_nodes: int, tails: np.ndarray, heads: np.ndarray, weights: np.ndarray) -> csr_matrix:
    """
    Sparse adjacency with the smallest weight kept for parallel edges.

    csr_matrix would sum duplicate entries, so duplicates are reduced first.
    """
    order = np.lexsort((weights, heads, tails))
    t, h, w = tails[order], heads[order], weights[order]
    first = np.ones(t.size, dtype=bool)
    first[1:] = (t[1:] != t[:-1]) | (h[1:] != h[:-1])
    return csr_matrix((w[first], (t[first], h[first])), shape=(n_nodes, n_nodes))


def check_supercritical(edge_costs: EdgeCostTable) -> None:
    if np.any(edge_costs.weights <= 0.0) or not np.all(np.isfinite(edge_costs.weights)):
        worst = int(np.argmin(edge_costs.weights))
        raise SupercriticalityViolatedError(
            f"edge {worst} has nonpositive weight {edge_costs.weights[worst]:.6g}; "
            "shortest paths need a supercritical cost"
        )


def mane_row(manifold: DiscreteManifold, edge_costs: EdgeCostTable, source: int) -> CostField:
    """
    Exact shortest-path distances from one source.

    Raises:
        SupercriticalityViolatedError: if any edge weight is nonpositive
    """
    check_supercritical(edge_costs)
    graph = weight_matrix(manifold.n_nodes, manifold.tails, manifold.heads, edge_costs.weights)
    values = dijkstra(graph, directed=True, indices=int(source))
    values[int(source)] = 0.0
    return CostField(int(source), values, edge_costs.model_digest)


def dp_residual(field: CostField, manifold: DiscreteManifold, edge_costs: EdgeCostTable) -> float:
    """
    Max deviation from c(s,y) = min over incoming edges (x,y) of c(s,x) + w(x,y), y ≠ s.
    """
    n = manifold.n_nodes
    candidates = field.values[manifold.tails] + edge_costs.weights
    best = np.full(n, np.inf)
    np.minimum.at(best, manifold.heads, candidates)
    mask = np.arange(n) != field.source
    return float(np.max(np.abs(best[mask] - field.values[mask]))) if mask.any() else 0.0


class CostRowProvider:
    """
    On-demand rows of the Mañé potential for one manifold and cost table.

    Rows for distinct sources are independent; batches are split into
    chunks and dispatched to a thread pool, results keep request order.
    """

    def __init__(self,
                 manifold: DiscreteManifold,
                 edge_costs: EdgeCostTable,
                 threads: Optional[int] = None,
                 cache_size: Optional[int] = None,
                 show_progress: bool = False):
        check_supercritical(edge_costs)
        self.manifold = manifold
        self.edge_costs = edge_costs
        self.n_nodes = manifold.n_nodes
        self.threads = threads or settings.THREADS
        self.show_progress = show_progress
        self.graph = weight_matrix(manifold.n_nodes, manifold.tails, manifold.heads, edge_costs.weights)
        self._cache = LRUCache(maxsize=cache_size or settings.ROW_CACHE_SIZE)

    @property
    def dense_allowed(self) -> bool:
        return self.n_nodes <= settings.DENSE_NODE_LIMIT

    def _compute(self, sources: np.ndarray) -> np.ndarray:
        rows = dijkstra(self.graph, directed=True, indices=sources)
        rows = np.atleast_2d(rows)
        rows[np.arange(sources.size), sources] = 0.0
        return rows

    def row(self, source: int) -> np.ndarray:
        source = int(source)
        cached = self._cache.get(source)
        if cached is None:
            cached = self._compute(np.asarray([source]))[0]
            cached.setflags(write=False)
            self._cache[source] = cached
        return cached

    def field(self, source: int) -> CostField:
        return CostField(int(source), self.row(source).copy(), self.edge_costs.model_digest)

    def iter_rows(self, sources: Sequence[int], chunk: Optional[int] = None) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Yield (sources_chunk, rows_chunk) blocks in request order."""
        sources = np.asarray(sources, dtype=np.int64)
        chunk = chunk or settings.ROW_CHUNK
        blocks = [sources[i:i + chunk] for i in range(0, sources.size, chunk)]
        iterator = tqdm(blocks, desc="Computing cost rows") if self.show_progress else blocks
        if self.threads > 1 and len(blocks) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                for block, rows in zip(iterator, pool.map(self._compute, blocks)):
                    yield block, rows
        else:
            for block in iterator:
                yield block, self._compute(block)

    def rows(self, sources: Sequence[int]) -> np.ndarray:
        sources = np.asarray(sources, dtype=np.int64)
        if sources.size == 0:
            return np.zeros((0, self.n_nodes))
        return np.vstack([rows for _, rows in self.iter_rows(sources)])

    def values(self, sources: Sequence[int], targets: Sequence[int]) -> np.ndarray:
        return self.rows(sources)[:, np.asarray(targets, dtype=np.int64)]

    def pair_values(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """c(xs[i], ys[i]) for paired index arrays, one dijkstra per distinct source."""
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        out = np.empty(xs.size)
        unique, inverse = np.unique(xs, return_inverse=True)
        position = 0
        for block, rows in self.iter_rows(unique):
            for offset in range(block.size):
                mask = inverse == position + offset
                out[mask] = rows[offset, ys[mask]]
            position += block.size
        return out

    def matrix(self) -> np.ndarray:
        """Full n x n matrix (only for n up to DENSE_NODE_LIMIT)."""
        if not self.dense_allowed:
            raise MemoryError(
                f"{self.n_nodes} nodes exceed DENSE_NODE_LIMIT={settings.DENSE_NODE_LIMIT}; request rows instead"
            )
        return self.rows(np.arange(self.n_nodes))


class MatrixCostRows:
    """
    Row interface over an explicit cost matrix on a bipartite node set.

    Nodes 0..m-1 are sources, m..m+n-1 targets. c(i, m+j) = cost[i, j],
    c(x, x) = 0, every other pair is +inf (no such transport).
    """

    def __init__(self, cost: np.ndarray):
        cost = np.asarray(cost, dtype=float)
        self.cost = cost
        self.n_sources, self.n_targets = cost.shape
        self.n_nodes = self.n_sources + self.n_targets
        full = np.full((self.n_nodes, self.n_nodes), np.inf)
        full[: self.n_sources, self.n_sources:] = cost
        np.fill_diagonal(full, 0.0)
        self._full = full

    dense_allowed = True

    def row(self, source: int) -> np.ndarray:
        return self._full[int(source)]

    def rows(self, sources: Sequence[int]) -> np.ndarray:
        return self._full[np.asarray(sources, dtype=np.int64)]

    def iter_rows(self, sources: Sequence[int], chunk: Optional[int] = None):
        sources = np.asarray(sources, dtype=np.int64)
        yield sources, self.rows(sources)

    def values(self, sources: Sequence[int], targets: Sequence[int]) -> np.ndarray:
        return self._full[np.ix_(np.asarray(sources, dtype=np.int64), np.asarray(targets, dtype=np.int64))]

    def pair_values(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        return self._full[np.asarray(xs, dtype=np.int64), np.asarray(ys, dtype=np.int64)]

    def matrix(self) -> np.ndarray:
        return self._full
