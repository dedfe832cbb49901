"""
Calibrated edges: edges along which the potential gains exactly the action.

Feasibility gives u(y) − u(x) ≤ w(x,y); edges within tol_cal of equality are
the single-edge pieces of calibrated curves. Because every edge weight is
positive, u strictly increases along them and the graph is acyclic.
"""

import logging
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy.sparse import csr_matrix

from src.cost_engine.edge_costs import EdgeCostTable
from src.exceptions import ToleranceError
from src.geometry.manifold import DiscreteManifold
from src.ot_solver.primary import DualPotential

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibratedGraph:
    """
    Calibrated edges as a DAG.

    Edge attributes: `time` (optimal traversal time t*, the largest among
    parallel calibrated edges), `gain` (u(y) − u(x)) and `edge` (manifold edge id).
    """
    graph: nx.DiGraph
    n_nodes: int
    tol_cal: float
    max_residual: float

    @property
    def n_edges(self) -> int:
        return self.graph.number_of_edges()

    def edge_arrays(self):
        """(tails, heads, times, gains) in sorted (tail, head) order."""
        edges = sorted(self.graph.edges(data=True))
        tails = np.asarray([a for a, _, _ in edges], dtype=np.int64)
        heads = np.asarray([b for _, b, _ in edges], dtype=np.int64)
        times = np.asarray([d["time"] for _, _, d in edges], dtype=float)
        gains = np.asarray([d["gain"] for _, _, d in edges], dtype=float)
        return tails, heads, times, gains

    def adjacency(self) -> csr_matrix:
        """Unit-weight sparse adjacency, for reachability queries."""
        tails, heads, _, _ = self.edge_arrays()
        return csr_matrix((np.ones(tails.size), (tails, heads)), shape=(self.n_nodes, self.n_nodes))


def calibrated_edges(manifold: DiscreteManifold,
                     edge_costs: EdgeCostTable,
                     potential: DualPotential,
                     tol_cal: float) -> CalibratedGraph:
    """
    Collect the equality edges u(y) − u(x) ≥ w(x,y) − tol_cal.

    Raises:
        ToleranceError: if the collected edges contain a cycle
    """
    u = potential.values
    gain = u[manifold.heads] - u[manifold.tails]
    mask = gain >= edge_costs.weights - tol_cal

    graph = nx.DiGraph()
    graph.add_nodes_from(range(manifold.n_nodes))
    for edge in np.flatnonzero(mask):
        tail, head = int(manifold.tails[edge]), int(manifold.heads[edge])
        time = float(edge_costs.times[edge])
        if graph.has_edge(tail, head) and graph[tail][head]["time"] >= time:
            continue
        graph.add_edge(tail, head, time=time, gain=float(gain[edge]), edge=int(edge))

    if not nx.is_directed_acyclic_graph(graph):
        cycle = nx.find_cycle(graph)
        raise ToleranceError(
            f"calibrated edges contain the cycle {[a for a, _ in cycle]}; tol_cal={tol_cal:.3g} is too loose"
        )

    residual = np.abs(gain[mask] - edge_costs.weights[mask])
    max_residual = float(residual.max()) if residual.size else 0.0
    logger.info(f"Calibrated graph: {graph.number_of_edges()} edges, max residual {max_residual:.3g}")
    return CalibratedGraph(graph, manifold.n_nodes, float(tol_cal), max_residual)
