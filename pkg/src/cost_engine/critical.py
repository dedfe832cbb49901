"""
Critical value k₀ of a Lagrangian family L + k.

Below k₀ some closed path has nonpositive action (or an edge has no
positive action floor at all); above it every edge weight is positive and
the Mañé potential is finite. The value is located by bisection on k, and
both ends of the final bracket carry a certificate that can be re-checked
on its own.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import networkx as nx
import numpy as np

from src.cost_engine.edge_costs import edge_weight_lagrangian
from src.exceptions import BracketError, InvalidConfigError, SubcriticalError
from src.geometry.lagrangian import Lagrangian
from src.geometry.manifold import DiscreteManifold
from src.schemas import CertificateModel, CriticalValueOutput

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CriticalValue:
    k_lo: float
    k_hi: float
    estimate: float
    iterations: int
    below: CertificateModel
    above: CertificateModel

    @property
    def width(self) -> float:
        return self.k_hi - self.k_lo

    def to_output(self, config_digest: str = "") -> CriticalValueOutput:
        return CriticalValueOutput(
            config_digest=config_digest,
            k_lo=self.k_lo,
            k_hi=self.k_hi,
            estimate=self.estimate,
            iterations=self.iterations,
            below=self.below,
            above=self.above,
        )


def _weights_at(manifold: DiscreteManifold, lagrangian: Lagrangian) -> np.ndarray:
    """All edge weights; raises SubcriticalError on the first subcritical edge."""
    weights = np.empty(manifold.n_edges)
    for edge in range(manifold.n_edges):
        weights[edge] = edge_weight_lagrangian(lagrangian, manifold, edge).weight
    return weights


def _min_weight_graph(manifold: DiscreteManifold, weights: np.ndarray, mask: Optional[np.ndarray] = None) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(manifold.n_nodes))
    edges = np.flatnonzero(mask) if mask is not None else range(manifold.n_edges)
    for edge in edges:
        tail, head, w = int(manifold.tails[edge]), int(manifold.heads[edge]), float(weights[edge])
        if not graph.has_edge(tail, head) or w < graph[tail][head]["weight"]:
            graph.add_edge(tail, head, weight=w, edge=int(edge))
    return graph


def _cycle_edges(graph: nx.DiGraph, nodes: List[int]) -> List[int]:
    return [graph[a][b]["edge"] for a, b in zip(nodes[:-1], nodes[1:])]


def find_nonpositive_cycle(manifold: DiscreteManifold, weights: np.ndarray) -> Optional[List[int]]:
    """
    Edge ids of a closed path with total weight ≤ 0, or None.

    Strictly negative cycles come from Bellman-Ford; zero-weight cycles can
    only use edges of weight ≤ 0, so those are searched on that subgraph.
    """
    graph = _min_weight_graph(manifold, weights)
    if nx.negative_edge_cycle(graph, weight="weight"):
        nodes = nx.find_negative_cycle(graph, 0, weight="weight")
        return _cycle_edges(graph, nodes)

    nonpositive = weights <= 0.0
    if not nonpositive.any():
        return None
    sub = _min_weight_graph(manifold, weights, nonpositive)
    try:
        cycle = nx.find_cycle(sub)
    except nx.NetworkXNoCycle:
        return None
    return [sub[a][b]["edge"] for a, b in cycle]


def certificate_at(manifold: DiscreteManifold, lagrangian: Lagrangian, k: float) -> CertificateModel:
    """Classify one shift k as above ('positive') or below the critical value."""
    shifted = lagrangian.with_shift(k)
    try:
        weights = _weights_at(manifold, shifted)
    except SubcriticalError as exc:
        return CertificateModel(kind="subcritical-edge", k=k, edge=exc.edge, samples=exc.samples)

    cycle = find_nonpositive_cycle(manifold, weights)
    if cycle is not None:
        return CertificateModel(
            kind="nonpositive-cycle", k=k, cycle=cycle, total_weight=float(weights[cycle].sum())
        )
    if weights.min() > 0.0:
        return CertificateModel(kind="positive", k=k, min_weight=float(weights.min()))
    # nonpositive edges without a cycle through them still break shortest paths
    edge = int(np.argmin(weights))
    return CertificateModel(kind="nonpositive-edge", k=k, edge=edge, min_weight=float(weights[edge]))


def verify_certificate(manifold: DiscreteManifold, lagrangian: Lagrangian, certificate: CertificateModel) -> bool:
    """Re-check a certificate from scratch at its own k."""
    shifted = lagrangian.with_shift(certificate.k)

    if certificate.kind == "subcritical-edge":
        try:
            edge_weight_lagrangian(shifted, manifold, certificate.edge)
        except SubcriticalError:
            return True
        return False

    if certificate.kind == "nonpositive-cycle":
        cycle = certificate.cycle
        if not cycle:
            return False
        closed = all(
            int(manifold.heads[a]) == int(manifold.tails[b]) for a, b in zip(cycle, cycle[1:] + cycle[:1])
        )
        total = sum(edge_weight_lagrangian(shifted, manifold, edge).weight for edge in cycle)
        return closed and total <= 0.0

    if certificate.kind == "nonpositive-edge":
        return edge_weight_lagrangian(shifted, manifold, certificate.edge).weight <= 0.0

    if certificate.kind == "positive":
        try:
            return bool(_weights_at(manifold, shifted).min() > 0.0)
        except SubcriticalError:
            return False

    return False


def critical_value(manifold: DiscreteManifold,
                   lagrangian: Lagrangian,
                   k_lo: float,
                   k_hi: float,
                   tol: float = 1e-6,
                   max_iterations: int = 200) -> CriticalValue:
    """
    Bisection on the shift k.

    The shift carried by `lagrangian` is ignored; the family is L + k for k in
    [k_lo, k_hi].

    Raises:
        BracketError: if k_lo is already supercritical or k_hi is not
    """
    if not tol > 0.0 or not k_lo < k_hi:
        raise InvalidConfigError(f"need k_lo < k_hi and tol > 0, got [{k_lo}, {k_hi}], tol={tol}")

    below = certificate_at(manifold, lagrangian, k_lo)
    if below.kind == "positive":
        raise BracketError(f"k_lo={k_lo} is already supercritical (min edge weight {below.min_weight:.6g})")
    above = certificate_at(manifold, lagrangian, k_hi)
    if above.kind != "positive":
        raise BracketError(f"k_hi={k_hi} is not supercritical ({above.kind})")

    iterations = 0
    while k_hi - k_lo > tol and iterations < max_iterations:
        mid = 0.5 * (k_lo + k_hi)
        certificate = certificate_at(manifold, lagrangian, mid)
        if certificate.kind == "positive":
            k_hi, above = mid, certificate
        else:
            k_lo, below = mid, certificate
        iterations += 1

    logger.info(f"Critical value in [{k_lo:.9g}, {k_hi:.9g}] after {iterations} bisection steps")
    return CriticalValue(
        k_lo=k_lo,
        k_hi=k_hi,
        estimate=0.5 * (k_lo + k_hi),
        iterations=iterations,
        below=below,
        above=above,
    )
