"""
Transport rays from the calibrated DAG.

α(x) is the longest calibrated time into x, β(x) the longest calibrated time
out of x. T collects the nodes on some non-trivial calibrated path, T_ε the
nodes with more than ε of ray on both sides, and E = T − T₀ the ray ends.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from src.rays.calibrated import CalibratedGraph
from src.schemas import RayAuditReport, RaysOutput

logger = logging.getLogger(__name__)


def _topological_order(graph: nx.DiGraph) -> List[int]:
    return list(nx.lexicographical_topological_sort(graph))


def alpha_beta(calibrated: CalibratedGraph) -> Tuple[np.ndarray, np.ndarray]:
    """Longest-path times into and out of every node, by DP in topological order."""
    graph = calibrated.graph
    order = _topological_order(graph)
    alpha = np.zeros(calibrated.n_nodes)
    beta = np.zeros(calibrated.n_nodes)
    for node in order:
        for pred, _, data in graph.in_edges(node, data=True):
            alpha[node] = max(alpha[node], alpha[pred] + data["time"])
    for node in reversed(order):
        for _, succ, data in graph.out_edges(node, data=True):
            beta[node] = max(beta[node], beta[succ] + data["time"])
    return alpha, beta


def classify(alpha: np.ndarray, beta: np.ndarray, epsilon: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(T, T_ε, E) as sorted node arrays."""
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    T = np.flatnonzero(alpha + beta > 0.0)
    T_eps = np.flatnonzero((alpha > epsilon) & (beta > epsilon))
    T0 = (alpha > 0.0) & (beta > 0.0)
    ends = T[~T0[T]]
    return T, T_eps, ends


def _pick(candidates: List[Tuple[float, int]]) -> int:
    """Largest score, lowest node index on ties."""
    return min(candidates, key=lambda item: (-item[0], item[1]))[1]


def maximal_chains(calibrated: CalibratedGraph,
                   alpha: Optional[np.ndarray] = None,
                   beta: Optional[np.ndarray] = None) -> List[List[int]]:
    """
    Source-to-sink paths covering every calibrated edge.

    Uncovered edges are taken in topological order of their tails (heads by
    index), then extended backward along the longest incoming time and
    forward along the longest outgoing time.
    """
    graph = calibrated.graph
    if alpha is None or beta is None:
        alpha, beta = alpha_beta(calibrated)
    position = {node: i for i, node in enumerate(_topological_order(graph))}
    edges = sorted(graph.edges(), key=lambda e: (position[e[0]], e[1]))

    covered: Set[Tuple[int, int]] = set()
    chains: List[List[int]] = []
    for tail, head in edges:
        if (tail, head) in covered:
            continue
        backward = [tail]
        while graph.in_degree(backward[-1]) > 0:
            node = backward[-1]
            backward.append(_pick([
                (alpha[p] + d["time"], p) for p, _, d in graph.in_edges(node, data=True)
            ]))
        forward = [head]
        while graph.out_degree(forward[-1]) > 0:
            node = forward[-1]
            forward.append(_pick([
                (d["time"] + beta[s], s) for _, s, d in graph.out_edges(node, data=True)
            ]))
        chain = backward[::-1] + forward
        covered.update(zip(chain[:-1], chain[1:]))
        chains.append(chain)
    return chains


def forward_ray(calibrated: CalibratedGraph, x: int) -> Set[int]:
    """R⁺ₓ: nodes reachable from x along calibrated edges, x included."""
    return nx.descendants(calibrated.graph, x) | {int(x)}


@dataclass(frozen=True)
class RayDecomposition:
    calibrated: CalibratedGraph
    alpha: np.ndarray
    beta: np.ndarray
    epsilon: float
    T: np.ndarray
    T_eps: np.ndarray
    ends: np.ndarray
    chains: List[List[int]] = field(default_factory=list)

    @property
    def T0(self) -> np.ndarray:
        return np.flatnonzero((self.alpha > 0.0) & (self.beta > 0.0))

    def to_output(self, config_digest: str = "", audit: Optional[RayAuditReport] = None) -> RaysOutput:
        return RaysOutput(
            config_digest=config_digest,
            epsilon=self.epsilon,
            alpha=self.alpha.tolist(),
            beta=self.beta.tolist(),
            T=self.T.tolist(),
            T_eps=self.T_eps.tolist(),
            ends=self.ends.tolist(),
            chains=self.chains,
            audit=audit,
        )


def decompose(calibrated: CalibratedGraph, epsilon: float) -> RayDecomposition:
    alpha, beta = alpha_beta(calibrated)
    T, T_eps, ends = classify(alpha, beta, epsilon)
    chains = maximal_chains(calibrated, alpha, beta)
    logger.info(
        f"Ray decomposition: |T|={T.size}, |T_eps|={T_eps.size}, |E|={ends.size}, {len(chains)} chains"
    )
    return RayDecomposition(calibrated, alpha, beta, float(epsilon), T, T_eps, ends, chains)
