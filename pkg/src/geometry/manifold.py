"""
Discrete stand-in for the compact manifold: a finite, strongly connected
digraph whose nodes carry positions and whose edges carry displacement
vectors.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import networkx as nx
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from src.exceptions import ConnectivityError, InvalidConfigError

logger = logging.getLogger(__name__)

STENCIL_OFFSETS: Dict[int, List[tuple]] = {
    8: [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)],
}
STENCIL_OFFSETS[16] = STENCIL_OFFSETS[8] + [
    (2, 1), (1, 2), (-1, 2), (-2, 1), (-2, -1), (-1, -2), (1, -2), (2, -1)
]


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DiscreteManifold:
    """
    Finite directed graph standing in for M.

    Edges are stored as parallel arrays (tails, heads, displacements) so the
    cost engine can work on them vectorized. Parallel edges between the same
    ordered pair are allowed on very small tori, self-loops never are.
    """
    positions: np.ndarray
    tails: np.ndarray
    heads: np.ndarray
    displacements: np.ndarray
    topology: str = "graph"
    side_count: Optional[int] = None
    spacing: Optional[float] = None
    stencil: Optional[int] = None
    lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(self.positions, float))
        object.__setattr__(self, "tails", _frozen(self.tails, np.int64))
        object.__setattr__(self, "heads", _frozen(self.heads, np.int64))
        object.__setattr__(self, "displacements", _frozen(self.displacements, float))
        object.__setattr__(
            self, "lengths", _frozen(np.linalg.norm(self.displacements, axis=1), float)
        )

    @property
    def n_nodes(self) -> int:
        return int(self.positions.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self.tails.shape[0])

    @property
    def cell_volume(self) -> float:
        """Measure carried by one node (h² on the torus, 1/n on a general graph)."""
        if self.topology == "torus2d" and self.spacing is not None:
            return self.spacing ** 2
        return 1.0 / self.n_nodes

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        graph.add_nodes_from(range(self.n_nodes))
        graph.add_edges_from(zip(self.tails.tolist(), self.heads.tolist()))
        return graph

    def is_strongly_connected(self) -> bool:
        return nx.is_strongly_connected(self.to_networkx())

    def out_edges(self, node: int) -> np.ndarray:
        return np.flatnonzero(self.tails == node)

    def periodic_delta(self, x: int, y: int) -> np.ndarray:
        """Minimal-image displacement from x to y (plain difference on a general graph)."""
        delta = self.positions[y] - self.positions[x]
        if self.topology == "torus2d":
            delta = delta - np.round(delta)
        return delta


def build_torus_grid(side_count: int, stencil: int = 16) -> DiscreteManifold:
    """
    Periodic grid on [0,1)² with spacing h = 1/side_count.

    Args:
        side_count: Number of nodes per side (>= 2)
        stencil: 8 or 16 neighbours per node

    Returns:
        DiscreteManifold with topology 'torus2d'
    """
    if side_count < 2:
        raise InvalidConfigError(f"side_count must be at least 2, got {side_count}")
    if stencil not in STENCIL_OFFSETS:
        raise InvalidConfigError(f"stencil must be 8 or 16, got {stencil}")

    h = 1.0 / side_count
    ii, jj = np.meshgrid(np.arange(side_count), np.arange(side_count), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    node_ids = ii + side_count * jj
    positions = np.zeros((side_count * side_count, 2))
    positions[node_ids, 0] = ii * h
    positions[node_ids, 1] = jj * h

    tails, heads, displacements = [], [], []
    for di, dj in STENCIL_OFFSETS[stencil]:
        targets = (ii + di) % side_count + side_count * ((jj + dj) % side_count)
        keep = targets != node_ids
        tails.append(node_ids[keep])
        heads.append(targets[keep])
        displacements.append(np.tile([di * h, dj * h], (int(keep.sum()), 1)))

    order_tails = np.concatenate(tails)
    order_heads = np.concatenate(heads)
    order_disp = np.concatenate(displacements)
    # group edges by source node, stencil order inside a group
    order = np.argsort(order_tails, kind="stable")

    manifold = DiscreteManifold(
        positions=positions,
        tails=order_tails[order],
        heads=order_heads[order],
        displacements=order_disp[order],
        topology="torus2d",
        side_count=side_count,
        spacing=h,
        stencil=stencil,
    )
    if not manifold.is_strongly_connected():
        raise ConnectivityError("torus grid is not strongly connected")
    logger.info(
        f"Built torus grid: {manifold.n_nodes} nodes, {manifold.n_edges} edges (stencil {stencil}, h={h:.6g})"
    )
    return manifold


def _parse_text_graph(text: str) -> Dict:
    nodes: Dict[int, List[float]] = {}
    edges: List[List[float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.replace(",", " ").split()
        kind = parts[0].lower()
        try:
            if kind == "node" and len(parts) == 4:
                nodes[int(parts[1])] = [float(parts[2]), float(parts[3])]
            elif kind == "edge" and len(parts) == 5:
                edges.append([int(parts[1]), int(parts[2]), float(parts[3]), float(parts[4])])
            else:
                raise ValueError(f"unrecognized record '{line}'")
        except ValueError as e:
            raise InvalidConfigError(f"graph file line {lineno}: {e}") from e
    if sorted(nodes) != list(range(len(nodes))):
        raise InvalidConfigError("graph nodes must be numbered 0..n-1")
    return {"nodes": [nodes[i] for i in range(len(nodes))], "edges": edges}


def load_graph(spec: Union[Dict, str, Path]) -> DiscreteManifold:
    """
    Build a general-graph manifold from a node/edge description.

    Accepts a dict {'nodes': [[x, y], ...], 'edges': [[src, dst, dx, dy], ...]},
    a JSON/TOML file with the same keys, or a text file with one
    'node i x y' / 'edge src dst dx dy' record per line. Edges given as
    [src, dst] take their displacement from the node positions.
    """
    if isinstance(spec, (str, Path)):
        path = Path(spec)
        if not path.exists():
            raise InvalidConfigError(f"graph file not found: {path}")
        text = path.read_text(encoding="utf-8")
        try:
            if path.suffix == ".json":
                spec = json.loads(text)
            elif path.suffix == ".toml":
                spec = tomllib.loads(text)
            else:
                spec = _parse_text_graph(text)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
            raise InvalidConfigError(f"cannot parse graph file {path}: {e}") from e

    try:
        positions = np.asarray(spec["nodes"], dtype=float).reshape(-1, 2)
        raw_edges = list(spec["edges"])
    except (KeyError, TypeError, ValueError) as e:
        raise InvalidConfigError(f"graph spec needs 'nodes' and 'edges': {e}") from e

    n = positions.shape[0]
    tails, heads, displacements = [], [], []
    seen = set()
    for record in raw_edges:
        src, dst = int(record[0]), int(record[1])
        if not (0 <= src < n and 0 <= dst < n):
            raise InvalidConfigError(f"edge ({src}, {dst}) references an unknown node")
        if src == dst:
            raise InvalidConfigError(f"self-loop at node {src} is not allowed")
        if (src, dst) in seen:
            raise InvalidConfigError(f"duplicate edge ({src}, {dst})")
        seen.add((src, dst))
        if len(record) >= 4:
            disp = [float(record[2]), float(record[3])]
        else:
            disp = (positions[dst] - positions[src]).tolist()
        if np.linalg.norm(disp) <= 0.0:
            raise InvalidConfigError(f"edge ({src}, {dst}) has zero displacement")
        tails.append(src)
        heads.append(dst)
        displacements.append(disp)

    manifold = DiscreteManifold(
        positions=positions,
        tails=np.asarray(tails, dtype=np.int64),
        heads=np.asarray(heads, dtype=np.int64),
        displacements=np.asarray(displacements, dtype=float).reshape(-1, 2),
        topology="graph",
    )
    if n == 0 or not manifold.is_strongly_connected():
        raise ConnectivityError("graph is not strongly connected")
    logger.info(f"Loaded graph manifold: {n} nodes, {manifold.n_edges} edges")
    return manifold
