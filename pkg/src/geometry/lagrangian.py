"""
Tonelli Lagrangians on the discrete manifold.

Two families are supported:
    tilde      L̃(x,v) = (1 + ‖v‖ₓ²) / 2 over a Finsler metric
    quadratic  L(x,v) = ½ vᵀG(x)v + V(x)

The shift k (energy level) is carried with the Lagrangian; the transport
cost is built from L + k.
"""

import logging
from dataclasses import dataclass, replace
from typing import Literal, Optional

import numpy as np

from src.exceptions import InvalidConfigError
from src.geometry.metric import FinslerMetric, _broadcast_matrix_field
from src.schemas import LagrangianAuditReport

logger = logging.getLogger(__name__)

FLOOR_SAFETY = 0.9  # δ is shrunk by 10% after sampling


@dataclass(frozen=True)
class Lagrangian:
    variant: Literal["tilde", "quadratic"]
    k: float = 0.0
    metric: Optional[FinslerMetric] = None
    G: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None

    @classmethod
    def tilde(cls, metric: FinslerMetric, k: float = 0.0) -> "Lagrangian":
        return cls("tilde", k=float(k), metric=metric)

    @classmethod
    def quadratic(cls, n_nodes: int, G=None, V=0.0, k: float = 0.0) -> "Lagrangian":
        V = np.asarray(V, dtype=float)
        if V.ndim == 0:
            V = np.full(n_nodes, float(V))
        if V.shape != (n_nodes,):
            raise InvalidConfigError(f"potential V must be scalar or length {n_nodes}, got {V.shape}")
        return cls("quadratic", k=float(k), G=_broadcast_matrix_field(G, n_nodes), V=V.copy())

    def with_shift(self, k: float) -> "Lagrangian":
        return replace(self, k=float(k))

    @property
    def n_nodes(self) -> int:
        return self.metric.n_nodes if self.variant == "tilde" else int(self.G.shape[0])

    def value(self, x: int, v) -> float:
        """L(x,v), without the shift."""
        v = np.asarray(v, dtype=float)
        if self.variant == "tilde":
            norm = float(self.metric.norms(np.asarray(x), v))
            return 0.5 * (1.0 + norm * norm)
        return 0.5 * float(v @ self.G[x] @ v) + float(self.V[x])

    def values(self, nodes: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        nodes = np.asarray(nodes, dtype=np.int64)
        vectors = np.asarray(vectors, dtype=float)
        if self.variant == "tilde":
            norm = self.metric.norms(nodes, vectors)
            return 0.5 * (1.0 + norm * norm)
        quad = np.einsum("...i,...ij,...j->...", vectors, self.G[nodes], vectors)
        return 0.5 * quad + self.V[nodes]

    def velocity_gradient(self, x: int, v) -> np.ndarray:
        """∂ᵥL(x,v), analytic per variant."""
        v = np.asarray(v, dtype=float)
        if self.variant == "tilde":
            norm = float(self.metric.norms(np.asarray(x), v))
            return norm * self.metric.norm_gradient(x, v)
        return self.G[x] @ v

    def energy_along(self, x: int, d: np.ndarray, t: float) -> float:
        """E(x, d/t) through the closed forms of each family."""
        speed = 1.0 / t
        if self.variant == "tilde":
            norm = float(self.metric.norms(np.asarray(x), d)) * speed
            return 0.5 * (norm * norm - 1.0)
        return 0.5 * speed * speed * float(d @ self.G[x] @ d) - float(self.V[x])

    def floor(self, v_max: float = 10.0, radii: int = 64, angles: int = 64) -> float:
        """
        Estimate δ = inf (L + k) over nodes x a velocity ball, shrunk by 10%.

        Returns a non-positive number when L + k is not bounded below by a
        positive constant on the sampled ball.
        """
        r = np.linspace(0.0, v_max, radii)
        theta = np.linspace(0.0, 2.0 * np.pi, angles, endpoint=False)
        rr, tt = np.meshgrid(r, theta)
        velocities = np.stack([rr.ravel() * np.cos(tt.ravel()), rr.ravel() * np.sin(tt.ravel())], axis=1)
        lowest = np.inf
        for start in range(0, self.n_nodes, 64):
            block = np.arange(start, min(start + 64, self.n_nodes))
            nodes = np.repeat(block, velocities.shape[0])
            sampled = self.values(nodes, np.tile(velocities, (block.size, 1))) + self.k
            lowest = min(lowest, float(sampled.min()))
        if self.variant == "quadratic":
            # minimum over v is attained at v = 0
            lowest = min(lowest, float(self.V.min()) + self.k)
        return FLOOR_SAFETY * lowest if lowest > 0.0 else lowest


def lagrangian_audit(lagrangian: Lagrangian, sample_count: int = 200, seed: int = 0) -> LagrangianAuditReport:
    """Strict convexity (second difference) and superlinearity (ratio growth) at sampled points."""
    rng = np.random.default_rng(seed)
    n = lagrangian.n_nodes
    nodes = rng.integers(0, n, size=sample_count)
    v = rng.normal(size=(sample_count, 2))
    step = rng.normal(size=(sample_count, 2)) * 1e-2

    second = (
        lagrangian.values(nodes, v + step)
        + lagrangian.values(nodes, v - step)
        - 2.0 * lagrangian.values(nodes, v)
    )
    min_second = float(np.min(second / np.sum(step * step, axis=1)))

    direction = v / np.linalg.norm(v, axis=1, keepdims=True)
    ratios = []
    for magnitude in (10.0, 100.0, 1000.0):
        ratios.append(lagrangian.values(nodes, magnitude * direction) / magnitude)
    ratios = np.stack(ratios, axis=1)
    growing = bool(np.all(np.diff(ratios, axis=1) > 0.0))

    delta = lagrangian.floor()
    return LagrangianAuditReport(
        variant=lagrangian.variant,
        k=lagrangian.k,
        samples=sample_count,
        min_second_difference=min_second,
        strictly_convex=bool(min_second > 0.0),
        superlinear=growing,
        floor=delta,
        positive_floor=bool(delta > 0.0),
    )
