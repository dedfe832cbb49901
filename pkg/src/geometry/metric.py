"""
Finsler metrics sampled at nodes: euclidean, riemannian and Randers.

The Randers norm is ‖v‖ₓ = sqrt(vᵀG(x)v) + ω(x)·v. It is positive away
from v = 0 exactly when ‖ω(x)‖ under the dual metric G(x)⁻¹ is below 1.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence, Union

import numpy as np

from src.exceptions import InvalidConfigError, MetricDegenerateError
from src.schemas import MetricAuditReport

logger = logging.getLogger(__name__)

NEAR_DEGENERATE_DRIFT = 0.95

ArrayLike = Union[float, Sequence, np.ndarray]


def _broadcast_matrix_field(G: Optional[ArrayLike], n_nodes: int) -> np.ndarray:
    if G is None:
        G = np.eye(2)
    G = np.asarray(G, dtype=float)
    if G.shape == (2, 2):
        G = np.broadcast_to(G, (n_nodes, 2, 2))
    if G.shape != (n_nodes, 2, 2):
        raise InvalidConfigError(f"metric G must be 2x2 or ({n_nodes},2,2), got {G.shape}")
    if not np.allclose(G, np.swapaxes(G, 1, 2)):
        raise InvalidConfigError("metric G must be symmetric at every node")
    if np.any(np.linalg.eigvalsh(G) <= 0.0):
        raise InvalidConfigError("metric G must be positive definite at every node")
    return np.array(G, copy=True)


def _broadcast_vector_field(omega: Optional[ArrayLike], n_nodes: int) -> np.ndarray:
    if omega is None:
        omega = np.zeros(2)
    omega = np.asarray(omega, dtype=float)
    if omega.shape == (2,):
        omega = np.broadcast_to(omega, (n_nodes, 2))
    if omega.shape != (n_nodes, 2):
        raise InvalidConfigError(f"metric omega must be a 2-vector or ({n_nodes},2), got {omega.shape}")
    return np.array(omega, copy=True)


def swirl_drift(positions: np.ndarray, amplitude: float) -> np.ndarray:
    """Smooth periodic drift amplitude·(cos 2πy, sin 2πx); its Euclidean norm stays below √2·amplitude."""
    positions = np.asarray(positions, dtype=float)
    x, y = positions[:, 0], positions[:, 1]
    return amplitude * np.stack([np.cos(2.0 * np.pi * y), np.sin(2.0 * np.pi * x)], axis=1)


@dataclass(frozen=True)
class FinslerMetric:
    """Per-node Finsler norm; every evaluation on an edge uses the source node."""
    variant: Literal["euclidean", "riemannian", "randers"]
    G: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        for name in ("G", "omega"):
            getattr(self, name).setflags(write=False)

    @classmethod
    def euclidean(cls, n_nodes: int) -> "FinslerMetric":
        return cls("euclidean", _broadcast_matrix_field(None, n_nodes), _broadcast_vector_field(None, n_nodes))

    @classmethod
    def riemannian(cls, G: ArrayLike, n_nodes: int) -> "FinslerMetric":
        return cls("riemannian", _broadcast_matrix_field(G, n_nodes), _broadcast_vector_field(None, n_nodes))

    @classmethod
    def randers(cls, G: Optional[ArrayLike], omega: ArrayLike, n_nodes: int) -> "FinslerMetric":
        return cls("randers", _broadcast_matrix_field(G, n_nodes), _broadcast_vector_field(omega, n_nodes))

    @property
    def n_nodes(self) -> int:
        return int(self.G.shape[0])

    def drift_norms(self) -> np.ndarray:
        """‖ω(x)‖ under G(x)⁻¹ for every node."""
        solved = np.linalg.solve(self.G, self.omega[..., None])[..., 0]
        return np.sqrt(np.maximum(np.einsum("ni,ni->n", self.omega, solved), 0.0))

    def norms(self, nodes: np.ndarray, vectors: np.ndarray) -> np.ndarray:
        """Vectorized ‖v‖ₓ without the degeneracy check (audits need the raw values)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        vectors = np.asarray(vectors, dtype=float)
        G = self.G[nodes]
        quad = np.einsum("...i,...ij,...j->...", vectors, G, vectors)
        value = np.sqrt(np.maximum(quad, 0.0))
        if self.variant == "randers":
            value = value + np.einsum("...i,...i->...", self.omega[nodes], vectors)
        return value

    def norm_gradient(self, x: int, v: np.ndarray) -> np.ndarray:
        """∂ᵥ‖v‖ₓ (zero at v = 0 by convention)."""
        v = np.asarray(v, dtype=float)
        Gv = self.G[x] @ v
        quad = float(v @ Gv)
        if quad <= 0.0:
            return np.zeros(2)
        grad = Gv / np.sqrt(quad)
        if self.variant == "randers":
            grad = grad + self.omega[x]
        return grad

    def check_node(self, x: int) -> None:
        if self.variant == "randers":
            drift = float(np.sqrt(self.omega[x] @ np.linalg.solve(self.G[x], self.omega[x])))
            if drift >= 1.0:
                raise MetricDegenerateError(
                    f"Randers condition violated at node {x}: ‖ω‖ = {drift:.6g} >= 1"
                )


def metric_eval(metric: FinslerMetric, x: int, v: ArrayLike) -> float:
    """
    Evaluate ‖v‖ₓ at node x.

    Raises:
        MetricDegenerateError: if the Randers drift at x violates ‖ω‖ < 1
    """
    metric.check_node(x)
    return float(metric.norms(np.asarray(x), np.asarray(v, dtype=float)))


def metric_audit(metric: FinslerMetric, manifold, sample_count: int = 1000, seed: int = 0) -> MetricAuditReport:
    """
    Sample positivity, positive 1-homogeneity and midpoint convexity.

    Never raises on violations; the report carries the worst residuals.
    """
    rng = np.random.default_rng(seed)
    n = manifold.n_nodes
    nodes = rng.integers(0, n, size=sample_count)
    v = rng.normal(size=(sample_count, 2))
    w = rng.normal(size=(sample_count, 2))
    lam = rng.uniform(0.01, 10.0, size=sample_count)

    norm_v = metric.norms(nodes, v)
    euclid_v = np.linalg.norm(v, axis=1)

    positivity_min = float(np.min(norm_v / euclid_v))
    homogeneity = np.abs(metric.norms(nodes, lam[:, None] * v) - lam * norm_v) / (1.0 + lam * np.abs(norm_v))
    midpoint = metric.norms(nodes, 0.5 * (v + w)) - 0.5 * (norm_v + metric.norms(nodes, w))
    symmetric_sum = norm_v + metric.norms(nodes, -v)
    riemann = 2.0 * np.sqrt(np.einsum("ni,nij,nj->n", v, metric.G[nodes], v))

    drift = metric.drift_norms()
    max_drift = float(drift.max()) if drift.size else 0.0

    # the worst direction for positivity is -G⁻¹ω, probe it at every node
    if metric.variant == "randers" and max_drift > 0.0:
        worst = -np.linalg.solve(metric.G, metric.omega[..., None])[..., 0]
        nonzero = np.linalg.norm(worst, axis=1) > 0.0
        if np.any(nonzero):
            idx = np.flatnonzero(nonzero)
            probe = metric.norms(idx, worst[idx]) / np.linalg.norm(worst[idx], axis=1)
            positivity_min = min(positivity_min, float(probe.min()))

    report = MetricAuditReport(
        variant=metric.variant,
        samples=sample_count,
        positivity_min=positivity_min,
        positivity_violation=max(0.0, -positivity_min),
        homogeneity_violation=float(homogeneity.max()),
        convexity_violation=float(max(0.0, midpoint.max())),
        symmetric_sum_violation=float(max(0.0, np.max(riemann - symmetric_sum))),
        max_drift_norm=max_drift,
        near_degenerate=bool(NEAR_DEGENERATE_DRIFT <= max_drift < 1.0),
        positive=bool(positivity_min > 0.0),
    )
    if report.near_degenerate:
        logger.warning(f"⚠️ Randers drift close to degeneracy: max ‖ω‖ = {max_drift:.4f}")
    if not report.positive:
        logger.warning(f"⚠️ Metric positivity violated: min ‖v‖/|v| = {positivity_min:.4g}")
    return report
