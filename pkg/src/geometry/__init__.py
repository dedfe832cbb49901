"""
Discrete manifolds with Finsler metrics and Tonelli Lagrangians on them.
"""

from src.geometry.manifold import DiscreteManifold, build_torus_grid, load_graph
from src.geometry.metric import FinslerMetric, metric_audit, metric_eval, swirl_drift
from src.geometry.lagrangian import FLOOR_SAFETY, Lagrangian, lagrangian_audit

__all__ = [
    "DiscreteManifold",
    "build_torus_grid",
    "load_graph",
    "FinslerMetric",
    "metric_audit",
    "metric_eval",
    "swirl_drift",
    "FLOOR_SAFETY",
    "Lagrangian",
    "lagrangian_audit",
]
