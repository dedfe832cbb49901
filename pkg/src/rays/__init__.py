"""
Calibrated edges, transport rays and ray-level audits.
"""

from src.rays.calibrated import CalibratedGraph, calibrated_edges
from src.rays.decomposition import (
    RayDecomposition,
    alpha_beta,
    classify,
    decompose,
    forward_ray,
    maximal_chains,
)
from src.rays.audits import ray_audits

__all__ = [
    "CalibratedGraph",
    "calibrated_edges",
    "RayDecomposition",
    "alpha_beta",
    "classify",
    "decompose",
    "forward_ray",
    "maximal_chains",
    "ray_audits",
]
