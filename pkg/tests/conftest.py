"""
Shared fixtures: small manifolds, edge costs and marginals used across the suite.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.config import build_run_config
from src.cost_engine import CostModel, CostRowProvider, edge_cost_table
from src.geometry import FinslerMetric, build_torus_grid, load_graph, swirl_drift
from src.ot_solver import Marginals, solve_primary


@pytest.fixture
def path_graph():
    """Unit-edge path 0-1-2-3 with edges in both directions."""
    return load_graph({
        "nodes": [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]],
        "edges": [[0, 1], [1, 0], [1, 2], [2, 1], [2, 3], [3, 2]],
    })


@pytest.fixture
def path_costs(path_graph):
    return edge_cost_table(path_graph, CostModel.from_metric(FinslerMetric.euclidean(path_graph.n_nodes)))


@pytest.fixture
def path_rows(path_graph, path_costs):
    return CostRowProvider(path_graph, path_costs, threads=1)


@pytest.fixture
def path_marginals():
    """μ₀ = ½(δ₀ + δ₁), μ₁ = ½(δ₂ + δ₃)."""
    return Marginals(np.array([0.5, 0.5, 0.0, 0.0]), np.array([0.0, 0.0, 0.5, 0.5]))


@pytest.fixture
def path_solution(path_graph, path_costs, path_marginals):
    return solve_primary(path_graph, path_costs, path_marginals)


@pytest.fixture
def small_torus():
    return build_torus_grid(8, stencil=16)


@pytest.fixture
def randers_metric(small_torus):
    omega = swirl_drift(small_torus.positions, 0.3)
    return FinslerMetric.randers(None, omega, small_torus.n_nodes)


@pytest.fixture
def randers_costs(small_torus, randers_metric):
    return edge_cost_table(small_torus, CostModel.from_metric(randers_metric))


@pytest.fixture
def randers_rows(small_torus, randers_costs):
    return CostRowProvider(small_torus, randers_costs, threads=1)


@pytest.fixture
def small_config(tmp_path):
    """Gaussian bumps on a side-8 Randers torus, outputs under tmp_path."""
    return build_run_config({
        "seed": 3,
        "manifold": {"type": "torus2d", "n": 8, "stencil": 16},
        "metric": {"type": "randers", "swirl": 0.3},
        "marginals": {
            "mu0": {"type": "gaussian", "center": [0.3, 0.3], "width": 0.15},
            "mu1": {"type": "gaussian", "center": [0.7, 0.6], "width": 0.15},
        },
        "output": {"dir": str(tmp_path / "out")},
    })
