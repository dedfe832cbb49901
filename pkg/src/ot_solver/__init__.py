"""
Kantorovich problem: marginals, min-cost flow solver, optimality certificates.
"""

from src.ot_solver.marginals import Marginals, atoms, gaussian_bump, load_masses, make_marginals, uniform_density
from src.ot_solver.primary import (
    DualPotential,
    TransportPlan,
    TransportSolution,
    bipartite_marginals,
    solve_primary,
    solve_transport,
)
from src.ot_solver.certificates import TightSet, certify_optimality, default_tol_tight, tight_set

__all__ = [
    "Marginals",
    "atoms",
    "gaussian_bump",
    "load_masses",
    "make_marginals",
    "uniform_density",
    "DualPotential",
    "TransportPlan",
    "TransportSolution",
    "bipartite_marginals",
    "solve_primary",
    "solve_transport",
    "TightSet",
    "certify_optimality",
    "default_tol_tight",
    "tight_set",
]
