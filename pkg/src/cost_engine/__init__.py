"""
Edge actions, Mañé potential rows, critical value and metric certifications.
"""

from src.cost_engine.edge_costs import (
    CostModel,
    EdgeCost,
    EdgeCostTable,
    edge_cost_table,
    edge_weight_finsler,
    edge_weight_lagrangian,
    energy,
    energy_finite_difference,
    hamiltonian,
)
from src.cost_engine.mane import CostField, CostRowProvider, MatrixCostRows, dp_residual, mane_row
from src.cost_engine.critical import CriticalValue, certificate_at, critical_value, verify_certificate
from src.cost_engine.certify import certify_metric_axioms, compare_cost_models

__all__ = [
    "CostModel",
    "EdgeCost",
    "EdgeCostTable",
    "edge_cost_table",
    "edge_weight_finsler",
    "edge_weight_lagrangian",
    "energy",
    "energy_finite_difference",
    "hamiltonian",
    "CostField",
    "CostRowProvider",
    "MatrixCostRows",
    "dp_residual",
    "mane_row",
    "CriticalValue",
    "certificate_at",
    "critical_value",
    "verify_certificate",
    "certify_metric_axioms",
    "compare_cost_models",
]
