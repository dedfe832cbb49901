"""
Sampled certifications of the Mañé potential as a (non-symmetric) metric.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from src.cost_engine.edge_costs import CostModel, edge_cost_table
from src.cost_engine.mane import CostRowProvider
from src.geometry.lagrangian import Lagrangian
from src.geometry.manifold import DiscreteManifold
from src.geometry.metric import FinslerMetric
from src.schemas import CostModelComparison, MetricAxiomReport

logger = logging.getLogger(__name__)

SOURCE_POOL = 512  # distinct sources whose rows are materialized for sampling


def certify_metric_axioms(cost_rows: CostRowProvider,
                          triple_sample_count: int = 100_000,
                          seed: int = 0) -> MetricAxiomReport:
    """
    Max triangle violation, max |c(x,x)| and min c(x,y) + c(y,x).

    x and y are drawn from a pool of at most SOURCE_POOL sources so that
    only that many rows are computed; z ranges over all nodes.
    """
    rng = np.random.default_rng(seed)
    n = cost_rows.n_nodes
    pool = np.arange(n) if n <= SOURCE_POOL else np.sort(rng.choice(n, size=SOURCE_POOL, replace=False))
    rows = cost_rows.rows(pool)

    ix = rng.integers(0, pool.size, size=triple_sample_count)
    iy = rng.integers(0, pool.size, size=triple_sample_count)
    z = rng.integers(0, n, size=triple_sample_count)
    violation = rows[ix, z] - (rows[ix, pool[iy]] + rows[iy, z])
    max_violation = max(0.0, float(violation.max())) if violation.size else 0.0

    diagonal = float(np.max(np.abs(rows[np.arange(pool.size), pool])))

    distinct = ix != iy
    if distinct.any():
        pair_sum = rows[ix[distinct], pool[iy[distinct]]] + rows[iy[distinct], pool[ix[distinct]]]
        min_pair_sum = float(pair_sum.min())
    else:
        min_pair_sum = float("inf")

    report = MetricAxiomReport(
        triples=int(triple_sample_count),
        max_triangle_violation=max_violation,
        max_diagonal=diagonal,
        min_pair_sum=min_pair_sum,
    )
    if not report.passed:
        logger.warning(f"Metric axioms not certified: {report.model_dump()}")
    return report


def compare_cost_models(manifold: DiscreteManifold,
                        metric: FinslerMetric,
                        sources: Optional[Sequence[int]] = None,
                        threads: Optional[int] = None) -> CostModelComparison:
    """
    Finsler edge lengths against the free-time action of L̃ = (1 + ‖v‖²)/2 at k = 0.

    Both the per-edge weights and the resulting shortest-path rows are
    compared.
    """
    finsler = edge_cost_table(manifold, CostModel.from_metric(metric))
    tilde = edge_cost_table(manifold, CostModel.from_lagrangian(Lagrangian.tilde(metric, k=0.0)))
    edge_difference = float(np.max(np.abs(finsler.weights - tilde.weights)))

    if sources is None:
        sources = np.arange(manifold.n_nodes)
    sources = np.asarray(sources, dtype=np.int64)
    rows_finsler = CostRowProvider(manifold, finsler, threads=threads).rows(sources)
    rows_tilde = CostRowProvider(manifold, tilde, threads=threads).rows(sources)
    row_difference = float(np.max(np.abs(rows_finsler - rows_tilde))) if sources.size else 0.0

    logger.info(f"Finsler vs L̃ costs: edge diff {edge_difference:.3g}, row diff {row_difference:.3g}")
    return CostModelComparison(
        edges=manifold.n_edges,
        max_edge_difference=edge_difference,
        sources=int(sources.size),
        max_row_difference=row_difference,
    )
