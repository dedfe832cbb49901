"""
Ray-level audits of a selected plan against its ray decomposition.
"""

import logging
from typing import Optional

import numpy as np
from scipy.sparse.csgraph import shortest_path

from config.settings import settings
from src.ot_solver.certificates import TightSet
from src.ot_solver.marginals import Marginals
from src.ot_solver.primary import DualPotential, TransportPlan
from src.rays.decomposition import RayDecomposition
from src.schemas import RayAuditReport
from src.selector.secondary import extract_map

logger = logging.getLogger(__name__)


def _reachability(decomposition: RayDecomposition, sources: np.ndarray) -> np.ndarray:
    """Boolean matrix: row i marks R⁺ of sources[i]."""
    adjacency = decomposition.calibrated.adjacency()
    out = np.zeros((sources.size, decomposition.calibrated.n_nodes), dtype=bool)
    chunk = settings.ROW_CHUNK
    for start in range(0, sources.size, chunk):
        block = sources[start:start + chunk]
        dist = shortest_path(adjacency, directed=True, unweighted=True, indices=block)
        out[start:start + block.size] = np.isfinite(np.atleast_2d(dist))
    return out


def _order_check(decomposition: RayDecomposition, plan: TransportPlan, u: np.ndarray):
    """Violations of s < s′ ⇒ t ≤ t′ for support pairs lying on a common chain."""
    checked, violations = 0, 0
    min_factored = None
    for chain in decomposition.chains:
        position = {node: i for i, node in enumerate(chain)}
        on_chain = [
            (position[x], position[y], x, y)
            for x, y in zip(plan.sources.tolist(), plan.targets.tolist())
            if x in position and y in position
        ]
        if len(on_chain) < 2:
            continue
        s, t, x, y = (np.asarray(col) for col in zip(*on_chain))
        first, second = np.triu_indices(s.size, k=1)
        swap = s[first] > s[second]
        first, second = np.where(swap, second, first), np.where(swap, first, second)
        strict = s[first] < s[second]
        checked += int(strict.sum())
        violations += int(np.sum(strict & (t[first] > t[second])))
        factored = (u[y[first]] - u[y[second]]) * (u[x[first]] - u[x[second]])
        if factored.size:
            value = float(factored.min())
            min_factored = value if min_factored is None else min(min_factored, value)
    return checked, violations, min_factored


def ray_audits(decomposition: RayDecomposition,
               plan: TransportPlan,
               potential: DualPotential,
               delta: float,
               marginals: Optional[Marginals] = None,
               tight: Optional[TightSet] = None) -> RayAuditReport:
    """
    Speed, order, Λ placement, support connectivity and α/β consistency.

    With `marginals` and `tight`, also compares the tight set with the forward
    rays R⁺ₓ on supp μ₀ × supp μ₁.
    """
    u = potential.values
    tails, heads, times, gains = decomposition.calibrated.edge_arrays()
    alpha, beta = decomposition.alpha, decomposition.beta

    min_speed = float(np.min(gains / times)) if times.size else None

    checked, violations, min_factored = _order_check(decomposition, plan, u)

    _, lambda_nodes, _ = extract_map(plan)
    lambda_set = set(lambda_nodes.tolist())
    lambda_per_chain = [sum(1 for node in chain if node in lambda_set) for chain in decomposition.chains]
    T_set = set(decomposition.T.tolist())
    lambda_outside = sorted(node for node in lambda_set if node not in T_set)

    moving = plan.sources != plan.targets
    movers = np.unique(plan.sources[moving])
    unconnected = 0
    if movers.size:
        reach = _reachability(decomposition, movers)
        rows = np.searchsorted(movers, plan.sources[moving])
        unconnected = int(np.sum(~reach[rows, plan.targets[moving]]))

    mismatches = None
    if marginals is not None and tight is not None:
        supp0, supp1 = marginals.support0, marginals.support1
        reach = _reachability(decomposition, supp0)[:, supp1]
        tight_matrix = np.zeros_like(reach)
        tight_matrix[np.searchsorted(supp0, tight.sources), np.searchsorted(supp1, tight.targets)] = True
        mismatches = int(np.sum(reach != tight_matrix))

    if times.size:
        alpha_violation = float(np.max(alpha[tails] + times - alpha[heads]))
        beta_violation = float(np.max(beta[heads] + times - beta[tails]))
        ab_violation = max(0.0, alpha_violation, beta_violation)
    else:
        ab_violation = 0.0
    bound = float(u.max() - u.min()) / delta if delta > 0.0 else float("inf")

    report = RayAuditReport(
        calibrated_edges=int(times.size),
        delta=float(delta),
        min_speed=min_speed,
        order_pairs_checked=checked,
        order_violations=violations,
        min_factored=min_factored,
        lambda_per_chain=lambda_per_chain,
        lambda_outside_T=lambda_outside,
        unconnected_support_pairs=unconnected,
        tight_ray_mismatches=mismatches,
        alpha_beta_violation=ab_violation,
        alpha_beta_bound=bound,
        alpha_beta_max=float(max(alpha.max(initial=0.0), beta.max(initial=0.0))),
    )
    if not report.passed:
        logger.warning(
            f"Ray audit failed: speed {min_speed}, order violations {violations}, "
            f"unconnected {unconnected}, mismatches {mismatches}"
        )
    return report
