"""
Monge workflow: costs, critical value, two-stage transport and rays.

Each step reads the services held by a MongeContext and returns plain
result objects; the CLI decides what to write.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from config.settings import settings
from src.config import MongeContext
from src.cost_engine import CriticalValue, critical_value
from src.exceptions import CertificationError, InvalidConfigError
from src.ot_solver import DualPotential, Marginals, TightSet, TransportPlan, certify_optimality, solve_primary, tight_set
from src.rays import RayDecomposition, calibrated_edges, decompose, ray_audits
from src.schemas import MonotonicityReport, OptimalityCertificate, PrimaryOutput, RayAuditReport
from src.selector import SecondaryCost, SelectionResult, monotonicity_check, solve_secondary

logger = logging.getLogger(__name__)


@dataclass
class SolveResult:
    plan: TransportPlan
    potential: DualPotential
    certificate: OptimalityCertificate
    tight: Optional[TightSet] = None
    selection: Optional[SelectionResult] = None
    monotonicity: Optional[MonotonicityReport] = None

    def primary_output(self, config_digest: str) -> PrimaryOutput:
        return PrimaryOutput(
            config_digest=config_digest,
            primary_cost=self.plan.value,
            dual_value=self.certificate.dual_value,
            plan=self.plan.entries(),
            certificate=self.certificate,
        )


@dataclass
class RayResult:
    decomposition: RayDecomposition
    audit: Optional[RayAuditReport] = None


class MongeWorkflow:
    """Pipeline over one run context."""

    def __init__(self, context: MongeContext):
        self.context = context
        self.config = context.config

    def cost_frame(self, sources: Optional[Sequence[int]] = None) -> pd.DataFrame:
        """Long table source,target,cost for the requested sources (all nodes by default)."""
        n = self.context.manifold.n_nodes
        sources = np.arange(n) if sources is None else np.asarray(sources, dtype=np.int64)
        if sources.size and (sources.min() < 0 or sources.max() >= n):
            raise InvalidConfigError(f"sources must lie in [0, {n})")
        blocks = []
        for block, rows in self.context.cost_rows.iter_rows(sources):
            blocks.append(pd.DataFrame({
                "source": np.repeat(block, n),
                "target": np.tile(np.arange(n), block.size),
                "cost": rows.ravel(),
            }))
        if not blocks:
            return pd.DataFrame(columns=["source", "target", "cost"])
        return pd.concat(blocks, ignore_index=True)

    def critical(self, k_lo: Optional[float] = None, k_hi: Optional[float] = None,
                 tol: Optional[float] = None) -> CriticalValue:
        spec = self.config.critical
        return critical_value(
            self.context.manifold,
            self.context.lagrangian,
            spec.k_lo if k_lo is None else k_lo,
            spec.k_hi if k_hi is None else k_hi,
            tol=self.config.tolerances.k0 if tol is None else tol,
        )

    def solve(self, primary_only: bool = False, strict: bool = True,
              marginals: Optional[Marginals] = None) -> SolveResult:
        """
        Stage 1, its certificate, and unless `primary_only` the σ-selection.

        `marginals` replaces the configured ones (same manifold).

        Raises:
            CertificationError: with `strict`, when the optimality
                certificate or the swap monotonicity check fails
        """
        context = self.context
        marginals = context.marginals if marginals is None else marginals
        logger.info("→ Solving the Kantorovich problem...")
        plan, potential = solve_primary(context.manifold, context.edge_costs, marginals)
        certificate = certify_optimality(
            plan,
            potential,
            context.cost_rows,
            pair_samples=settings.PAIR_SAMPLES,
            seed=self.config.seed,
            manifold=context.manifold,
            edge_costs=context.edge_costs,
        )
        if strict and not certificate.passed:
            logger.error("Stage-1 optimality certificate failed")
            raise CertificationError("primary plan is not certified optimal", report=certificate)
        result = SolveResult(plan, potential, certificate)
        if primary_only:
            return result
        return self.select(result, marginals, strict)

    def select(self, result: SolveResult, marginals: Optional[Marginals] = None,
               strict: bool = True) -> SolveResult:
        """
        σ-selection on the tight set of a stage-1 result (filled in place).

        Raises:
            RestrictionError: the tight set admits no plan with these marginals
            CertificationError: with `strict`, when swap monotonicity fails
        """
        context = self.context
        marginals = context.marginals if marginals is None else marginals
        logger.info("→ Selecting the σ-minimal optimal plan...")
        tight = tight_set(result.potential, context.cost_rows, marginals, context.tol_tight)
        selection = solve_secondary(tight, SecondaryCost.from_tight_set(tight), marginals, reference=result.plan)
        monotonicity = monotonicity_check(
            selection.plan,
            result.potential,
            context.cost_rows,
            sample_count=settings.QUADRUPLE_SAMPLES,
            tol_tight=context.tol_tight,
            seed=self.config.seed,
        )
        if strict and not monotonicity.passed:
            logger.error("Swap monotonicity failed on the selected plan")
            raise CertificationError("selected plan is not σ-monotone", report=monotonicity)
        result.tight, result.selection, result.monotonicity = tight, selection, monotonicity
        logger.info("✓ Transport solved")
        return result

    def rays(self, potential: DualPotential, solved: Optional[SolveResult] = None,
             epsilon: Optional[float] = None, marginals: Optional[Marginals] = None) -> RayResult:
        """Ray decomposition of `potential`; audited against the selection when one is given."""
        context = self.context
        epsilon = self.config.rays.epsilon if epsilon is None else epsilon
        graph = calibrated_edges(context.manifold, context.edge_costs, potential, context.tol_cal)
        decomposition = decompose(graph, epsilon)
        audit = None
        if solved is not None and solved.selection is not None:
            audit = ray_audits(
                decomposition,
                solved.selection.plan,
                potential,
                context.delta,
                marginals=context.marginals if marginals is None else marginals,
                tight=solved.tight,
            )
        return RayResult(decomposition, audit)
