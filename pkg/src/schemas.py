"""
Data schemas for the Monge solver outputs and audit reports
"""

from typing import Any, Dict, List, Optional
from pydantic import BaseModel, ConfigDict, Field


class MetricAuditReport(BaseModel):
    """Worst residuals of the Finsler axioms over random samples."""
    variant: str
    samples: int
    positivity_min: float = Field(description="min over samples of ‖v‖ₓ / |v|")
    positivity_violation: float = Field(description="max(0, -positivity_min)")
    homogeneity_violation: float = Field(description="max relative |‖λv‖ − λ‖v‖|")
    convexity_violation: float = Field(description="max of ‖(v+w)/2‖ − (‖v‖+‖w‖)/2, clipped at 0")
    symmetric_sum_violation: float = Field(
        description="max of 2·sqrt(vᵀGv) − (‖v‖ + ‖−v‖), clipped at 0 (drift cancels in the sum)"
    )
    max_drift_norm: float
    near_degenerate: bool
    positive: bool

    @property
    def passed(self) -> bool:
        return self.positive and self.homogeneity_violation <= 1e-12 and self.convexity_violation <= 1e-12


class LagrangianAuditReport(BaseModel):
    variant: str
    k: float
    samples: int
    min_second_difference: float
    strictly_convex: bool
    superlinear: bool
    floor: float = Field(description="Estimated δ (10% safety factor applied)")
    positive_floor: bool

    @property
    def passed(self) -> bool:
        return self.strictly_convex and self.superlinear and self.positive_floor


class MetricAxiomReport(BaseModel):
    """Triangle inequality, zero diagonal and pair-sum positivity of sampled costs."""
    triples: int
    max_triangle_violation: float
    max_diagonal: float
    min_pair_sum: float

    @property
    def passed(self) -> bool:
        return self.max_triangle_violation <= 1e-9 and self.max_diagonal == 0.0 and self.min_pair_sum > 0.0


class CostModelComparison(BaseModel):
    """Discrete check of c ≤ c^L ≤ c^{L̃} collapsing to equality."""
    edges: int
    max_edge_difference: float
    sources: int
    max_row_difference: float


class CertificateModel(BaseModel):
    kind: str = Field(description="'positive', 'subcritical-edge' or 'nonpositive-cycle'")
    k: float
    edge: Optional[int] = None
    cycle: List[int] = Field(default_factory=list, description="Edge ids of the cycle")
    total_weight: Optional[float] = None
    min_weight: Optional[float] = None
    samples: List[List[float]] = Field(default_factory=list, description="(t, objective) pairs")


class CriticalValueOutput(BaseModel):
    config_digest: str = ""
    k_lo: float
    k_hi: float
    estimate: float
    iterations: int
    below: CertificateModel
    above: CertificateModel


class OptimalityCertificate(BaseModel):
    """Dual feasibility, complementary slackness and duality gap of a plan/potential pair."""
    pairs_checked: int
    max_feasibility_violation: float
    max_edge_feasibility_violation: Optional[float] = None
    max_slackness_residual: float
    primal_value: float
    dual_value: float
    duality_gap: float
    tolerance: float = 1e-9

    @property
    def passed(self) -> bool:
        return (
            self.max_feasibility_violation <= self.tolerance
            and self.max_slackness_residual <= self.tolerance
            and abs(self.duality_gap) <= 1e-8 * (1.0 + abs(self.primal_value))
        )


class MonotonicityReport(BaseModel):
    """Pairwise swap test on the support of a plan."""
    quadruples_checked: int
    applicable: int
    min_increment: Optional[float] = None
    min_factored: Optional[float] = Field(default=None, description="min of (h(t)−h(t′))(h(s)−h(s′))")
    negative_count: int = 0
    tolerance: float = 1e-9

    @property
    def passed(self) -> bool:
        return self.min_increment is None or self.min_increment >= -self.tolerance


class RayAuditReport(BaseModel):
    calibrated_edges: int
    delta: float
    min_speed: Optional[float] = Field(default=None, description="min (u(y)−u(x))/t* over calibrated edges")
    order_pairs_checked: int = 0
    order_violations: int = 0
    min_factored: Optional[float] = None
    lambda_per_chain: List[int] = Field(default_factory=list)
    lambda_outside_T: List[int] = Field(default_factory=list)
    unconnected_support_pairs: int = 0
    tight_ray_mismatches: Optional[int] = None
    alpha_beta_violation: float = 0.0
    alpha_beta_bound: float = 0.0
    alpha_beta_max: float = 0.0

    @property
    def speed_ok(self) -> bool:
        return self.min_speed is None or self.min_speed >= self.delta - 1e-9

    @property
    def passed(self) -> bool:
        return (
            self.speed_ok
            and self.order_violations == 0
            and not self.lambda_outside_T
            and self.unconnected_support_pairs == 0
            and not self.tight_ray_mismatches
            and self.alpha_beta_violation <= 1e-9
            and self.alpha_beta_max <= self.alpha_beta_bound + 1e-9
        )


class PlanEntryModel(BaseModel):
    i: int
    j: int
    mass: float


class MapEntryModel(BaseModel):
    source: int
    target: int


class PrimaryOutput(BaseModel):
    """Stage-1 artifact (cost-optimal plan with its Kantorovich potential)."""
    config_digest: str = ""
    primary_cost: float
    dual_value: float
    plan: List[PlanEntryModel]
    certificate: OptimalityCertificate


class SelectionOutput(BaseModel):
    """Stage-2 artifact: the σ-minimal plan among cost-optimal plans and the induced map."""
    model_config = ConfigDict(
        populate_by_name=True,
        json_schema_extra={
            "example": {
                "pairs": [{"i": 0, "j": 2, "mass": 0.5}, {"i": 1, "j": 3, "mass": 0.5}],
                "primary_cost": 2.0,
                "secondary_cost": 4.0,
                "map": [{"source": 0, "target": 2}, {"source": 1, "target": 3}],
                "lambda": [],
                "lambda_mass": 0.0,
                "support_size": 2,
                "support_bound": 3,
                "degeneracy": 1,
            }
        },
    )

    config_digest: str = ""
    pairs: List[PlanEntryModel]
    primary_cost: float
    secondary_cost: float
    map: List[MapEntryModel]
    lambda_nodes: List[int] = Field(alias="lambda", description="Sources with two or more targets")
    lambda_mass: float
    support_size: int
    support_bound: int = Field(description="|supp μ₀| + |supp μ₁| − 1")
    degeneracy: int = Field(description="support_bound − support_size, the reported tie measure")
    monotonicity: Optional[MonotonicityReport] = None


class RaysOutput(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    config_digest: str = ""
    epsilon: float
    alpha: List[float]
    beta: List[float]
    T: List[int]
    T_eps: List[int]
    ends: List[int]
    chains: List[List[int]]
    audit: Optional[RayAuditReport] = None


class OracleVerdict(BaseModel):
    seed: int
    n: int
    mode: str
    passed: bool
    oracle_primary: float
    oracle_secondary: float
    solver_primary: float
    solver_secondary: float
    unique: bool
    support_match: Optional[bool] = None
    reason: str = ""


class OracleSummary(BaseModel):
    n: int
    mode: str
    seeds: int
    passed: int
    all_passed: bool


class VerificationCheck(BaseModel):
    """One named acceptance check."""
    name: str
    status: str = Field(description="'pass' or 'fail'")
    residual: Optional[float] = None
    threshold: Optional[float] = None
    wall_time: float = 0.0
    detail: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "pass"


class VerificationReport(BaseModel):
    config_digest: str = ""
    seed: int = 0
    checks: List[VerificationCheck] = Field(default_factory=list)
    refinement: List[Dict[str, float]] = Field(default_factory=list)
    statement: str = ""

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def numeric_fields(self) -> List[Any]:
        """Residuals and thresholds only; wall times vary between reruns."""
        return [(c.name, c.status, c.residual, c.threshold) for c in self.checks]
