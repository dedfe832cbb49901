"""
Run configuration and the run context.

A run is described by a TOML file. `RunConfig` validates it, and
`MongeContext` builds and holds every service a run needs (manifold, cost
model, edge costs, marginals, cost rows). The CLI and the tests share it so
every entry point builds the same objects from the same file.
"""

import hashlib
import json
import logging
from functools import cached_property
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict, TomlConfigSettingsSource

from config.settings import settings
from src.cost_engine import CostModel, CostRowProvider, EdgeCostTable, edge_cost_table
from src.exceptions import InvalidConfigError
from src.geometry import DiscreteManifold, FinslerMetric, Lagrangian, build_torus_grid, load_graph, swirl_drift
from src.ot_solver import Marginals, atoms, gaussian_bump, load_masses, make_marginals, uniform_density
from src.ot_solver.certificates import default_tol_tight

logger = logging.getLogger(__name__)


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class ManifoldSpec(_Block):
    type: Literal["torus2d", "graph"] = "torus2d"
    n: int = Field(default=32, ge=2, description="Side count of the torus grid")
    stencil: Literal[8, 16] = 16
    path: Optional[Path] = Field(default=None, description="Graph file for type = 'graph'")


class MetricSpec(_Block):
    type: Literal["euclidean", "riemannian", "randers"] = "euclidean"
    G: Optional[List] = Field(default=None, description="2x2 matrix or one 2x2 matrix per node")
    omega: Optional[List] = Field(default=None, description="Drift covector, constant or per node")
    swirl: float = Field(default=0.0, ge=0.0, description="Amplitude of an added periodic drift field")


class LagrangianSpec(_Block):
    type: Literal["tilde", "quadratic"] = "tilde"
    k: float = 0.0
    V: Union[float, List[float]] = 0.0
    G: Optional[List] = None


class CostSpec(_Block):
    model: Literal["finsler", "lagrangian"] = "finsler"


class DensitySpec(_Block):
    type: Literal["gaussian", "uniform", "file", "atoms"] = "gaussian"
    center: List[float] = Field(default_factory=lambda: [0.5, 0.5])
    width: float = Field(default=0.1, gt=0.0)
    path: Optional[Path] = None
    nodes: List[int] = Field(default_factory=list)
    masses: Optional[List[float]] = None


class MarginalSpec(_Block):
    mu0: DensitySpec = Field(default_factory=lambda: DensitySpec(center=[0.3, 0.3]))
    mu1: DensitySpec = Field(default_factory=lambda: DensitySpec(center=[0.7, 0.6]))
    absolutely_continuous: bool = False


class ToleranceSpec(_Block):
    tol_tight: Optional[float] = Field(default=None, gt=0.0, description="Defaults to 1e-9·(1 + max w)")
    tol_cal: Optional[float] = Field(default=None, gt=0.0, description="Defaults to 2·tol_tight")
    solver: float = Field(default=1e-12, gt=0.0, description="Relative tolerance of the 1-D time solve")
    k0: float = Field(default=1e-6, gt=0.0, description="Width of the critical value bracket")
    energy: float = Field(default=1e-6, gt=0.0, description="Accepted |E(x, d/t*) − k|")


class CriticalSpec(_Block):
    k_lo: float = -2.0
    k_hi: float = 1.0


class RaySpec(_Block):
    epsilon: float = Field(default=0.05, ge=0.0)


class OutputSpec(_Block):
    dir: Optional[Path] = Field(default=None, description="Output directory; MONGE_OUT_DIR when unset")


class RunConfig(BaseSettings):
    """
    One run, loaded from TOML.

    Only init values are read: a run must not depend on the environment,
    so that the same file and seed reproduce the same outputs.
    """
    model_config = SettingsConfigDict(extra="forbid")

    seed: int = 0
    manifold: ManifoldSpec = Field(default_factory=ManifoldSpec)
    metric: MetricSpec = Field(default_factory=MetricSpec)
    lagrangian: LagrangianSpec = Field(default_factory=LagrangianSpec)
    cost: CostSpec = Field(default_factory=CostSpec)
    marginals: MarginalSpec = Field(default_factory=MarginalSpec)
    tolerances: ToleranceSpec = Field(default_factory=ToleranceSpec)
    critical: CriticalSpec = Field(default_factory=CriticalSpec)
    rays: RaySpec = Field(default_factory=RaySpec)
    output: OutputSpec = Field(default_factory=OutputSpec)

    @classmethod
    def settings_customise_sources(cls, settings_cls, init_settings, env_settings, dotenv_settings,
                                   file_secret_settings):
        return (init_settings,)

    @field_validator("seed")
    @classmethod
    def _seed_nonnegative(cls, value: int) -> int:
        if value < 0:
            raise ValueError("seed must be nonnegative")
        return value

    def digest(self) -> str:
        """SHA-256 of the canonical JSON dump (first 16 hex digits)."""
        canonical = json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:16]

    def with_overrides(self, seed: Optional[int] = None, out_dir: Optional[Path] = None) -> "RunConfig":
        data = self.model_dump()
        if seed is not None:
            data["seed"] = seed
        if out_dir is not None:
            data["output"]["dir"] = out_dir
        return build_run_config(data)

    @property
    def out_dir(self) -> Path:
        return Path(self.output.dir) if self.output.dir else settings.OUT_DIR


def build_run_config(data: dict) -> RunConfig:
    try:
        return RunConfig(**data)
    except ValidationError as exc:
        raise InvalidConfigError(f"invalid run configuration: {exc}") from exc


def load_run_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Read and validate a TOML run file (settings.DEFAULT_CONFIG when omitted).

    Raises:
        InvalidConfigError: missing file, TOML syntax or validation errors
    """
    path = Path(path) if path else settings.DEFAULT_CONFIG
    if not path.is_file():
        raise InvalidConfigError(f"config file not found: {path}")
    try:
        data = TomlConfigSettingsSource(RunConfig, toml_file=path)()
    except Exception as exc:
        raise InvalidConfigError(f"cannot parse {path}: {exc}") from exc
    config = build_run_config(data)
    _resolve_paths(config, path.parent)
    logger.info(f"Loaded run config {path} (digest {config.digest()})")
    return config


def _resolve_paths(config: RunConfig, base: Path) -> None:
    """Make referenced files relative to the config file and check they exist."""
    referenced = [(config.manifold, "path"), (config.marginals.mu0, "path"), (config.marginals.mu1, "path")]
    for block, name in referenced:
        value = getattr(block, name)
        if value is None:
            continue
        resolved = value if value.is_absolute() else base / value
        if not resolved.exists():
            raise InvalidConfigError(f"referenced file not found: {resolved}")
        setattr(block, name, resolved)


class MongeContext:
    """
    Builds and holds all services of one run.

    Cheap objects are built on construction; edge costs, marginals and cost
    rows are built on first use.
    """

    def __init__(self, config: RunConfig, threads: Optional[int] = None, show_progress: Optional[bool] = None):
        self.config = config
        self.digest = config.digest()
        self.threads = threads or settings.THREADS
        self.show_progress = settings.SHOW_PROGRESS if show_progress is None else show_progress

        logger.info("→ Building manifold and cost model...")
        self.manifold = self._build_manifold()
        self.metric = self._build_metric()
        self.lagrangian = self._build_lagrangian()
        self.cost_model = (
            CostModel.from_metric(self.metric)
            if config.cost.model == "finsler"
            else CostModel.from_lagrangian(self.lagrangian)
        )
        logger.info(
            f"✓ {self.manifold.topology} with {self.manifold.n_nodes} nodes / {self.manifold.n_edges} edges, "
            f"{config.cost.model} cost"
        )

    def _build_manifold(self) -> DiscreteManifold:
        spec = self.config.manifold
        if spec.type == "torus2d":
            return build_torus_grid(spec.n, spec.stencil)
        if spec.path is None:
            raise InvalidConfigError("manifold.type = 'graph' needs manifold.path")
        return load_graph(spec.path)

    def _build_metric(self) -> FinslerMetric:
        spec = self.config.metric
        n = self.manifold.n_nodes
        if spec.type == "euclidean":
            return FinslerMetric.euclidean(n)
        if spec.type == "riemannian":
            return FinslerMetric.riemannian(spec.G, n)
        omega = np.zeros((n, 2)) if spec.omega is None else np.broadcast_to(np.asarray(spec.omega, dtype=float), (n, 2))
        if spec.swirl > 0.0:
            omega = omega + swirl_drift(self.manifold.positions, spec.swirl)
        return FinslerMetric.randers(spec.G, omega, n)

    def _build_lagrangian(self) -> Lagrangian:
        spec = self.config.lagrangian
        if spec.type == "tilde":
            return Lagrangian.tilde(self.metric, k=spec.k)
        return Lagrangian.quadratic(self.manifold.n_nodes, G=spec.G, V=spec.V, k=spec.k)

    @cached_property
    def edge_costs(self) -> EdgeCostTable:
        return edge_cost_table(self.manifold, self.cost_model, rtol=self.config.tolerances.solver)

    @cached_property
    def cost_rows(self) -> CostRowProvider:
        return CostRowProvider(
            self.manifold, self.edge_costs, threads=self.threads, show_progress=self.show_progress
        )

    def _density(self, spec: DensitySpec) -> np.ndarray:
        if spec.type == "gaussian":
            return gaussian_bump(self.manifold, spec.center, spec.width)
        if spec.type == "uniform":
            return uniform_density(self.manifold)
        if spec.type == "file":
            if spec.path is None:
                raise InvalidConfigError("density type 'file' needs a path")
            return load_masses(spec.path, self.manifold.n_nodes)
        return atoms(self.manifold.n_nodes, spec.nodes, spec.masses)

    @cached_property
    def marginals(self) -> Marginals:
        spec = self.config.marginals
        return make_marginals(self._density(spec.mu0), self._density(spec.mu1), spec.absolutely_continuous)

    @property
    def tol_tight(self) -> float:
        return self.config.tolerances.tol_tight or default_tol_tight(self.edge_costs.weights)

    @property
    def tol_cal(self) -> float:
        return self.config.tolerances.tol_cal or 2.0 * self.tol_tight

    @property
    def delta(self) -> float:
        return self.edge_costs.delta

    @property
    def out_dir(self) -> Path:
        return settings.ensure_out_dir(self.config.out_dir)
