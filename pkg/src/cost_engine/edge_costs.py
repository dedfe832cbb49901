"""
Per-edge action costs.

For a Finsler metric the edge weight is the length ‖d‖ₓ of the displacement
measured at the source node. For a Lagrangian the weight is the free-time
action  w = min_{t>0} t·(L(x, d/t) + k).  The derivative of the objective
in t is k − E(x, d/t), so the optimal time is the root of the energy
equation E(x, d/t*) = k.
"""

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.optimize import brentq, minimize

from src.exceptions import SubcriticalError
from src.geometry.lagrangian import FLOOR_SAFETY, Lagrangian
from src.geometry.manifold import DiscreteManifold
from src.geometry.metric import FinslerMetric

logger = logging.getLogger(__name__)

V_MAX = 1e6
V_MIN = 1e-6
TIME_RTOL = 1e-12


@dataclass(frozen=True)
class EdgeCost:
    edge: int
    weight: float
    time: float
    energy_residual: float


@dataclass(frozen=True)
class EdgeCostTable:
    """Weights, optimal times and energy residuals for every edge of a manifold."""
    weights: np.ndarray
    times: np.ndarray
    energy_residuals: np.ndarray
    delta: float
    model_digest: str

    def __post_init__(self):
        for name in ("weights", "times", "energy_residuals"):
            getattr(self, name).setflags(write=False)

    def __getitem__(self, edge: int) -> EdgeCost:
        return EdgeCost(int(edge), float(self.weights[edge]), float(self.times[edge]),
                        float(self.energy_residuals[edge]))

    def __len__(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class CostModel:
    """Either a Finsler metric or a Lagrangian with its shift k."""
    kind: Literal["finsler", "lagrangian"]
    metric: Optional[FinslerMetric] = None
    lagrangian: Optional[Lagrangian] = None

    @classmethod
    def from_metric(cls, metric: FinslerMetric) -> "CostModel":
        return cls("finsler", metric=metric)

    @classmethod
    def from_lagrangian(cls, lagrangian: Lagrangian) -> "CostModel":
        return cls("lagrangian", lagrangian=lagrangian)

    def floor(self) -> float:
        """Positive floor δ of the action rate along minimizers."""
        if self.kind == "finsler":
            # unit-speed parametrization: the action rate is identically 1
            return FLOOR_SAFETY * 1.0
        return self.lagrangian.floor()

    def digest(self) -> str:
        hasher = hashlib.sha256()
        hasher.update(self.kind.encode())
        if self.kind == "finsler":
            metric = self.metric
        else:
            lag = self.lagrangian
            hasher.update(json.dumps({"variant": lag.variant, "k": lag.k}).encode())
            metric = lag.metric
            if lag.variant == "quadratic":
                hasher.update(np.ascontiguousarray(lag.G).tobytes())
                hasher.update(np.ascontiguousarray(lag.V).tobytes())
        if metric is not None:
            hasher.update(metric.variant.encode())
            hasher.update(np.ascontiguousarray(metric.G).tobytes())
            hasher.update(np.ascontiguousarray(metric.omega).tobytes())
        return hasher.hexdigest()[:16]


def edge_weight_finsler(manifold: DiscreteManifold, metric: FinslerMetric, edge: int) -> EdgeCost:
    """w = ‖d‖ₓ at the source node; unit speed so t* = w."""
    x = int(manifold.tails[edge])
    metric.check_node(x)
    weight = float(metric.norms(np.asarray(x), manifold.displacements[edge]))
    return EdgeCost(edge=int(edge), weight=weight, time=weight, energy_residual=0.0)


def _objective(lagrangian: Lagrangian, x: int, d: np.ndarray, t: float) -> float:
    return t * (lagrangian.value(x, d / t) + lagrangian.k)


def edge_weight_lagrangian(lagrangian: Lagrangian,
                           manifold: DiscreteManifold,
                           edge: int,
                           rtol: float = TIME_RTOL) -> EdgeCost:
    """
    Free-time action of the straight segment along one edge.

    The stationarity function g(t) = k − E(x, d/t) is increasing in t for a
    Tonelli Lagrangian. Its root is bracketed by geometric expansion inside
    [|d|/v_max, |d|/v_min] and located with brentq.

    Raises:
        SubcriticalError: if g stays negative up to t_max, i.e. the action
            keeps decreasing as the traversal slows down
    """
    x = int(manifold.tails[edge])
    d = np.asarray(manifold.displacements[edge], dtype=float)
    k = lagrangian.k
    length = float(manifold.lengths[edge])
    t_min, t_max = length / V_MAX, length / V_MIN

    def g(t: float) -> float:
        return k - lagrangian.energy_along(x, d, t)

    lo = hi = length
    g_lo = g_hi = g(length)
    while g_lo > 0.0 and lo > t_min:
        hi, g_hi = lo, g_lo
        lo = max(lo / 4.0, t_min)
        g_lo = g(lo)
    while g_hi < 0.0 and hi < t_max:
        lo, g_lo = hi, g_hi
        hi = min(hi * 4.0, t_max)
        g_hi = g(hi)

    if g_hi < 0.0:
        samples = [[t, _objective(lagrangian, x, d, t)] for t in np.geomspace(length, t_max, 5)]
        raise SubcriticalError(
            f"edge {edge}: action keeps decreasing as t -> ∞ (k={k:.6g} is subcritical along this edge)",
            edge=int(edge),
            samples=samples,
        )
    if g_lo > 0.0:
        t_star = lo
    elif g_lo == 0.0:
        t_star = lo
    elif g_hi == 0.0:
        t_star = hi
    else:
        t_star = brentq(g, lo, hi, xtol=1e-300, rtol=max(rtol, 4.0 * np.finfo(float).eps), maxiter=500)

    weight = _objective(lagrangian, x, d, t_star)
    residual = abs(lagrangian.energy_along(x, d, t_star) - k)
    return EdgeCost(edge=int(edge), weight=float(weight), time=float(t_star), energy_residual=float(residual))


def edge_cost_table(manifold: DiscreteManifold, model: CostModel, rtol: float = TIME_RTOL) -> EdgeCostTable:
    """Evaluate every edge of the manifold under the cost model."""
    m = manifold.n_edges
    weights = np.empty(m)
    times = np.empty(m)
    residuals = np.zeros(m)

    if model.kind == "finsler":
        metric = model.metric
        for x in np.unique(manifold.tails):
            metric.check_node(int(x))
        weights[:] = metric.norms(manifold.tails, manifold.displacements)
        times[:] = weights
    else:
        for edge in range(m):
            cost = edge_weight_lagrangian(model.lagrangian, manifold, edge, rtol)
            weights[edge] = cost.weight
            times[edge] = cost.time
            residuals[edge] = cost.energy_residual

    table = EdgeCostTable(weights, times, residuals, delta=model.floor(), model_digest=model.digest())
    logger.info(
        f"Edge costs ({model.kind}): min w={weights.min():.6g}, max w={weights.max():.6g}, "
        f"max energy residual={residuals.max():.3g}"
    )
    return table


def energy(lagrangian: Lagrangian, x: int, v) -> float:
    """E(x,v) = ∂ᵥL·v − L (of L itself, without the shift)."""
    v = np.asarray(v, dtype=float)
    return float(lagrangian.velocity_gradient(x, v) @ v) - lagrangian.value(x, v)


def energy_finite_difference(lagrangian: Lagrangian, x: int, v, step: float = 1e-6) -> float:
    """Same quantity with ∂ᵥL from central differences."""
    v = np.asarray(v, dtype=float)
    grad = np.empty(2)
    for i in range(2):
        e = np.zeros(2)
        e[i] = step
        grad[i] = (lagrangian.value(x, v + e) - lagrangian.value(x, v - e)) / (2.0 * step)
    return float(grad @ v) - lagrangian.value(x, v)


def hamiltonian(lagrangian: Lagrangian, x: int, p) -> float:
    """
    H(x,p) = max_v p·v − L(x,v).

    Closed form for the quadratic family; bounded concave maximization for L̃.
    """
    p = np.asarray(p, dtype=float)
    if lagrangian.variant == "quadratic":
        return 0.5 * float(p @ np.linalg.solve(lagrangian.G[x], p)) - float(lagrangian.V[x])

    G = lagrangian.metric.G[x]
    v0 = np.linalg.solve(G, p)
    radius = 10.0 * (1.0 + float(np.linalg.norm(v0)))

    def negative(v):
        return lagrangian.value(x, v) - float(p @ v)

    def negative_grad(v):
        return lagrangian.velocity_gradient(x, v) - p

    result = minimize(
        negative,
        v0,
        jac=negative_grad,
        method="L-BFGS-B",
        bounds=[(-radius, radius)] * 2,
        options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 1000},
    )
    return -float(result.fun)
