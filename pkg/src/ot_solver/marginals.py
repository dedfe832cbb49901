"""
Source and target measures on the nodes of a discrete manifold.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.exceptions import InvalidConfigError, MarginalError
from src.geometry.manifold import DiscreteManifold

logger = logging.getLogger(__name__)

MASS_TOL = 1e-12
DENSITY_FLOOR = 1e-9  # added before normalization when μ₀ must charge every node


@dataclass(frozen=True)
class Marginals:
    """Probability vectors μ₀ (sources) and μ₁ (targets) indexed by node."""
    mu0: np.ndarray
    mu1: np.ndarray

    def __post_init__(self):
        mu0 = np.array(self.mu0, dtype=float, copy=True)
        mu1 = np.array(self.mu1, dtype=float, copy=True)
        if mu0.ndim != 1 or mu0.shape != mu1.shape:
            raise MarginalError(f"marginals must be vectors of equal length, got {mu0.shape} and {mu1.shape}")
        if not (np.all(np.isfinite(mu0)) and np.all(np.isfinite(mu1))):
            raise MarginalError("marginals contain non-finite masses")
        if mu0.min() < 0.0 or mu1.min() < 0.0:
            raise MarginalError("marginals must be nonnegative")
        total0, total1 = float(mu0.sum()), float(mu1.sum())
        if abs(total0 - total1) > MASS_TOL:
            raise MarginalError(f"unequal total masses {total0:.17g} and {total1:.17g}")
        if abs(total0 - 1.0) > MASS_TOL:
            raise MarginalError(f"marginals must be probability vectors, total mass {total0:.17g}")
        mu0.setflags(write=False)
        mu1.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "mu1", mu1)

    @classmethod
    def normalized(cls, mu0, mu1) -> "Marginals":
        """Rescale two nonnegative mass vectors to probability vectors."""
        mu0 = np.asarray(mu0, dtype=float)
        mu1 = np.asarray(mu1, dtype=float)
        if mu0.sum() <= 0.0 or mu1.sum() <= 0.0:
            raise MarginalError("cannot normalize a measure with zero total mass")
        return cls(mu0 / mu0.sum(), mu1 / mu1.sum())

    @property
    def n_nodes(self) -> int:
        return int(self.mu0.shape[0])

    @property
    def support0(self) -> np.ndarray:
        return np.flatnonzero(self.mu0 > 0.0)

    @property
    def support1(self) -> np.ndarray:
        return np.flatnonzero(self.mu1 > 0.0)

    @property
    def support_bound(self) -> int:
        """Entry bound |supp μ₀| + |supp μ₁| − 1 of a vertex plan."""
        return int(self.support0.size + self.support1.size - 1)

    @property
    def absolutely_continuous(self) -> bool:
        return bool(np.all(self.mu0 > 0.0))


def gaussian_bump(manifold: DiscreteManifold, center: Sequence[float], width: float) -> np.ndarray:
    """Unnormalized periodic Gaussian density sampled at the nodes."""
    if width <= 0.0:
        raise InvalidConfigError(f"gaussian width must be positive, got {width}")
    delta = manifold.positions - np.asarray(center, dtype=float)
    if manifold.topology == "torus2d":
        delta = delta - np.round(delta)
    return np.exp(-0.5 * np.sum(delta * delta, axis=1) / width ** 2)


def uniform_density(manifold: DiscreteManifold) -> np.ndarray:
    return np.ones(manifold.n_nodes)


def atoms(n_nodes: int, nodes: Sequence[int], masses: Optional[Sequence[float]] = None) -> np.ndarray:
    """Point masses at `nodes`, equal unless `masses` is given."""
    out = np.zeros(n_nodes)
    nodes = np.asarray(nodes, dtype=np.int64)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= n_nodes):
        raise InvalidConfigError(f"atom nodes must lie in [0, {n_nodes})")
    values = np.full(nodes.size, 1.0 / max(nodes.size, 1)) if masses is None else np.asarray(masses, dtype=float)
    np.add.at(out, nodes, values)
    return out


def load_masses(path: Union[str, Path], n_nodes: int) -> np.ndarray:
    """
    Node masses from a CSV file with columns node,mass (lines starting with # are skipped).

    Nodes missing from the file carry no mass.
    """
    path = Path(path)
    if not path.exists():
        raise InvalidConfigError(f"marginal file not found: {path}")
    frame = pd.read_csv(path, comment="#")
    if not {"node", "mass"}.issubset(frame.columns):
        raise InvalidConfigError(f"{path}: expected columns 'node,mass', got {list(frame.columns)}")
    nodes = frame["node"].to_numpy(dtype=np.int64)
    if nodes.size and (nodes.min() < 0 or nodes.max() >= n_nodes):
        raise InvalidConfigError(f"{path}: node index outside [0, {n_nodes})")
    out = np.zeros(n_nodes)
    np.add.at(out, nodes, frame["mass"].to_numpy(dtype=float))
    return out


def make_marginals(mu0, mu1, absolutely_continuous: bool = False) -> Marginals:
    """
    Normalize sampled densities into Marginals.

    With `absolutely_continuous`, μ₀ is lifted by DENSITY_FLOOR at every node
    before normalization so that it charges the whole space.
    """
    mu0 = np.asarray(mu0, dtype=float)
    if absolutely_continuous:
        mu0 = mu0 + DENSITY_FLOOR
    marginals = Marginals.normalized(mu0, mu1)
    logger.info(
        f"Marginals: |supp μ0|={marginals.support0.size}, |supp μ1|={marginals.support1.size}, "
        f"absolutely continuous={marginals.absolutely_continuous}"
    )
    return marginals
