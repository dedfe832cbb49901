"""
File outputs. CSV tables carry a leading '# config_digest=<digest>' line;
JSON documents carry the digest as a field.
"""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel

from src.exceptions import InvalidConfigError
from src.ot_solver.primary import DualPotential
from src.schemas import SelectionOutput

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def write_csv(frame: pd.DataFrame, path: Path, config_digest: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        handle.write(f"# config_digest={config_digest}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(model: BaseModel, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.model_dump_json(indent=2, by_alias=True))
    logger.info(f"Wrote {path}")
    return path


def read_csv(path: Path) -> Tuple[pd.DataFrame, Optional[str]]:
    """Table and the digest from its comment line (None when absent)."""
    path = Path(path)
    if not path.is_file():
        raise InvalidConfigError(f"file not found: {path}")
    digest = None
    with open(path) as handle:
        first = handle.readline().strip()
    if first.startswith("# config_digest="):
        digest = first.split("=", 1)[1]
    return pd.read_csv(path, comment="#"), digest


def potential_frame(potential: DualPotential) -> pd.DataFrame:
    return pd.DataFrame({"node": np.arange(potential.values.size), "u": potential.values})


def map_frame(mapping: Dict[int, int]) -> pd.DataFrame:
    items = sorted(mapping.items())
    return pd.DataFrame({
        "source": [s for s, _ in items],
        "target": [t for _, t in items],
    }, dtype=np.int64)


def load_potential(path: Path, n_nodes: int, anchor: Optional[int] = None) -> DualPotential:
    """Potential from a node,u CSV as written by `solve`."""
    frame, _ = read_csv(path)
    if not {"node", "u"}.issubset(frame.columns):
        raise InvalidConfigError(f"{path}: expected columns 'node,u'")
    values = np.zeros(n_nodes)
    nodes = frame["node"].to_numpy(dtype=np.int64)
    if nodes.size != n_nodes or np.any(np.sort(nodes) != np.arange(n_nodes)):
        raise InvalidConfigError(f"{path}: potential must list every node of the {n_nodes}-node manifold once")
    values[nodes] = frame["u"].to_numpy(dtype=float)
    if anchor is None:
        zeros = np.flatnonzero(values == 0.0)
        anchor = int(zeros[0]) if zeros.size else 0
    return DualPotential(values, anchor)


def load_selection(path: Path) -> SelectionOutput:
    """Re-read a `solve` JSON document."""
    path = Path(path)
    if not path.is_file():
        raise InvalidConfigError(f"file not found: {path}")
    try:
        return SelectionOutput.model_validate(json.loads(path.read_text()))
    except (ValueError, TypeError) as exc:
        raise InvalidConfigError(f"{path} is not a selection document: {exc}") from exc
