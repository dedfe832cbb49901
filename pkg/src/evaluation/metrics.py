"""
Grid-refinement trends of the selected plan and the ray ends.

The measure-zero statements about Λ and the ray ends have no finite-grid
counterpart; this module only tabulates how Λ-mass and |E|·h² move as the
torus is refined.
"""

from typing import Dict, List, Optional, Sequence
import logging

import pandas as pd
from tqdm import tqdm

from config.settings import settings

logger = logging.getLogger(__name__)

TREND_COLUMNS = [
    "n",
    "nodes",
    "primary_cost",
    "support_size",
    "support_bound",
    "degeneracy",
    "lambda_count",
    "lambda_mass",
    "ends",
    "ends_volume",
    "T",
    "T_eps",
]


def refinement_row(workflow) -> Dict[str, float]:
    """Solve and decompose one configured run; returns one table row."""
    context = workflow.context
    solved = workflow.solve()
    rays = workflow.rays(solved.potential, solved)
    selection = solved.selection
    decomposition = rays.decomposition
    return {
        "n": context.config.manifold.n,
        "nodes": context.manifold.n_nodes,
        "primary_cost": selection.primary_cost,
        "support_size": selection.support_size,
        "support_bound": selection.support_bound,
        "degeneracy": selection.degeneracy,
        "lambda_count": len(selection.lambda_nodes),
        "lambda_mass": selection.lambda_mass,
        "ends": int(decomposition.ends.size),
        "ends_volume": decomposition.ends.size * context.manifold.cell_volume,
        "T": int(decomposition.T.size),
        "T_eps": int(decomposition.T_eps.size),
    }


def refinement_trend(config,
                     sides: Optional[Sequence[int]] = None,
                     threads: Optional[int] = None,
                     show_progress: bool = False) -> pd.DataFrame:
    """
    Run the full pipeline on successively finer tori.

    Args:
        config: RunConfig whose manifold must be a torus; only manifold.n changes
        sides: Side counts to run (settings.REFINEMENT_SIDES by default)
        threads: Workers for cost rows
        show_progress: Show a progress bar over the sides

    Returns:
        DataFrame with one row per side count, sorted by n
    """
    # late import: src.workflow pulls in every solver module
    from src.config import MongeContext, build_run_config
    from src.workflow import MongeWorkflow

    sides = sorted(int(side) for side in (sides or settings.REFINEMENT_SIDES))
    if config.manifold.type != "torus2d":
        logger.warning("⚠️ Refinement trend needs a torus manifold; skipping")
        return pd.DataFrame(columns=TREND_COLUMNS)

    rows: List[Dict[str, float]] = []
    iterator = tqdm(sides, desc="Refinement") if show_progress else sides
    for side in iterator:
        data = config.model_dump()
        data["manifold"]["n"] = side
        logger.info(f"→ Refinement run at n={side}")
        context = MongeContext(build_run_config(data), threads=threads, show_progress=False)
        rows.append(refinement_row(MongeWorkflow(context)))

    frame = pd.DataFrame(rows, columns=TREND_COLUMNS)
    logger.info(
        "Refinement trend:\n"
        f"{frame[['n', 'lambda_mass', 'ends_volume', 'degeneracy']].to_string(index=False)}"
    )
    return frame


def trend_summary(frame: pd.DataFrame) -> Dict[str, float]:
    """Ratios between the finest and coarsest runs (reported, never asserted)."""
    if len(frame) < 2:
        return {}
    first, last = frame.iloc[0], frame.iloc[-1]

    def ratio(column: str) -> float:
        return float(last[column] / first[column]) if first[column] > 0 else float("nan")

    return {
        "lambda_mass_ratio": ratio("lambda_mass"),
        "ends_volume_ratio": ratio("ends_volume"),
    }
