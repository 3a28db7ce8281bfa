"""PNG heat maps of branch loading and commitment schedules (optional, needs matplotlib)."""

from pathlib import Path
from typing import Any, List, Mapping, Sequence

import numpy as np
import pandas as pd

from builder import Solution
from logging_config import get_logger

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:  # pragma: no cover
    plt = None

logger = get_logger("plotting")


def plotting_available() -> bool:
    return plt is not None


def plot_branch_loading(rows: Sequence[Mapping[str, Any]], out_dir: Path, scenario: int = 0) -> List[Path]:
    """
    One heat map per variant of |flow| / limit over (branch, hour).

    Args:
        rows: Long-format branch-loading rows
        out_dir: Directory for ``loading_<variant>_s<scenario>.png``
        scenario: Scenario index to draw
    """
    if plt is None:
        logger.warning("matplotlib is not installed; skipping branch-loading plots")
        return []
    frame = pd.DataFrame(list(rows))
    if frame.empty:
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for variant, group in frame[frame["scenario"] == scenario].groupby("variant", sort=False):
        grid = group.pivot_table(index="branch", columns="hour", values="loading_fraction", sort=False)
        fig, ax = plt.subplots(figsize=(10, max(3.0, 0.22 * len(grid.index))))
        image = ax.imshow(grid.to_numpy(), aspect="auto", cmap="RdYlGn_r", vmin=0.0, vmax=1.0,
                          interpolation="nearest")
        ax.set_yticks(range(len(grid.index)))
        ax.set_yticklabels(grid.index, fontsize=7)
        ax.set_xlabel("hour")
        ax.set_ylabel("branch")
        ax.set_title(f"{variant}: branch loading, scenario {scenario}")
        fig.colorbar(image, ax=ax, label="|flow| / limit")
        path = out_dir / f"loading_{variant}_s{scenario}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written


def plot_commitment(solutions: Mapping[str, Solution], out_dir: Path) -> List[Path]:
    """On/off schedule (units by hours) of each solved variant."""
    if plt is None:
        logger.warning("matplotlib is not installed; skipping commitment plots")
        return []
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for label, sol in solutions.items():
        if not sol.is_feasible or not sol.gen_ids:
            continue
        fig, ax = plt.subplots(figsize=(10, max(2.0, 0.3 * len(sol.gen_ids))))
        ax.imshow(np.rint(np.asarray(sol.commitment)), aspect="auto", cmap="Greys", vmin=0, vmax=1,
                  interpolation="nearest")
        ax.set_yticks(range(len(sol.gen_ids)))
        ax.set_yticklabels(sol.gen_ids, fontsize=7)
        ax.set_xlabel("hour")
        ax.set_title(f"{label}: commitment")
        path = out_dir / f"commitment_{label}.png"
        fig.savefig(path, dpi=150, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written
