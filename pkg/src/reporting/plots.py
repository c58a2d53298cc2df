"""
Static SVG convergence plots.

The SVG backend is pinned to a fixed hash salt and writes no date, so a given set
of records always renders to the same bytes.
"""
import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..models import RunRecord  # noqa: E402


logger = logging.getLogger(__name__)

SVG_HASH_SALT = "trust-region-plots"


def _positive(values: Sequence[float]) -> np.ndarray:
    array = np.asarray(values, dtype=float)
    # Log axes cannot show exact zeros.
    return np.where(array > 0.0, array, np.nan)


def plot_residuals(records: Sequence[RunRecord], path: Path, title: str = "") -> Path:
    """
    Residual versus k on a log-y axis, one line per seed.

    Args:
        records: Runs to draw
        path: Output .svg path
        title: Figure title

    Returns:
        The written path
    """
    return plot_rows([(f"seed {r.seed}", r.rows) for r in records], path, title)


def plot_rows(series: Sequence[tuple], path: Path, title: str = "", ylabel: str = "stationarity residual") -> Path:
    """Draw (label, rows) pairs; used for both fresh records and re-read CSVs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(8, 5))
        for label, rows in series:
            ax.plot([r.k for r in rows], _positive([r.residual for r in rows]), linewidth=1.2, label=label)
        ax.set_yscale("log")
        ax.set_xlabel("k")
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.grid(True, which="both", alpha=0.3)
        if 1 < len(series) <= 10:
            ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.debug(f"Wrote {path}")
    return path
