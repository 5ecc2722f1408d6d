from __future__ import annotations
from loguru import logger
from typing import Sequence
import re
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ne_moea.core import DimensionError  # noqa: E402

MAX_SERIES = 4
# (marker, color, hollow)
STYLES = (
    ("o", "tab:blue", True),
    ("+", "tab:red", False),
    ("s", "tab:green", True),
    ("x", "tab:orange", False),
)
_RC = {"svg.hashsalt": "ne-moea", "svg.fonttype": "none"}


def series_gid(label: str, index: int) -> str:
    """SVG group id of a series, stable for a given label and position."""
    return f"series{index}-" + re.sub(r"[^A-Za-z0-9_-]+", "_", label)


def plot_fronts(
    series: Sequence[tuple[str, np.ndarray]], path: str, title: str | None = None
) -> None:
    """Writes a scatter of up to four bi-objective point sets as SVG.

    Each series gets its own marker style and legend entry, and is drawn as
    an SVG group whose id is `series_gid(label, index)`. Rendering the same
    inputs twice produces identical files.

    Args:
        series: (label, (count, 2) points) pairs, in legend order.
        path: Output file.
        title: Optional axes title.

    Raises:
        ValueError if no or more than four series are given, DimensionError
        if a series is not bi-objective.
    """
    if not series:
        raise ValueError("Nothing to plot, no series given")
    if len(series) > MAX_SERIES:
        raise ValueError(f"At most {MAX_SERIES} series can be plotted, got {len(series)}")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for index, ((label, points), (marker, color, hollow)) in enumerate(zip(series, STYLES)):
            points = np.asarray(points, dtype=float)
            if points.size == 0:
                logger.warning(f"Series '{label}' is empty, plotting an empty series")
                points = points.reshape(0, 2)
            if points.ndim != 2 or points.shape[1] != 2:
                raise DimensionError(f"Series '{label}' is not bi-objective")
            style = {"facecolors": "none", "edgecolors": color} if hollow else {"c": color}
            ax.scatter(
                points[:, 0],
                points[:, 1],
                marker=marker,
                s=18,
                linewidths=0.8,
                label=label,
                gid=series_gid(label, index),
                **style,
            )
        ax.set_xlabel("Objective 1")
        ax.set_ylabel("Objective 2")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    logger.info(f"Wrote plot of {len(series)} series to '{path}'")
