"""Heatmap rendering for attribution grids.

Negative index estimates are clipped to zero for display only; the
numeric artifacts keep the raw values.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_heatmap(grid: np.ndarray, path, levels: int = 0,
                   title: str | None = None, metadata: dict | None = None) -> None:
    """Save a viridis heatmap; ``levels`` > 0 overlays subband gridlines."""
    grid = np.asarray(grid, dtype=np.float64)
    g = grid.shape[0]
    fig, ax = plt.subplots(figsize=(4.8, 4.2), dpi=130)
    image = ax.imshow(
        np.maximum(grid, 0.0),
        cmap="viridis",
        interpolation="nearest",
        extent=(0, g, grid.shape[0], 0),
    )
    for j in range(1, levels + 1):
        outer = g >> (j - 1)
        inner = g >> j
        ax.plot([inner, inner], [0, outer], color="white", linewidth=0.9)
        ax.plot([0, outer], [inner, inner], color="white", linewidth=0.9)
    ax.set_xticks([])
    ax.set_yticks([])
    if title:
        ax.set_title(title, fontsize=10)
    fig.colorbar(image, ax=ax, fraction=0.046, pad=0.04)
    fig.savefig(path, bbox_inches="tight", metadata=metadata or {})
    plt.close(fig)
