"""Matplotlib figures written next to the CSV/PGM artifacts.

Everything renders through the Agg backend and strips the PNG ``Software``
tag so repeated runs produce identical bytes.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 9,
    "axes.labelsize": 9,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "image.interpolation": "nearest",
    "savefig.dpi": 110,
}


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def surface_grid(rows, extent, path, labels=None):
    """One row per time, one column per named surface.

    ``rows`` is a list of ``(t, {name: values})``.  Each panel has its own
    color range since the divergent ten-term series can dwarf the others.
    """
    ncols = max(len(cols) for _, cols in rows)
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(rows), ncols, figsize=(2.6 * ncols, 2.3 * len(rows)), squeeze=False)
        for i, (t, cols) in enumerate(rows):
            for j, (name, values) in enumerate(cols.items()):
                ax = axes[i, j]
                im = ax.imshow(values, origin="lower", extent=extent, cmap="viridis")
                fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
                ax.set_title(f"{name}, t={t:g}")
            for j in range(len(cols), ncols):
                axes[i, j].axis("off")
        fig.tight_layout()
        _save(fig, path)


def image_row(images, titles, path):
    """Grayscale images side by side on a fixed ``[0, 1]`` intensity scale."""
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(images), figsize=(2.4 * len(images), 2.6), squeeze=False)
        for ax, img, title in zip(axes[0], images, titles):
            ax.imshow(img, cmap="gray", vmin=0.0, vmax=1.0)
            ax.set_title(title)
            ax.set_xticks([])
            ax.set_yticks([])
        fig.tight_layout()
        _save(fig, path)


def error_curve(ts, series, path, ylabel="max-abs error"):
    """Semilog plot of one or more error sequences against time."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.0, 3.0))
        for label, ys in series.items():
            ys = np.asarray(ys, dtype=float)
            ax.semilogy(ts, np.where(ys > 0, ys, np.nan), marker="o", label=label)
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        _save(fig, path)
