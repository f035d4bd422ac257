"""Static figures: 8x8 sample grids and real-vs-generated scatter plots."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .storage import to_uint8  # noqa: E402

GRID = 8


def sample_grid(images: np.ndarray, path: str | Path, title: str | None = None) -> Path:
    images = np.asarray(images)[: GRID * GRID]
    fig, axes = plt.subplots(GRID, GRID, figsize=(8, 8))
    for i, ax in enumerate(axes.flat):
        ax.axis("off")
        if i < len(images):
            img = to_uint8(images[i])
            ax.imshow(img, cmap="gray" if img.ndim == 2 else None, vmin=0, vmax=255, interpolation="nearest")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=80)
    plt.close(fig)
    return Path(path)


def scatter(real: np.ndarray, fake: np.ndarray, path: str | Path, title: str | None = None,
            max_points: int = 1000) -> Path:
    """2D scatter, or 3D projection for 3-dimensional points."""
    real = np.asarray(real)[:max_points]
    fake = np.asarray(fake)[:max_points]
    d = real.shape[1]
    fig = plt.figure(figsize=(10, 5))
    for i, (pts, label, color) in enumerate(((real, "real", "tab:blue"), (fake, "generated", "tab:orange"))):
        if d == 3:
            ax = fig.add_subplot(1, 2, i + 1, projection="3d")
            ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=3, c=color)
            ax.view_init(elev=10, azim=-80)
        else:
            ax = fig.add_subplot(1, 2, i + 1)
            ax.scatter(pts[:, 0], pts[:, 1], s=3, c=color)
            ax.set_aspect("equal")
        ax.set_title(f"{label} ({len(pts)})")
    if title:
        fig.suptitle(title)
    fig.savefig(path, dpi=80)
    plt.close(fig)
    return Path(path)


def count_bar(histogram: dict, path: str | Path, title: str | None = None) -> Path:
    keys = sorted(int(k) for k in histogram)
    fig, ax = plt.subplots(figsize=(5, 3))
    ax.bar(keys, [histogram[k] if k in histogram else histogram[str(k)] for k in keys])
    ax.set_xlabel("objects detected")
    ax.set_ylabel("images")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=80)
    plt.close(fig)
    return Path(path)
