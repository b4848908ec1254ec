"""Matplotlib figure rendering for harness outputs.

Every figure is written next to a CSV carrying the same numbers, so the
plots are a convenience, never the only record of a run.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def training_curve_plot(history, path) -> Path:
    """Train/validation loss per epoch on a log scale."""
    path = Path(path)
    epochs = np.arange(1, len(history) + 1)
    train = [h[0] for h in history]
    val = [h[1] for h in history]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.semilogy(epochs, train, label="train")
    ax.semilogy(epochs, val, label="validation")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def sweep_plot(values, errors, axis_label: str, path) -> Path:
    """Test error against one swept hyperparameter."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    numeric = all(isinstance(v, (int, float)) for v in values)
    if numeric:
        span = max(values) / max(min(values), 1e-300)
        if span >= 100.0 and min(values) > 0:
            ax.set_xscale("log")
        ax.plot(values, errors, marker="o")
    else:
        ax.plot(range(len(values)), errors, marker="o")
        ax.set_xticks(range(len(values)))
        ax.set_xticklabels([str(v) for v in values])
    ax.set_yscale("log")
    ax.set_xlabel(axis_label)
    ax.set_ylabel("mean rectified test error")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def sqrt_scatter_plot(y_test, x_pred, path) -> Path:
    """Predicted roots against measurements, with the true +/-sqrt branches."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    grid = np.linspace(0.0, max(float(np.max(y_test)), 1e-12), 200)
    root = np.sqrt(grid)
    ax.plot(grid, root, color="0.6", lw=1, label="+/- sqrt(y)")
    ax.plot(grid, -root, color="0.6", lw=1)
    ax.scatter(y_test, x_pred, s=4, alpha=0.5, label="prediction")
    ax.set_xlabel("y")
    ax.set_ylabel("recovered x")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
