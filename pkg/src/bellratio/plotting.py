"""Figures written next to the JSON/CSV reports. Headless (Agg) only."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bell_expressions import LOCAL_BOUND, qm_ardehali_array  # noqa: E402
from .outcomes import DETECTED, PAIR_NAMES  # noqa: E402


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_vertex_values(values, expression: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    vals = np.asarray(values)
    bins = np.arange(vals.min() - 0.5, vals.max() + 1.5, 1.0)
    ax.hist(vals, bins=bins, color="0.6", edgecolor="k")
    ax.axvline(LOCAL_BOUND, color="r", ls="--", label="local bound")
    ax.set_xlabel(f"expression {expression} at vertex")
    ax.set_ylabel("vertices")
    ax.legend()
    return _finish(fig, path)


def plot_counts(counts, expected: np.ndarray, path: Path) -> Path:
    """Observed coincidence counts against N * p for every pair and channel."""
    labels, observed, predicted = [], [], []
    n = counts.pairs_per_setting
    for k, name in enumerate(PAIR_NAMES):
        for x in DETECTED:
            for y in DETECTED:
                labels.append(f"{name} {x.symbol}{y.symbol}")
                observed.append(counts.table[k, x, y])
                predicted.append(n * expected[k, x, y])
    pos = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.bar(pos, observed, color="0.7", label="simulated")
    ax.errorbar(pos, predicted, yerr=np.sqrt(predicted), fmt="r_", ms=10, label="expected")
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, rotation=90, fontsize=7)
    ax.set_ylabel("coincidences")
    ax.legend()
    return _finish(fig, path)


def plot_trace(result, path: Path) -> Path:
    it, val = zip(*result.trace)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(it, val, "k.-")
    ax.set_xlabel("refinement round")
    ax.set_ylabel(result.objective)
    return _finish(fig, path)


def plot_landscape(config, result, path: Path, step: float = 1.0) -> Path:
    """Ratio form over (a', b') with a and b fixed at the optimum."""
    s = result.best_settings
    axis = np.arange(0.0, 180.0, step)
    ap, bp = np.meshgrid(axis, axis, indexing="ij")
    z = qm_ardehali_array(config, s["a"], ap, s["b"], bp)
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(z.T, origin="lower", extent=(0, 180, 0, 180), cmap="viridis", aspect="auto")
    ax.contour(axis, axis, z.T, levels=[LOCAL_BOUND], colors="w")
    ax.plot([s["a_prime"]], [s["b_prime"]], "r+", ms=12)
    ax.set_xlabel("a' (deg)")
    ax.set_ylabel("b' (deg)")
    fig.colorbar(im, ax=ax)
    return _finish(fig, path)


def plot_correlation_curve(visibility: float, path: Path) -> Path:
    delta = np.linspace(0.0, 180.0, 361)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(delta, visibility * np.cos(2 * np.radians(delta)), "k-")
    ax.set_xlabel("setting difference (deg)")
    ax.set_ylabel("normalized correlation")
    return _finish(fig, path)
