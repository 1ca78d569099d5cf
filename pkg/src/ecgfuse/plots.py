"""Matplotlib figure rendering for the CLI report paths."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .resampling import BenchmarkReport
from .tsne import Embedding2D

_CLASS_COLORS = {0: "#1f77b4", 1: "#d62728"}
_CLASS_NAMES = {0: "non-ACS", 1: "ACS"}


def save_benchmark_figure(report: BenchmarkReport, path) -> None:
    """Grouped bar chart of per-arm mean AUROC / AUCPR with STD error bars."""
    names = [a.name for a in report.arms]
    auroc_mean = [a.auroc_summary.mean for a in report.arms]
    auroc_std = [a.auroc_summary.std for a in report.arms]
    aucpr_mean = [a.aucpr_summary.mean for a in report.arms]
    aucpr_std = [a.aucpr_summary.std for a in report.arms]

    x = np.arange(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(1.8 + 1.6 * len(names), 4.2))
    ax.bar(x - width / 2, auroc_mean, width, yerr=auroc_std, capsize=3,
           label="AUROC", color="#4878a8")
    ax.bar(x + width / 2, aucpr_mean, width, yerr=aucpr_std, capsize=3,
           label="AUCPR", color="#e1812c")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=15, ha="right")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score (mean over %d reshuffles)" % report.reshuffle.n_repeats)
    ax.legend(loc="lower right")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_scatter_figure(emb: Embedding2D, path, title: str = "") -> None:
    """PNG companion of the SVG scatter."""
    fig, ax = plt.subplots(figsize=(6, 5))
    for cls in (0, 1):
        mask = emb.labels == cls
        ax.scatter(emb.coords[mask, 0], emb.coords[mask, 1], s=12, alpha=0.7,
                   color=_CLASS_COLORS[cls], label=_CLASS_NAMES[cls],
                   linewidths=0)
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    ax.set_xlabel("t-SNE axis 1")
    ax.set_ylabel("t-SNE axis 2")
    fig.tight_layout()
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150)
    plt.close(fig)
