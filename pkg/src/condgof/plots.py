"""Figure rendering for the report paths (rejection curves and landscapes)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .harness import ExperimentReport, LandscapeTable  # noqa: E402

_PNG_META = {"Software": None}  # keep saved bytes independent of the library build


def save_rejection_curve(report: ExperimentReport, path) -> Path:
    """Rejection rate against sample size, with the significance level marked."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    ns = [row.n for row in report.rows]
    rates = [row.rate for row in report.rows]
    ax.plot(ns, rates, marker="o", label=report.method)
    ax.axhline(report.alpha, color="gray", linestyle="--", linewidth=1, label=f"alpha = {report.alpha:g}")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("rejection rate")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"{report.problem}: {report.method}")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path


def save_landscape(table: LandscapeTable, path, title: str = "") -> Path:
    """Power criterion against a one-dimensional grid of test locations."""
    path = Path(path)
    if table.locations.shape[1] != 1:
        raise ValueError("landscape figures are only rendered for one-dimensional grids")
    fig, ax = plt.subplots(figsize=(5.0, 3.4), dpi=150)
    ax.plot(table.locations[:, 0], table.criteria, color="C0")
    ax.axhline(0.0, color="gray", linewidth=0.8)
    peak = table.argmax_location()
    ax.axvline(float(peak[0]), color="C3", linestyle=":", linewidth=1, label=f"argmax = {float(peak[0]):.2f}")
    ax.set_xlabel("test location v")
    ax.set_ylabel("power criterion")
    if title:
        ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return path
