"""Markdown tables and matplotlib figures for the CLI report paths."""

from __future__ import annotations

from collections.abc import Mapping
from pathlib import Path

import numpy as np

from .core import Pattern
from .metrics import METRICS, BINARY_TARGET
from .saliency import GROUP_COLUMNS, bin_centers

METRIC_HEADERS = {
    "recall": "Recall (σ²)",
    "specificity": "Specificity (σ²)",
    "precision": "Precision (σ²)",
    "accuracy": "Accuracy (σ²)",
}

# (block title, [(target key, row label), ...])
METRICS_BLOCKS = (
    ("BCC/Non-BCC", [(BINARY_TARGET, "BCC/Non-BCC")]),
    ("Pattern detection", [(p.code, p.title) for p in Pattern]),
    (
        "Clinically-inspired XAI",
        [
            ("NoPattern", "All 0's"),
            ("PigmentNetworkOnly", "Pigment Network"),
            ("BccPattern", "BCC pattern detection"),
        ],
    ),
)

SALIENCY_HEADERS = ("Prediction", "Intersection", "Mean Fg", "Mean Bg", "Std Fg", "Std Bg")


def _fmt_cell(cell, digits):
    if cell == "-":
        return "-"
    if cell is None:
        return "undefined"
    mean, var = cell
    if var is None:
        return f"{mean:.{digits}f}"
    return f"{mean:.{digits}f} ({var:.2e})"


def render_metrics_table(cells: Mapping[str, Mapping[str, object]], digits: int = 2) -> str:
    """Three-block metrics table.

    ``cells[target][metric]`` is ``(mean, variance)``, ``(mean, None)`` for a
    bare value, ``None`` for undefined, or ``"-"`` for not applicable.
    """
    lines = ["| | " + " | ".join(METRIC_HEADERS[m] for m in METRICS) + " |"]
    lines.append("|---|" + "---|" * len(METRICS))
    blank = " |" * len(METRICS)
    for title, rows in METRICS_BLOCKS:
        lines.append(f"| **{title}** |{blank}")
        for key, label in rows:
            row = cells.get(key, {})
            lines.append(f"| {label} | " + " | ".join(_fmt_cell(row.get(m), digits) for m in METRICS) + " |")
    return "\n".join(lines) + "\n"


def render_saliency_table(groups: Mapping[str, Mapping | None], digits: int = 2) -> str:
    lines = ["| " + " | ".join(SALIENCY_HEADERS) + " |", "|" + "---|" * len(SALIENCY_HEADERS)]
    for name in ("Correct", "Incorrect"):
        g = groups.get(name)
        vals = ["-"] * len(GROUP_COLUMNS) if g is None else [f"{g[c]:.{digits}f}" for c in GROUP_COLUMNS]
        lines.append(f"| {name} | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def render_balance_table(balance: Mapping) -> str:
    codes = [p.code for p in Pattern]
    lines = ["| Fold | Size | " + " | ".join(codes) + " |", "|" + "---|" * (len(codes) + 2)]
    for f in balance["folds"]:
        cells = []
        for c in codes:
            prop = f["proportions"][c]
            cells.append(f"{f['positives'][c]} ({'-' if prop is None else f'{prop:.3f}'})")
        lines.append(f"| {f['fold']} | {f['size']} | " + " | ".join(cells) + " |")
    prev = " | ".join(f"{balance['prevalence'][c]:.3f}" for c in codes)
    lines.append(f"| all | {balance['n_images']} | {prev} |")
    lines.append("")
    lines.append(f"Max absolute deviation from global prevalence: {balance['max_deviation']:.4f}")
    return "\n".join(lines) + "\n"


# figures ------------------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # no Software/date metadata so reruns give identical bytes
    fig.savefig(path, dpi=100, metadata={"Software": None})


def plot_densities(pdf_fg, pdf_bg, path, title: str = "") -> None:
    """Fg (blue) and Bg (orange) activation densities on one axis."""
    plt = _pyplot()
    x = bin_centers(len(pdf_fg))
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot(x, pdf_fg, color="tab:blue", label="P(z | Fg)")
    ax.plot(x, pdf_bg, color="tab:orange", label="P(z | Bg)")
    ax.fill_between(x, 0, np.minimum(pdf_fg, pdf_bg), color="0.8", label="overlap")
    ax.set_xlim(0, 1)
    ax.set_xlabel("normalized Grad-CAM value z")
    ax.set_ylabel("density")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def plot_saliency_summary(report, path) -> None:
    """Mean Fg/Bg activation per pair, split by prediction outcome."""
    plt = _pyplot()
    ids = sorted(report.pairs)
    fig, ax = plt.subplots(figsize=(5, 4))
    for flag, marker, label in ((True, "o", "correct"), (False, "x", "incorrect")):
        sel = [i for i in ids if report.correct[i] is flag]
        if sel:
            ax.scatter(
                [report.pairs[i].mean_bg for i in sel],
                [report.pairs[i].mean_fg for i in sel],
                marker=marker,
                label=label,
            )
    ax.plot([0, 1], [0, 1], color="0.6", lw=0.8, ls="--")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_xlabel("mean activation outside mask")
    ax.set_ylabel("mean activation inside mask")
    if ids:
        ax.legend(frameon=False)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)
