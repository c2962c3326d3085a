"""Result tables and companion figures.

Tables render "mean ± halfwidth" rows; the same data can be written as
tab-delimited text for downstream tooling.  Figures are rendered with the
Agg backend straight to files next to the delimited output.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .metrics import EvalReport, format_mean_ci  # noqa: E402


def _save_figure_atomically(fig, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    fig.savefig(tmp, dpi=120, format=path.suffix.lstrip(".") or "png")
    plt.close(fig)
    os.replace(tmp, path)


def render_table(rows: list[tuple[str, EvalReport]], decimals: int = 1) -> str:
    """Fixed-width table of labeled reports."""
    width = max((len(label) for label, _ in rows), default=5)
    width = max(width, len("label"))
    lines = [f"{'label'.ljust(width)}  {'value':>16}  {'n':>5}"]
    for label, report in rows:
        value = format_mean_ci(report.mean, report.ci95_halfwidth, decimals)
        lines.append(f"{label.ljust(width)}  {value:>16}  {report.n:>5}")
    return "\n".join(lines) + "\n"


def render_tsv(rows: list[tuple[str, EvalReport]]) -> str:
    lines = ["label\tmean\tci95_halfwidth\tn"]
    for label, report in rows:
        lines.append(f"{label}\t{report.mean!r}\t{report.ci95_halfwidth!r}\t{report.n}")
    return "\n".join(lines) + "\n"


def save_metric_figure(rows: list[tuple[str, EvalReport]], path: str | Path) -> None:
    """Bar chart of means with 95% confidence whiskers."""
    labels = [label for label, _ in rows]
    means = [report.mean for _, report in rows]
    errors = [report.ci95_halfwidth for _, report in rows]
    fig, ax = plt.subplots(figsize=(max(4.0, 1.2 * len(rows)), 3.2))
    ax.bar(range(len(rows)), means, yerr=errors, capsize=4, color="#4878a8")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("metric value")
    fig.tight_layout()
    _save_figure_atomically(fig, path)


def save_loss_figure(
    histories: dict[str, list[float]], path: str | Path, window: int = 25
) -> None:
    """Smoothed training-loss curves, one line per labeled run."""
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    for label, history in histories.items():
        if len(history) >= window:
            kernel = np.ones(window) / window
            ax.plot(np.convolve(history, kernel, mode="valid"), label=label)
        else:
            ax.plot(history, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("batch loss")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    _save_figure_atomically(fig, path)
