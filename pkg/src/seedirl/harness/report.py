"""Plots and consolidated CSV from completed run directories.

Charts are SVG line plots: ground-truth evaluation and discriminator loss
against training iteration, one series per run, with an optional horizontal
expert reference line. Runs missing their metrics file are reported in the
returned manifest and skipped; everything else is still emitted.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from ..errors import UsageError
from .runner import (METRICS_FILE, SUMMARY_FILE, read_summary, write_csv,
                     METRICS_COLUMNS)

REWARD_PLOT = "reward_curves.svg"
LOSS_PLOT = "loss_curves.svg"
CONSOLIDATED_FILE = "all_metrics.csv"


def _read_metrics(run_dir: Path) -> list[dict]:
    with open(run_dir / METRICS_FILE, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: float(v) for k, v in row.items()} for row in rows]


def emit_report(run_dirs: list[str | Path], out_dir: str | Path) -> dict:
    """Returns a manifest: emitted file paths plus per-run errors."""
    if not run_dirs:
        raise UsageError("need at least one run directory")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    series, errors, consolidated = [], {}, []
    for raw in run_dirs:
        run_dir = Path(raw)
        try:
            metrics = _read_metrics(run_dir)
        except OSError as exc:
            errors[run_dir.name] = f"metrics unavailable: {exc}"
            continue
        expert_ref = None
        try:
            summary = read_summary(run_dir)
            expert_ref = summary.get("expert_proc_return")
        except OSError:
            pass
        series.append((run_dir.name, metrics, expert_ref))
        for row in metrics:
            consolidated.append({"run": run_dir.name, **row})

    manifest = {"plots": [], "csv": None, "errors": errors}
    if not series:
        return manifest

    for fname, column, ylabel in ((REWARD_PLOT, "env_eval",
                                   "ground-truth return"),
                                  (LOSS_PLOT, "disc_loss",
                                   "discriminator loss")):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        drew_ref = False
        for name, metrics, expert_ref in series:
            xs = [m["iteration"] for m in metrics]
            ys = [m[column] for m in metrics]
            ax.plot(xs, ys, label=name, linewidth=1.2)
            if column == "env_eval" and expert_ref is not None and not drew_ref:
                ax.axhline(expert_ref, color="black", linestyle="--",
                           linewidth=1.0, label="expert")
                drew_ref = True
        ax.set_xlabel("iteration")
        ax.set_ylabel(ylabel)
        ax.legend(fontsize=8)
        fig.tight_layout()
        path = out_dir / fname
        fig.savefig(path)
        plt.close(fig)
        manifest["plots"].append(str(path))

    csv_path = out_dir / CONSOLIDATED_FILE
    write_csv(csv_path, ("run",) + METRICS_COLUMNS, consolidated)
    manifest["csv"] = str(csv_path)
    return manifest