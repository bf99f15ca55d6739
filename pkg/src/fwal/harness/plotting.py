"""Convergence plots drawn from summary rows (never from raw solver state)."""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FLOOR = 1e-16


def plot_summary(rows: list[dict], path: str | Path, title: str = "") -> None:
    """Mean distance per solver on a log y-axis with a shaded one-std band."""
    from fwal.harness.runner import atomic_write

    with plt.rc_context({"svg.hashsalt": "fwal", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for name in dict.fromkeys(r["solver"] for r in rows):
            sel = [r for r in rows if r["solver"] == name]
            t = np.array([r["t"] for r in sel])
            mean = np.array([r["mean_dist"] for r in sel])
            std = np.array([r["std_dist"] for r in sel])
            (line,) = ax.plot(t, np.maximum(mean, FLOOR), label=name.upper())
            ax.fill_between(t, np.maximum(mean - std, FLOOR), mean + std, color=line.get_color(), alpha=0.2, linewidth=0)
        ax.set_yscale("log")
        ax.set_xlabel("iteration")
        ax.set_ylabel(r"$\|\Phi_E - \bar\Phi_t\|_2$")
        if title:
            ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    atomic_write(Path(path), buf.getvalue())
