"""Figure rendering for simulation traces.

One figure per agent showing its regulated-output components over time,
plus an overview figure with every component.  Files land next to the
delimited trace export; the Agg backend keeps this headless-safe.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .sim import Trace


def render_trace_figures(trace: Trace, out_dir, prefix: str = "tracking_errors") -> list:
    """Write per-agent and overview PNGs; returns the created paths."""
    os.makedirs(out_dir, exist_ok=True)
    groups: dict = {}
    for idx, label in enumerate(trace.output_labels):
        agent = label.split("_")[1]
        groups.setdefault(agent, []).append(idx)
    paths = []

    for agent, cols in sorted(groups.items(), key=lambda kv: int(kv[0])):
        fig, ax = plt.subplots(figsize=(7, 4))
        for idx in cols:
            ax.plot(trace.times, trace.outputs[:, idx], label=trace.output_labels[idx])
        ax.axhline(0.0, color="k", linewidth=0.6)
        ax.set_xlabel("time [s]")
        ax.set_ylabel("regulated output")
        ax.set_title(f"agent {agent} tracking errors")
        ax.legend(loc="best", fontsize=8)
        fig.tight_layout()
        path = os.path.join(out_dir, f"{prefix}_agent{agent}.png")
        fig.savefig(path, dpi=130)
        plt.close(fig)
        paths.append(path)

    fig, ax = plt.subplots(figsize=(8, 4.5))
    for idx, label in enumerate(trace.output_labels):
        ax.plot(trace.times, trace.outputs[:, idx], label=label, linewidth=0.9)
    ax.axhline(0.0, color="k", linewidth=0.6)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("regulated output")
    ax.set_title("tracking errors, all agents")
    ax.legend(loc="best", fontsize=7, ncol=2)
    fig.tight_layout()
    path = os.path.join(out_dir, f"{prefix}_all.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)
    return paths
