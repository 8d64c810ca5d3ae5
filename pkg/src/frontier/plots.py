"""Figure rendering for the report paths: every plot goes to a file.

Kept separate from the numerics so library users never pay for a
matplotlib import unless they ask for pictures.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_fronts(record, path, target=None):
    """Front trajectories h(t) and -g(t), with the target-speed ray if finite."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(record.times, record.hs, label="h(t)", color="tab:blue")
    ax.plot(record.times, -record.gs, label="-g(t)", color="tab:orange", ls="--")
    if target is not None and math.isfinite(target.c_star):
        ax.plot(
            record.times,
            record.hs[0] + target.c_star * record.times,
            color="gray",
            lw=0.8,
            label=f"target slope {target.c_star:.3g}",
        )
    ax.set_xlabel("t")
    ax.set_ylabel("front position")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_profiles(record, path, count: int = 5):
    """A handful of density snapshots over the occupied part of the grid."""
    fig, ax = plt.subplots(figsize=(6, 4))
    n = len(record.snapshots)
    picks = sorted(set(np.linspace(0, n - 1, min(count, n)).astype(int)))
    for i in picks:
        ax.plot(record.x, record.snapshots[i], lw=1.0, label=f"t = {record.snapshot_times[i]:g}")
    reach = 1.1 * max(abs(record.gs[-1]), record.hs[-1])
    ax.set_xlim(-reach, reach)
    ax.set_xlabel("x")
    ax.set_ylabel("u")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_flattening(series, path):
    """Sup deviation from the attractor inside the spreading cone, vs time."""
    ts = [t for t, _ in series]
    devs = [d for _, d in series]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(ts, np.maximum(devs, 1e-16))
    ax.set_xlabel("t")
    ax.set_ylabel("sup |u - attractor| in cone")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep(rows, parameter, path):
    """Final width against the swept parameter, outcome-coded."""
    fig, ax = plt.subplots(figsize=(6, 4))
    colors = {"spreading": "tab:green", "vanishing": "tab:red", "undetermined": "tab:gray", "error": "k"}
    for row in rows:
        ax.scatter(
            row["value"],
            row.get("final_width", float("nan")),
            color=colors.get(row["outcome"], "k"),
            label=row["outcome"],
        )
    handles, labels = ax.get_legend_handles_labels()
    seen = dict(zip(labels, handles))
    ax.legend(seen.values(), seen.keys(), frameon=False)
    ax.set_xscale("log")
    ax.set_xlabel(parameter)
    ax.set_ylabel("final width")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_ladder(cutoffs, speeds, path):
    """Truncated-kernel target speeds against the cutoff."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cutoffs, speeds, marker="o")
    ax.set_xlabel("cutoff")
    ax.set_ylabel("target speed")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
