"""Figure rendering for experiment reports (written next to the CSV output)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _sweep_axis(report):
    kind = report.metadata.get("config", {}).get("sweep", {}).get("kind", None)
    labels = {"tau": "downlink fraction tau", "distance": "user distance (m)",
              "antennas": "active antennas"}
    return kind, labels.get(kind, kind or "point")


def plot_sweep(report, path):
    """Max-min rate versus the sweep key, one line per seed."""
    kind, xlabel = _sweep_axis(report)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    seeds = sorted({r.seed for r in report.records})
    for seed in seeds:
        rows = [r for r in report.records if r.seed == seed]
        if kind == "tau":
            xs = [r.tau for r in rows]
        elif kind == "antennas":
            xs = [r.num_antennas for r in rows]
        else:
            xs = [float(r.scenario_id.split("=")[-1]) for r in rows]
        order = np.argsort(xs)
        xs = np.asarray(xs)[order]
        ys = np.asarray([r.rate_bps_hz for r in rows])[order]
        ax.plot(xs, ys, marker="o", ms=3, label=f"seed {seed}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("max-min rate (bps/Hz)")
    method = report.metadata.get("config", {}).get("method", "")
    ax.set_title(f"{method} sweep")
    if len(seeds) > 1:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_profile(solution, path):
    """Rate profile over the time split from a solved JointSolution."""
    prof = [(t, r) for t, r in solution.tau_profile if np.isfinite(r)]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if prof:
        xs, ys = zip(*prof)
        ax.plot(xs, ys, marker="o", ms=3)
    ax.axvline(solution.tau, color="k", ls="--", lw=0.8)
    ax.set_xlabel("downlink fraction tau")
    ax.set_ylabel("max-min rate (bps/Hz)")
    ax.set_title(f"rate profile (best tau = {solution.tau:.4f})")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_convergence(traces, path):
    """Spectral-radius trace per iteration for each labelled run."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, trace in traces.items():
        ax.plot(range(1, len(trace) + 1), trace, marker="o", ms=3, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("worst spectral radius")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
