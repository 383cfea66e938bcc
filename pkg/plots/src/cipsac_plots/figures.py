"""Batch figure rendering from simulator result CSVs.

The module only reads the published CSV schemas (the harness metrics
table, the PSR comparison table, and the long-format delay-Doppler dump);
it has no dependency on the simulator package itself. Rendering is a pure
function of the CSV contents and the figure options: fixed figure
geometry, no timestamps, stable group ordering.
"""

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402

FIGURE_KINDS = ("per-vs-snr", "mse-vs-iter", "psr-bars", "sensing-heatmap")

_FLOOR = 1e-7  # display floor for zero error rates on log axes


class SchemaError(ValueError):
    """A required CSV column is missing."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: str
    out_path: str
    title: Optional[str] = None
    dpi: int = 120


def read_csv_columns(path, required):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise SchemaError(f"{path} is missing required column {col!r}")
        rows = list(reader)
    return rows


def _grouped(rows, key_fields):
    groups = {}
    for row in rows:
        key = tuple(row[k] for k in key_fields)
        groups.setdefault(key, []).append(row)
    return dict(sorted(groups.items()))


def render_per_vs_snr(spec: FigureSpec):
    rows = read_csv_columns(spec.csv_path, ["scenario", "snr_d_db", "n_iter", "per"])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    plotted = {}
    for key, group in _grouped(rows, ["scenario", "n_iter"]).items():
        pts = sorted((float(r["snr_d_db"]), float(r["per"])) for r in group)
        x = [p[0] for p in pts]
        y = [max(p[1], _FLOOR) for p in pts]
        label = f"{key[0]}, {key[1]} iter"
        ax.semilogy(x, y, marker="o", label=label)
        plotted[label] = (x, y)
    ax.set_xlabel("data SNR (dB)")
    ax.set_ylabel("packet error rate")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend(fontsize=8)
    return fig, plotted


def render_mse_vs_iter(spec: FigureSpec):
    rows = read_csv_columns(spec.csv_path,
                            ["scenario", "snr_d_db", "n_iter", "mse_total"])
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    plotted = {}
    for key, group in _grouped(rows, ["scenario", "snr_d_db"]).items():
        pts = sorted((int(r["n_iter"]), float(r["mse_total"])) for r in group)
        x = [p[0] for p in pts]
        y = [max(p[1], _FLOOR) for p in pts]
        label = f"{key[0]} @ {key[1]} dB"
        ax.semilogy(x, y, marker="s", label=label)
        plotted[label] = (x, y)
    ax.set_xlabel("iterations")
    ax.set_ylabel("total sensing MSE")
    ax.grid(True, which="both", alpha=0.4)
    ax.legend(fontsize=8)
    return fig, plotted


def render_psr_bars(spec: FigureSpec):
    rows = read_csv_columns(spec.csv_path,
                            ["policy", "mean_psr", "std_psr", "trials"])
    fig, ax = plt.subplots(figsize=(4.2, 3.6))
    labels = [r["policy"] for r in rows]
    means = [float(r["mean_psr"]) for r in rows]
    errs = [float(r["std_psr"]) / math.sqrt(max(int(r["trials"]), 1))
            for r in rows]
    ax.bar(labels, means, yerr=errs, capsize=4,
           color=["tab:blue", "tab:orange"][: len(labels)])
    ax.set_ylabel("mean peak-to-side-lobe ratio")
    ax.grid(True, axis="y", alpha=0.4)
    plotted = {lab: ([0], [m]) for lab, m in zip(labels, means)}
    return fig, plotted


def heatmap_peaks(rows):
    """Argmax (delay, Doppler) per branch of a long-format surface dump."""
    peaks = {}
    for row in rows:
        branch = int(row["branch"])
        mag = float(row["magnitude"])
        cell = (int(row["delay_bin"]), int(row["doppler_bin"]))
        if branch not in peaks or mag > peaks[branch][0]:
            peaks[branch] = (mag, cell, float(row["theta_deg"]))
    return {b: {"cell": v[1], "theta_deg": v[2]} for b, v in peaks.items()}


def render_sensing_heatmap(spec: FigureSpec):
    rows = read_csv_columns(
        spec.csv_path,
        ["branch", "theta_deg", "delay_bin", "doppler_bin", "magnitude"])
    branches = sorted({int(r["branch"]) for r in rows})
    dop_bins = sorted({int(r["doppler_bin"]) for r in rows})
    delay_bins = sorted({int(r["delay_bin"]) for r in rows})
    fig, axes = plt.subplots(1, len(branches),
                             figsize=(3.2 * len(branches), 3.2), squeeze=False)
    peaks = heatmap_peaks(rows)
    plotted = {}
    for col, branch in enumerate(branches):
        grid = np.zeros((len(delay_bins), len(dop_bins)))
        for row in rows:
            if int(row["branch"]) != branch:
                continue
            i = delay_bins.index(int(row["delay_bin"]))
            j = dop_bins.index(int(row["doppler_bin"]))
            grid[i, j] = float(row["magnitude"])
        ax = axes[0][col]
        ax.imshow(grid, aspect="auto", origin="lower",
                  extent=[dop_bins[0] - 0.5, dop_bins[-1] + 0.5,
                          delay_bins[0] - 0.5, delay_bins[-1] + 0.5])
        peak = peaks[branch]
        ax.plot(peak["cell"][1], peak["cell"][0], "rx", markersize=10)
        ax.set_title(f"branch at {peak['theta_deg']:.0f} deg", fontsize=9)
        ax.set_xlabel("Doppler bin")
        if col == 0:
            ax.set_ylabel("delay bin")
        plotted[branch] = ([peak["cell"][1]], [peak["cell"][0]])
    return fig, plotted


_RENDERERS = {
    "per-vs-snr": render_per_vs_snr,
    "mse-vs-iter": render_mse_vs_iter,
    "psr-bars": render_psr_bars,
    "sensing-heatmap": render_sensing_heatmap,
}


def render(spec: FigureSpec):
    """Render one figure to ``spec.out_path``; returns the plotted values
    (label -> (x, y)) for verification."""
    if spec.kind not in _RENDERERS:
        raise ValueError(f"unknown figure kind {spec.kind!r}; "
                         f"expected one of {FIGURE_KINDS}")
    fig, plotted = _RENDERERS[spec.kind](spec)
    if spec.title:
        fig.suptitle(spec.title)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=spec.dpi)
    plt.close(fig)
    return plotted
