"""Report figures rendered next to the CSV outputs.

All plots go straight to files via the Agg backend; nothing here opens
a window. The CSVs stay the canonical interface -- these figures are a
convenience view of the same rows.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pipeline import ReportRow, RunSummary


def plot_run(rows: Sequence[ReportRow], path: str | Path) -> None:
    """Per-frame traces: stream densities and mask coverage, PSNR on a twin axis."""
    frames = [r.frame for r in rows]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    ax.plot(frames, [r.raw_density for r in rows], label="raw bit-1 density", color="tab:gray")
    ax.plot(frames, [r.enc_density for r in rows], label="encoded bit-1 density", color="tab:green")
    ax.plot(frames, [r.mask_coverage for r in rows], label="mask coverage", color="tab:orange", ls="--")
    ax.set_xlabel("frame")
    ax.set_ylabel("fraction")
    ax.set_ylim(0.0, 1.05)
    ax.grid(alpha=0.3)
    finite = [(r.frame, r.psnr_db) for r in rows if r.psnr_db != float("inf")]
    ax2 = ax.twinx()
    if finite:
        ax2.plot(*zip(*finite), label="PSNR", color="tab:blue", alpha=0.7)
    ax2.set_ylabel("PSNR [dB]")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="lower right", fontsize=8)
    title = f"{rows[0].variant}, k={rows[0].k}, tau={rows[0].tau}" if rows else "run"
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_sweep(sweep: Sequence[dict], path: str | Path) -> None:
    """Energy proxy vs. fidelity across the retained-bit sweep."""
    ks = [row["k"] for row in sweep]
    nbds = [row["mean_nbd"] for row in sweep]
    psnrs = [row["mean_psnr_db"] for row in sweep]
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.plot(ks, nbds, "-o", color="tab:green", label="mean NBD (energy proxy)")
    ax.set_xlabel("retained MSBs k")
    ax.set_ylabel("normalized bit-1 density")
    ax.set_xticks(ks)
    ax.grid(alpha=0.3)
    ax2 = ax.twinx()
    ax2.plot(ks, psnrs, "-s", color="tab:blue", label="mean PSNR")
    ax2.set_ylabel("PSNR [dB]")
    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="center right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_compare(summaries: Mapping[str, RunSummary], path: str | Path) -> None:
    """Mean NBD and PSNR per encoding variant, side by side."""
    names = list(summaries)
    nbds = [summaries[n].mean_nbd for n in names]
    psnrs = [summaries[n].mean_psnr_db for n in names]
    x = range(len(names))
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.6))
    ax1.bar(x, [0.0 if v is None else v for v in nbds], color="tab:green")
    ax1.set_xticks(list(x), names, rotation=20)
    ax1.set_ylabel("mean NBD")
    ax1.axhline(1.0, color="tab:gray", lw=0.8, ls="--")
    finite = [0.0 if p == float("inf") else p for p in psnrs]
    ax2.bar(x, finite, color="tab:blue")
    for i, p in enumerate(psnrs):
        if p == float("inf"):
            ax2.text(i, 1.0, "inf", ha="center", fontsize=9)
    ax2.set_xticks(list(x), names, rotation=20)
    ax2.set_ylabel("mean PSNR [dB]")
    for ax in (ax1, ax2):
        ax.grid(alpha=0.3, axis="y")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
