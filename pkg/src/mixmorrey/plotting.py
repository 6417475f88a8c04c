"""Optional figures for CLI outputs. matplotlib is imported on first use only."""

from __future__ import annotations

import csv
from pathlib import Path


def _pyplot():
    try:
        import matplotlib
    except ImportError as e:
        raise RuntimeError("plotting needs matplotlib: pip install 'artifact[plot]'") from e
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_block_norms(csv_path, png_path) -> Path:
    """Per-scale block norms against time on a log axis."""
    plt = _pyplot()
    with open(csv_path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    t = [float(r[0]) for r in body]
    fig, ax = plt.subplots(figsize=(6, 4))
    for j, name in enumerate(head[1:], start=1):
        ys = [float(r[j]) for r in body]
        if any(y > 0 for y in ys):
            ax.semilogy(t, ys, label=name)
    ax.set_xlabel("t")
    ax.set_ylabel("block norm")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return Path(png_path)


def plot_verify(reports: list, png_path) -> Path:
    """Per-scale max ratios of every spread-type check."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for r in reports:
        per = r.get("per_scale_ratios") or {}
        try:
            pts = sorted((int(k), float(v)) for k, v in per.items())
        except ValueError:
            continue
        if len(pts) > 1:
            ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", label=r["id"])
    ax.set_xlabel("scale l")
    ax.set_ylabel("max ratio")
    ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)
    return Path(png_path)
