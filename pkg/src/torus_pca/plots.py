"""Static SVG plots rendered from the report CSVs."""
from __future__ import annotations

import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# byte-identical SVGs across runs
matplotlib.rcParams["svg.hashsalt"] = "torus-pca"
matplotlib.rcParams["svg.fonttype"] = "none"
_META = {"Date": None, "Creator": None}


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def variance_plot(rows, path):
    by = defaultdict(list)
    for r in rows:
        by[int(r["cluster"])].append((int(r["d"]), 100.0 * float(r["relative"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for cid in sorted(by):
        d, v = zip(*sorted(by[cid]))
        ax.plot(d, v, marker="o", label=f"cluster {cid}")
    ax.set_xlabel("dimension d")
    ax.set_ylabel("relative residual variance (%)")
    if by:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def projection_plot(rows, path):
    by = defaultdict(list)
    radius = {}
    for r in rows:
        cid = int(r["cluster"])
        by[cid].append((float(r["x"]), float(r["y"]), int(r["front"])))
        radius[cid] = float(r["circle_radius"])
    n = max(len(by), 1)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 3.4), squeeze=False)
    t = np.linspace(0, 2 * np.pi, 361)
    for ax, cid in zip(axes[0], sorted(by)):
        pts = np.array(by[cid])
        ax.plot(np.cos(t), np.sin(t), color="0.6", lw=0.8)
        ax.plot(radius[cid] * np.cos(t), radius[cid] * np.sin(t), color="k", lw=1.0)
        front = pts[:, 2] > 0
        ax.scatter(pts[front, 0], pts[front, 1], s=6)
        ax.scatter(pts[~front, 0], pts[~front, 1], s=6, facecolors="none", edgecolors="C1")
        ax.set_aspect("equal")
        ax.set_xlim(-1.05, 1.05)
        ax.set_ylim(-1.05, 1.05)
        ax.set_title(f"cluster {cid}")
        ax.set_xticks([])
        ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_from_csv(out_dir):
    """Render ``variance.svg`` and ``projection.svg`` next to their CSVs."""
    paths = {}
    vpath = os.path.join(out_dir, "variance.csv")
    ppath = os.path.join(out_dir, "projection.csv")
    if os.path.exists(vpath):
        paths["variance_svg"] = os.path.join(out_dir, "variance.svg")
        variance_plot(_read(vpath), paths["variance_svg"])
    if os.path.exists(ppath):
        paths["projection_svg"] = os.path.join(out_dir, "projection.svg")
        projection_plot(_read(ppath), paths["projection_svg"])
    return paths
