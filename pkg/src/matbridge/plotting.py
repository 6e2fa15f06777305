"""Performance curves and report figures.

The SVG curve is written by hand so its polyline maps one-to-one onto the
history records. Raster figures go through matplotlib with the Agg backend.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .training import HISTORY_HEADER, TrainHistory

SVG_WIDTH, SVG_HEIGHT = 640, 400
MARGIN = 60


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def curve_points(hist: TrainHistory) -> list[tuple[float, float]]:
    """Map history records to SVG coordinates (log-scaled y when all values are positive)."""
    if not len(hist):
        raise ConfigurationError("cannot plot an empty history")
    e = np.asarray(hist.epochs, dtype=float)
    p = np.asarray(hist.performance, dtype=float)
    y = np.log10(p) if np.all(p > 0) else p
    w, h = SVG_WIDTH - 2 * MARGIN, SVG_HEIGHT - 2 * MARGIN
    ex = e.max() - e.min() or 1.0
    yspan = y.max() - y.min() or 1.0
    xs = MARGIN + (e - e.min()) / ex * w
    ys = MARGIN + (y.max() - y) / yspan * h
    return list(zip(xs.tolist(), ys.tolist()))


def write_curve_svg(hist: TrainHistory, path, title: str = "") -> None:
    pts = curve_points(hist)
    logy = all(v > 0 for v in hist.performance)
    poly = " ".join(f"{x:.3f},{y:.3f}" for x, y in pts)
    ylabel = "msereg performance" + (" (log10)" if logy else "")
    lo, hi = min(hist.performance), max(hist.performance)
    svg = f"""<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}">
<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>
<rect x="{MARGIN}" y="{MARGIN}" width="{SVG_WIDTH - 2 * MARGIN}" height="{SVG_HEIGHT - 2 * MARGIN}" fill="none" stroke="#999"/>
<text x="{SVG_WIDTH / 2}" y="30" text-anchor="middle" font-size="14">{title}</text>
<text x="{SVG_WIDTH / 2}" y="{SVG_HEIGHT - 15}" text-anchor="middle" font-size="12">epoch ({hist.epochs[0]} to {hist.epochs[-1]})</text>
<text x="15" y="{SVG_HEIGHT / 2}" text-anchor="middle" font-size="12" transform="rotate(-90 15 {SVG_HEIGHT / 2})">{ylabel}: {lo:.4g} to {hi:.4g}</text>
<polyline fill="none" stroke="#1f4e9e" stroke-width="1.5" points="{poly}"/>
</svg>
"""
    Path(path).write_text(svg)


def log_spaced_indices(n: int, points: int = 50) -> list[int]:
    if n <= 0:
        return []
    idx = np.unique(np.round(np.geomspace(1, n, num=min(points, n))).astype(int) - 1)
    out = sorted(set(idx.tolist()) | {0, n - 1})
    return out


def downsample_history(hist: TrainHistory, points: int = 50) -> TrainHistory:
    keep = log_spaced_indices(len(hist), points)
    return TrainHistory([hist.epochs[i] for i in keep], [hist.performance[i] for i in keep],
                        [hist.grad_norm[i] for i in keep], hist.stop_reason)


def write_downsampled_csv(hist: TrainHistory, path, points: int = 50) -> TrainHistory:
    ds = downsample_history(hist, points)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_HEADER)
        for e, p, g in ds.records:
            w.writerow([int(e), repr(float(p)), repr(float(g))])
    return ds


def render_history_png(hist: TrainHistory, path, title: str = "") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(hist.epochs, hist.performance, lw=1.2)
    if all(v > 0 for v in hist.performance):
        ax.set_yscale("log")
    ax.set_xlabel("epoch")
    ax.set_ylabel("msereg performance")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_parity_png(report, names, path) -> None:
    """Predicted vs target scatter, one panel per output column."""
    plt = _pyplot()
    n = len(names)
    fig, axes = plt.subplots(1, n, figsize=(3.0 * n, 3.0), squeeze=False)
    for j, (ax, name) in enumerate(zip(axes[0], names)):
        t, o = report.targets[:, j], report.predictions[:, j]
        lo, hi = min(t.min(), o.min()), max(t.max(), o.max())
        ax.plot([lo, hi], [lo, hi], color="#aaa", lw=0.8)
        ax.scatter(t, o, s=8)
        ax.set_title(name, fontsize=10)
        ax.set_xlabel("target", fontsize=8)
        ax.tick_params(labelsize=7)
    axes[0][0].set_ylabel("prediction", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_sweep_png(rows: list[dict], path) -> None:
    """Final performance per thickness, one line per (mode, transfer)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    groups: dict[tuple, list] = {}
    for r in rows:
        if r.get("final_performance") is None or not math.isfinite(r["final_performance"]):
            continue
        groups.setdefault((r["mode"], r["transfer"]), []).append((r["thickness"], r["final_performance"]))
    for (mode, transfer), pts in groups.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{transfer} ({mode})")
    ax.set_xlabel("wall thickness (mm)")
    ax.set_ylabel("final msereg performance")
    if groups:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
