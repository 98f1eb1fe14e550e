"""Report rendering: CSV rows and matplotlib figures written to files.

Every report path pairs delimited output with figures so results can be
inspected without rerunning the pipeline.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .layout import LayoutProposal
from .metrics import MetricsReport
from .strength import StrengthModel, StrengthTrainingSet, predict_strength

CONTRAST_TARGET = 4.5


def write_metrics_csv(report: MetricsReport, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MetricsReport.CSV_HEADER + "\n")
        fh.write(report.csv_row() + "\n")


def render_comparison_figure(
    original: np.ndarray, edited: np.ndarray, report: MetricsReport, path: str
) -> None:
    """Side-by-side originals with a difference heatmap and metric labels."""
    fig, axes = plt.subplots(1, 3, figsize=(12, 4.5))
    axes[0].imshow(original)
    axes[0].set_title("original")
    axes[1].imshow(edited)
    axes[1].set_title("edited")
    diff = np.abs(original - edited).mean(axis=2)
    im = axes[2].imshow(diff, cmap="magma")
    axes[2].set_title("|difference|")
    fig.colorbar(im, ax=axes[2], fraction=0.046)
    for ax in axes:
        ax.set_xticks([])
        ax.set_yticks([])
    fig.suptitle(
        f"PSNR {report.psnr_db:.2f} dB   SSIM {report.ssim:.4f}   "
        f"spectral angle {report.sam_radians:.4f} rad"
    )
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_contrast_figure(report: MetricsReport, path: str) -> None:
    """Before/after WCAG contrast bars against the 4.5 legibility line."""
    fig, ax = plt.subplots(figsize=(5, 4))
    bars = ax.bar(
        ["before", "after"],
        [report.contrast_before, report.contrast_after],
        color=["#888888", "#2a7fff"],
    )
    ax.axhline(CONTRAST_TARGET, color="#cc3333", linestyle="--", label="4.5 target")
    ax.bar_label(bars, fmt="%.2f")
    ax.set_ylabel("WCAG contrast ratio")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_metrics_report(
    original: np.ndarray,
    edited: np.ndarray,
    report: MetricsReport,
    out_dir: str,
) -> list[str]:
    """Write metrics.csv plus the comparison and contrast figures."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "metrics.csv")
    cmp_path = os.path.join(out_dir, "comparison.png")
    bar_path = os.path.join(out_dir, "contrast.png")
    write_metrics_csv(report, csv_path)
    render_comparison_figure(original, edited, report, cmp_path)
    render_contrast_figure(report, bar_path)
    return [csv_path, cmp_path, bar_path]


def render_strength_curve(
    model: StrengthModel,
    path: str,
    data: StrengthTrainingSet | None = None,
) -> None:
    """The fitted norm-to-strength curve, with training points if given."""
    if data is not None:
        lo, hi = min(data.norms), max(data.norms)
    elif model.support_norms:
        lo, hi = min(model.support_norms), max(model.support_norms)
    else:
        lo, hi = 10.0, 30.0
    span = max(hi - lo, 1.0)
    xs = np.linspace(lo - 0.1 * span, hi + 0.1 * span, 256)
    ys = [predict_strength(model, float(x)) for x in xs]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, color="#2a7fff", label=f"fit ({model.backend_id})")
    if data is not None:
        ax.scatter(data.norms, data.strengths, color="#cc3333", zorder=3, label="training")
    ax.set_xlabel("prompt embedding norm")
    ax.set_ylabel("edit strength")
    ax.set_ylim(-0.05, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_layout_preview(
    heat: np.ndarray, proposal: LayoutProposal, path: str
) -> None:
    """Saliency heatmap with proposed placements outlined."""
    fig, ax = plt.subplots(figsize=(6, 6 * heat.shape[0] / max(1, heat.shape[1])))
    ax.imshow(heat, cmap="inferno", vmin=0.0, vmax=1.0)
    for p in proposal.placements:
        x, y, w, h = p.bbox
        ax.add_patch(
            plt.Rectangle((x, y), w, h, fill=False, edgecolor="#4dff88", linewidth=2)
        )
        ax.text(x, y - 2, p.asset_id, color="#4dff88", fontsize=8)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def write_layout_csv(proposal: LayoutProposal, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("asset_id,x,y,w,h,score,degraded\n")
        for p in proposal.placements:
            x, y, w, h = p.bbox
            fh.write(f"{p.asset_id},{x},{y},{w},{h},{p.score:.6f},{int(p.degraded)}\n")
