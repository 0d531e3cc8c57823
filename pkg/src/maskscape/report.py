"""Evaluation report: flat key=value text plus rendered figure files."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import FormatError, ValidationError


@dataclass(frozen=True)
class EvalReport:
    """Scalar quality summary of one pipeline run; every entry must be finite."""

    nll: float
    vsc_fused: float
    vsc_inpainted: float
    accuracy: tuple  # per novel view, vs oracle labels
    depth_abs_rel: float
    color_consistency: float
    color_consistency_baseline: float
    psnr_mean: float

    def __post_init__(self):
        object.__setattr__(self, "accuracy", tuple(float(a) for a in self.accuracy))
        if not self.accuracy:
            raise ValidationError("need at least one per-view accuracy")
        for name in ("nll", "vsc_fused", "vsc_inpainted", "depth_abs_rel",
                     "color_consistency", "color_consistency_baseline", "psnr_mean"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"report entry {name} is not finite")
        if not all(math.isfinite(a) for a in self.accuracy):
            raise ValidationError("per-view accuracies must be finite")

    @property
    def accuracy_mean(self) -> float:
        return float(np.mean(self.accuracy))


def save_report(path, report: EvalReport) -> None:
    lines = [
        f"nll = {report.nll!r}",
        f"vsc_fused = {report.vsc_fused!r}",
        f"vsc_inpainted = {report.vsc_inpainted!r}",
        f"depth_abs_rel = {report.depth_abs_rel!r}",
        f"color_consistency = {report.color_consistency!r}",
        f"color_consistency_baseline = {report.color_consistency_baseline!r}",
        f"psnr_mean = {report.psnr_mean!r}",
        f"accuracy.mean = {report.accuracy_mean!r}",
    ]
    for k, acc in enumerate(report.accuracy):
        lines.append(f"accuracy.view_{k:02d} = {acc!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_report(path) -> EvalReport:
    values: dict[str, float] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = stripped.partition("=")
        try:
            values[key.strip()] = float(raw)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad number {raw!r}") from exc
    try:
        views = sorted(k for k in values if k.startswith("accuracy.view_"))
        return EvalReport(
            nll=values["nll"],
            vsc_fused=values["vsc_fused"],
            vsc_inpainted=values["vsc_inpainted"],
            accuracy=tuple(values[k] for k in views),
            depth_abs_rel=values["depth_abs_rel"],
            color_consistency=values["color_consistency"],
            color_consistency_baseline=values["color_consistency_baseline"],
            psnr_mean=values["psnr_mean"],
        )
    except KeyError as exc:
        raise FormatError(f"report is missing entry {exc}") from exc


def _plot_loss_log(ax, log, title):
    log = np.asarray(log, dtype=np.float64)
    if log.size:
        ax.plot(log[:, 0], log[:, 1], lw=1.5)
    ax.set_title(title)
    ax.set_xlabel("iteration")
    ax.set_ylabel("loss")


def render_figures(
    fig_dir,
    report: EvalReport,
    field_log=(),
    inpaint_log=(),
    appearance_log=(),
    frames=(),
) -> list[str]:
    """Write summary figures next to the report; returns the file paths."""
    fig_dir = Path(fig_dir)
    fig_dir.mkdir(parents=True, exist_ok=True)
    written = []

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2))
    _plot_loss_log(axes[0], inpaint_log, "inpainter")
    _plot_loss_log(axes[1], field_log, "semantic field")
    _plot_loss_log(axes[2], appearance_log, "appearance")
    fig.tight_layout()
    path = fig_dir / "loss_curves.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(str(path))

    fig, axes = plt.subplots(1, 2, figsize=(8, 3.2))
    axes[0].bar(["fused", "inpainted"], [report.vsc_fused, report.vsc_inpainted],
                color=["#3a7", "#a73"])
    axes[0].set_title("view semantic consistency (lower is better)")
    axes[1].bar(["rendered", "pseudo-GT"],
                [report.color_consistency, report.color_consistency_baseline],
                color=["#3a7", "#a73"])
    axes[1].set_title("cross-view color difference")
    fig.tight_layout()
    path = fig_dir / "consistency.png"
    fig.savefig(path, dpi=110)
    plt.close(fig)
    written.append(str(path))

    if frames:
        cols = min(4, len(frames))
        rows = (len(frames) + cols - 1) // cols
        fig, axes = plt.subplots(rows, cols, figsize=(2.4 * cols, 2.4 * rows), squeeze=False)
        for k in range(rows * cols):
            ax = axes[k // cols][k % cols]
            ax.axis("off")
            if k < len(frames):
                ax.imshow(frames[k].rgb)
                ax.set_title(f"frame {k}", fontsize=8)
        fig.tight_layout()
        path = fig_dir / "frames.png"
        fig.savefig(path, dpi=110)
        plt.close(fig)
        written.append(str(path))
    return written
