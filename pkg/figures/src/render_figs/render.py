"""Deterministic figure rendering from the toolkit's CSV logs.

Three figure kinds:

* dynamics: mean and variance trajectories, one labeled curve per input
  CSV, two stacked panels;
* heatmap: gradient norm per (layer, timestep), red intensity scaled to
  the per-figure maximum;
* losscurves: training bits-per-character by epoch, one curve per input
  CSV, validation points dashed when present.

Figures use a fixed size and dpi and never touch their inputs, so
rendering the same CSV twice produces identical bytes.
"""

from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schemas import (
    EmptyInputError,
    FigureError,
    curve_label,
    load_rows,
    parse_cell,
)

KINDS = ("dynamics", "heatmap", "losscurves")
DPI = 100
FIGSIZE = (9.0, 6.0)


@dataclass
class FigureJob:
    kind: str
    inputs: list
    output: str
    title: str | None = None
    labels: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FigureError(f"unknown figure kind {self.kind!r}")
        if not self.inputs:
            raise FigureError("at least one input CSV is required")
        if self.kind == "heatmap" and len(self.inputs) != 1:
            raise FigureError("heatmap takes exactly one gradflow CSV")

    def label(self, i):
        return self.labels[i] if i < len(self.labels) else curve_label(self.inputs[i])


def load_gradflow_matrix(path):
    """(layer, timestep) -> norm matrix from one gradflow CSV."""
    rows = load_rows(path, "gradflow")
    layers = sorted({int(float(r[0])) for r in rows})
    steps = sorted({int(float(r[1])) for r in rows})
    matrix = np.zeros((len(layers), len(steps)))
    li = {v: i for i, v in enumerate(layers)}
    ti = {v: i for i, v in enumerate(steps)}
    for r in rows:
        matrix[li[int(float(r[0]))], ti[int(float(r[1]))]] = float(r[2])
    return matrix


def normalize_to_max(matrix):
    """Scale so the largest entry is exactly 1 (all-zero stays zero)."""
    peak = matrix.max()
    return matrix / peak if peak > 0 else matrix.copy()


def _new_axes(n_rows=1):
    fig, axes = plt.subplots(n_rows, 1, figsize=FIGSIZE, dpi=DPI, squeeze=False)
    return fig, [ax for (ax,) in axes]


def _render_dynamics(job):
    fig, (ax_mean, ax_var) = _new_axes(2)
    for i, path in enumerate(job.inputs):
        rows = load_rows(path, "dynamics")
        it = [float(r[0]) for r in rows]
        ax_mean.plot(it, [float(r[1]) for r in rows], label=job.label(i))
        ax_var.plot(it, [float(r[2]) for r in rows], label=job.label(i))
    ax_mean.set_ylabel("mean")
    ax_var.set_ylabel("variance")
    ax_var.set_xlabel("iteration")
    ax_mean.set_title(job.title or "activation dynamics")
    ax_mean.legend()
    ax_var.legend()
    return fig


def _render_heatmap(job):
    matrix = load_gradflow_matrix(job.inputs[0])
    fig, (ax,) = _new_axes(1)
    image = ax.imshow(
        matrix,
        aspect="auto",
        origin="lower",
        cmap="Reds",
        vmin=0.0,
        vmax=matrix.max() if matrix.max() > 0 else 1.0,
        extent=(0.5, matrix.shape[1] + 0.5, 0.5, matrix.shape[0] + 0.5),
    )
    ax.set_xlabel("timestep")
    ax.set_ylabel("layer")
    ax.set_title(job.title or "gradient norm by layer and timestep")
    fig.colorbar(image, ax=ax, label="gradient L2 norm")
    return fig


def _render_losscurves(job):
    fig, (ax,) = _new_axes(1)
    for i, path in enumerate(job.inputs):
        rows = load_rows(path, "train")
        epochs, bpc = [], []
        val_epochs, val_bpc = [], []
        for r in rows:
            train_value = parse_cell(r[2])
            if train_value is not None:
                epochs.append(float(r[0]))
                bpc.append(train_value)
            val_value = parse_cell(r[3])
            if val_value is not None:
                val_epochs.append(float(r[0]))
                val_bpc.append(val_value)
        if not epochs:
            raise EmptyInputError(f"{path} has no numeric train_bpc rows")
        (line,) = ax.plot(epochs, bpc, label=job.label(i))
        if val_epochs:
            ax.plot(
                val_epochs, val_bpc, linestyle="--", marker="o",
                color=line.get_color(), label=f"{job.label(i)} (val)",
            )
    ax.set_xlabel("epoch")
    ax.set_ylabel("bits per character")
    ax.set_title(job.title or "training loss")
    ax.legend()
    return fig


_RENDERERS = {
    "dynamics": _render_dynamics,
    "heatmap": _render_heatmap,
    "losscurves": _render_losscurves,
}


def render(job):
    """Render one figure job to its output path."""
    fig = _RENDERERS[job.kind](job)
    try:
        fig.savefig(job.output, dpi=DPI)
    finally:
        plt.close(fig)
    return job.output
