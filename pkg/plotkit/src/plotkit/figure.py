"""Figure assembly: one panel per input trace, median lines with IQR bands."""

from __future__ import annotations

import os
from dataclasses import dataclass

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .traces import (
    SERIES_COLUMNS,
    Trace,
    crosscheck_summary,
    load_summary,
    per_shot_stats,
    read_trace,
    series_present,
)

# Everything the output depends on is pinned here so that rendering the same
# spec twice gives the same bytes: fixed ids via the hash salt, text kept as
# text instead of font-dependent glyph outlines, no timestamp metadata (see
# render). Colors are per series, not per draw order, so a series keeps its
# color across panels and specs.
_STYLE = {
    "svg.hashsalt": "plotkit",
    "svg.fonttype": "none",
    "font.family": "DejaVu Sans",
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.framealpha": 0.9,
}

_SERIES_COLORS = {
    "mean_fidelity": "#1f77b4",
    "pure_optimum_fidelity": "#2ca02c",
    "fvg_bound": "#9467bd",
    "super_analytic_bound": "#ff7f0e",
    "super_exact_bound": "#d62728",
}


@dataclass(frozen=True)
class PlotSpec:
    """What to draw: which traces, which series, where the file goes.

    ``layout`` is (rows, cols) of the panel grid and defaults to a single
    row. ``ylim`` bounds the fidelity axis; by default the axis follows the
    data.
    """

    inputs: tuple[str, ...]
    output: str
    series: tuple[str, ...] = ("mean_fidelity", "super_exact_bound")
    layout: tuple[int, int] | None = None
    ylim: tuple[float, float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        object.__setattr__(self, "series", tuple(self.series))
        if self.layout is not None:
            object.__setattr__(self, "layout", tuple(self.layout))
        if self.ylim is not None:
            object.__setattr__(self, "ylim", tuple(self.ylim))

    def validate(self) -> None:
        if not self.inputs:
            raise ValueError("no input traces")
        if not self.series:
            raise ValueError("no series selected")
        unknown = [s for s in self.series if s not in SERIES_COLUMNS]
        if unknown:
            raise ValueError(
                f"unknown series {unknown}; choose from {sorted(SERIES_COLUMNS)}"
            )
        if len(set(self.series)) != len(self.series):
            raise ValueError("series selected twice")
        if self.layout is not None:
            rows, cols = self.layout
            if rows < 1 or cols < 1:
                raise ValueError(f"layout {self.layout} must be positive")
            if rows * cols < len(self.inputs):
                raise ValueError(
                    f"layout {rows}x{cols} has {rows * cols} panels "
                    f"for {len(self.inputs)} inputs"
                )
        if self.ylim is not None:
            lo, hi = self.ylim
            if not lo < hi:
                raise ValueError(f"ylim {self.ylim} is not increasing")

    def grid(self) -> tuple[int, int]:
        return self.layout if self.layout is not None else (1, len(self.inputs))


def _panel_titles(paths) -> list[str]:
    stems = [os.path.splitext(os.path.basename(p))[0] for p in paths]
    if len(set(stems)) == len(stems):
        return stems
    # runs usually all call the file trace.csv, so pull in the directory name
    return [
        os.path.join(os.path.basename(os.path.dirname(os.path.abspath(p))), s)
        for p, s in zip(paths, stems)
    ]


def _draw_panel(ax, trace: Trace, spec: PlotSpec, title: str) -> None:
    for name in spec.series:
        stats = per_shot_stats(trace, SERIES_COLUMNS[name])
        shots = np.asarray(stats.shots, dtype=float)
        color = _SERIES_COLORS[name]
        # Bands need finite vertices, so NaN stretches (a pure-support bound
        # after every trial left the manifold) are cut out; the median line
        # gets the raw arrays and breaks at NaN on its own.
        band = np.isfinite(stats.q25)
        ax.fill_between(
            shots[band], stats.q25[band], stats.q75[band],
            color=color, alpha=0.25, linewidth=0,
        )
        ax.plot(shots, stats.median, color=color, label=name)
    ax.set_xlabel("shots")
    ax.set_ylabel("average fidelity")
    ax.set_title(title)
    if spec.ylim is not None:
        ax.set_ylim(*spec.ylim)
    ax.legend(loc="lower right")


def render(spec: PlotSpec) -> str:
    """Render the spec to its output file and return the output path.

    Each input trace becomes one panel showing, per selected series, the
    across-trial median against shot count with the quartile range shaded.
    Statistics come from the raw rows; when a summary.json sits next to an
    input it is only used to cross-check them. Raises ValueError for inputs
    that lack a selected series entirely.
    """
    spec.validate()
    traces = []
    for path in spec.inputs:
        trace = read_trace(path)
        for name in spec.series:
            if not series_present(trace, name):
                raise ValueError(f"{path}: series {name} has no values")
        sibling = os.path.join(os.path.dirname(os.path.abspath(path)), "summary.json")
        if os.path.exists(sibling):
            crosscheck_summary(trace, load_summary(sibling))
        traces.append(trace)

    rows, cols = spec.grid()
    with matplotlib.rc_context(_STYLE):
        fig = Figure(figsize=(4.8 * cols, 3.6 * rows), layout="constrained")
        axes = fig.subplots(rows, cols, squeeze=False).ravel()
        titles = _panel_titles(spec.inputs)
        for ax, trace, title in zip(axes, traces, titles):
            _draw_panel(ax, trace, spec, title)
        for ax in axes[len(traces):]:
            ax.set_axis_off()
        out_dir = os.path.dirname(spec.output)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        if spec.output.lower().endswith(".svg"):
            fig.savefig(spec.output, metadata={"Date": None})
        else:
            fig.savefig(spec.output)
    return spec.output
