"""Plots of fidbench experiment traces: median fidelity curves with IQR bands."""

from .figure import PlotSpec, render
from .traces import (
    SERIES_COLUMNS,
    TRACE_COLUMNS,
    ShotStats,
    Trace,
    crosscheck_summary,
    load_summary,
    per_shot_stats,
    read_trace,
    series_present,
)

__all__ = [
    "PlotSpec",
    "render",
    "SERIES_COLUMNS",
    "TRACE_COLUMNS",
    "ShotStats",
    "Trace",
    "crosscheck_summary",
    "load_summary",
    "per_shot_stats",
    "read_trace",
    "series_present",
]
