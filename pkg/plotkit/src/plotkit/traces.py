"""Reading and summarizing fidbench trace files.

A trace is the CSV written by ``fidbench run``: one row per reported shot
count per trial, columns in the fixed order of TRACE_COLUMNS. Two cell
conventions matter here. An empty cell means the quantity is undefined for
that row (the pure-support bound once a posterior leaves the pure manifold)
and is skipped when aggregating. A ``nan`` cell marks a collapsed trial;
such rows are kept by the parser but excluded from every statistic, matching
what the run itself puts in summary.json.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

TRACE_COLUMNS = (
    "trial",
    "shot",
    "mean_fidelity_to_truth",
    "pure_optimum_fidelity_to_truth",
    "fvg_bound",
    "super_analytic_bound",
    "super_exact_bound",
    "mean_estimator_value",
    "sigma_sharp_is_state",
    "ess",
)

# Series names accepted in a PlotSpec, mapped to the trace column that backs
# them. The two fidelity curves drop the "_to_truth" suffix; bound names are
# column names already.
SERIES_COLUMNS = {
    "mean_fidelity": "mean_fidelity_to_truth",
    "pure_optimum_fidelity": "pure_optimum_fidelity_to_truth",
    "fvg_bound": "fvg_bound",
    "super_analytic_bound": "super_analytic_bound",
    "super_exact_bound": "super_exact_bound",
}

_INT_COLUMNS = ("trial", "shot")
_BOOL_COLUMNS = ("sigma_sharp_is_state",)


@dataclass(frozen=True)
class Trace:
    """Parsed trace file: every row the run wrote, in file order."""

    path: str
    rows: tuple[dict, ...]

    def live_rows(self) -> list[dict]:
        """Rows that carry data, with collapse markers dropped."""
        return [r for r in self.rows if not math.isnan(r["mean_fidelity_to_truth"])]

    def shots(self) -> list[int]:
        return sorted({r["shot"] for r in self.live_rows()})


def _parse_cell(column: str, text: str, path: str, line: int):
    try:
        if column in _INT_COLUMNS:
            return int(text)
        if column in _BOOL_COLUMNS:
            if text == "true":
                return True
            if text == "false":
                return False
            raise ValueError(f"expected true/false, got {text!r}")
        if text == "":
            return None
        return float(text)
    except ValueError as exc:
        raise ValueError(f"{path}:{line}: bad {column} cell: {exc}") from None


def read_trace(path) -> Trace:
    """Parse a trace CSV, checking the header against TRACE_COLUMNS.

    Raises ValueError when columns are missing or reordered and when the file
    has no data rows.
    """
    path = str(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file")
        if tuple(header) != TRACE_COLUMNS:
            missing = [c for c in TRACE_COLUMNS if c not in header]
            if missing:
                raise ValueError(f"{path}: missing columns {missing}")
            raise ValueError(
                f"{path}: column order {header} does not match {list(TRACE_COLUMNS)}"
            )
        rows = []
        for line, cells in enumerate(reader, start=2):
            if len(cells) != len(TRACE_COLUMNS):
                raise ValueError(
                    f"{path}:{line}: expected {len(TRACE_COLUMNS)} cells, got {len(cells)}"
                )
            rows.append(
                {
                    col: _parse_cell(col, text, path, line)
                    for col, text in zip(TRACE_COLUMNS, cells)
                }
            )
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Trace(path=path, rows=tuple(rows))


@dataclass(frozen=True)
class ShotStats:
    """Per-shot quartiles of one column across trials."""

    shots: list[int]
    q25: np.ndarray
    median: np.ndarray
    q75: np.ndarray


def per_shot_stats(trace: Trace, column: str) -> ShotStats:
    """Quartiles of ``column`` across trials at each reported shot count.

    Shots are those where at least one trial is alive. Cells that are empty
    in the file are skipped; a shot where every surviving trial has an empty
    cell gets NaN in all three outputs.
    """
    if column not in TRACE_COLUMNS:
        raise ValueError(f"unknown column {column!r}")
    live = trace.live_rows()
    shots = trace.shots()
    q25 = np.full(len(shots), math.nan)
    median = np.full(len(shots), math.nan)
    q75 = np.full(len(shots), math.nan)
    by_shot = {s: [] for s in shots}
    for row in live:
        value = row[column]
        if value is not None:
            by_shot[row["shot"]].append(value)
    for i, shot in enumerate(shots):
        vals = by_shot[shot]
        if vals:
            q25[i], median[i], q75[i] = np.percentile(vals, [25.0, 50.0, 75.0])
    return ShotStats(shots=shots, q25=q25, median=median, q75=q75)


def series_present(trace: Trace, series: str) -> bool:
    """Whether any live row carries a value for the series."""
    column = SERIES_COLUMNS[series]
    return any(row[column] is not None for row in trace.live_rows())


def _close(recomputed: float, stored, tol: float) -> bool:
    if stored is None:
        return math.isnan(recomputed)
    if math.isnan(recomputed):
        return False
    return abs(recomputed - stored) <= tol


def crosscheck_summary(trace: Trace, summary: dict, tol: float = 1e-9) -> None:
    """Verify that quartiles recomputed from raw rows match a summary dict.

    The summary is the parsed summary.json written next to the trace by the
    run. Raises ValueError on the first disagreement beyond ``tol``; the
    statistics here are always the recomputed ones, the summary is only a
    check against stale or hand-edited inputs.
    """
    shots = trace.shots()
    if summary.get("shots") != shots:
        raise ValueError(
            f"{trace.path}: summary lists shots {summary.get('shots')}, trace has {shots}"
        )
    for column in TRACE_COLUMNS:
        stored = summary.get(column)
        if not isinstance(stored, dict):
            continue
        stats = per_shot_stats(trace, column)
        for key, values in (("q25", stats.q25), ("median", stats.median), ("q75", stats.q75)):
            kept = stored.get(key)
            if kept is None or len(kept) != len(shots):
                raise ValueError(f"{trace.path}: summary {column}.{key} has wrong length")
            for i, shot in enumerate(shots):
                if not _close(values[i], kept[i], tol):
                    raise ValueError(
                        f"{trace.path}: {column} {key} at shot {shot}: "
                        f"recomputed {float(values[i])!r}, summary has {kept[i]!r}"
                    )


def load_summary(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
