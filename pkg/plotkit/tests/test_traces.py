import csv
import math

import pytest

from plotkit import (
    TRACE_COLUMNS,
    crosscheck_summary,
    load_summary,
    per_shot_stats,
    read_trace,
    series_present,
)

HEADER = ",".join(TRACE_COLUMNS)

# two trials, trial 1 collapsing at shot 1; trial 0 loses its pure value there
SMALL = f"""{HEADER}
0,0,0.5,0.6,0.9,0.7,0.7,0.55,true,100
0,1,0.6,,0.91,0.72,0.71,0.6,false,80.5
1,0,0.7,0.8,0.92,0.74,0.73,0.65,true,100
1,1,nan,,nan,nan,nan,nan,false,0
"""


def write(tmp_path, text, name="trace.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_cell_typing(tmp_path):
    trace = read_trace(write(tmp_path, SMALL))
    assert len(trace.rows) == 4
    first = trace.rows[0]
    assert first["trial"] == 0 and isinstance(first["trial"], int)
    assert first["shot"] == 0
    assert first["mean_fidelity_to_truth"] == 0.5
    assert first["sigma_sharp_is_state"] is True
    assert first["ess"] == 100.0
    assert trace.rows[1]["pure_optimum_fidelity_to_truth"] is None
    assert trace.rows[1]["sigma_sharp_is_state"] is False
    assert math.isnan(trace.rows[3]["mean_fidelity_to_truth"])


def test_live_rows_drop_collapse_markers(tmp_path):
    trace = read_trace(write(tmp_path, SMALL))
    assert len(trace.live_rows()) == 3
    # shot 1 survives because trial 0 is still alive there
    assert trace.shots() == [0, 1]


def test_missing_column_rejected(tmp_path):
    cols = [c for c in TRACE_COLUMNS if c != "fvg_bound"]
    text = ",".join(cols) + "\n" + "0,0,0.5,0.6,0.7,0.7,0.55,true,100\n"
    with pytest.raises(ValueError, match="missing columns.*fvg_bound"):
        read_trace(write(tmp_path, text))


def test_reordered_columns_rejected(tmp_path):
    cols = list(TRACE_COLUMNS)
    cols[0], cols[1] = cols[1], cols[0]
    text = ",".join(cols) + "\n" + "0,0,0.5,0.6,0.9,0.7,0.7,0.55,true,100\n"
    with pytest.raises(ValueError, match="column order"):
        read_trace(write(tmp_path, text))


def test_empty_inputs_rejected(tmp_path):
    with pytest.raises(ValueError, match="empty file"):
        read_trace(write(tmp_path, "", name="a.csv"))
    with pytest.raises(ValueError, match="no data rows"):
        read_trace(write(tmp_path, HEADER + "\n", name="b.csv"))


def test_malformed_cells_rejected(tmp_path):
    short = HEADER + "\n0,0,0.5\n"
    with pytest.raises(ValueError, match="expected 10 cells"):
        read_trace(write(tmp_path, short, name="short.csv"))
    bad_bool = HEADER + "\n0,0,0.5,0.6,0.9,0.7,0.7,0.55,TRUE,100\n"
    with pytest.raises(ValueError, match="sigma_sharp_is_state"):
        read_trace(write(tmp_path, bad_bool, name="bool.csv"))
    bad_float = HEADER + "\n0,0,abc,0.6,0.9,0.7,0.7,0.55,true,100\n"
    with pytest.raises(ValueError, match="mean_fidelity_to_truth"):
        read_trace(write(tmp_path, bad_float, name="float.csv"))


def test_quartiles_match_hand_interpolation(tmp_path):
    rows = "\n".join(
        f"{t},0,{v},0.5,0.9,0.7,0.7,0.5,true,10"
        for t, v in enumerate([0.1, 0.2, 0.4, 0.8])
    )
    stats = per_shot_stats(read_trace(write(tmp_path, HEADER + "\n" + rows + "\n")),
                           "mean_fidelity_to_truth")
    # linear interpolation between order statistics:
    # q25 at position 0.75 -> 0.1 + 0.75 * 0.1, median at 1.5, q75 at 2.25
    assert stats.q25[0] == pytest.approx(0.175, abs=1e-15)
    assert stats.median[0] == pytest.approx(0.3, abs=1e-15)
    assert stats.q75[0] == pytest.approx(0.5, abs=1e-15)


def test_stats_skip_blank_cells_and_collapsed_trials(tmp_path):
    trace = read_trace(write(tmp_path, SMALL))
    mean = per_shot_stats(trace, "mean_fidelity_to_truth")
    assert mean.median[0] == pytest.approx(0.6)  # trials 0 and 1
    assert mean.median[1] == pytest.approx(0.6)  # trial 0 only, marker excluded
    assert mean.q25[1] == mean.q75[1] == mean.median[1]
    pure = per_shot_stats(trace, "pure_optimum_fidelity_to_truth")
    assert pure.median[0] == pytest.approx(0.7)
    assert math.isnan(pure.median[1])  # every surviving trial is blank here
    with pytest.raises(ValueError, match="unknown column"):
        per_shot_stats(trace, "no_such_column")


def test_series_present_tracks_blank_columns(tmp_path):
    trace = read_trace(write(tmp_path, SMALL))
    assert series_present(trace, "mean_fidelity")
    assert series_present(trace, "pure_optimum_fidelity")
    all_blank = SMALL.replace("0.6,0.9", ",0.9").replace("0.8,0.92", ",0.92")
    trace = read_trace(write(tmp_path, all_blank, name="blank.csv"))
    assert not series_present(trace, "pure_optimum_fidelity")


def test_round_trip_against_run_output(mixed_run):
    """Every row the run wrote comes back, cell for cell."""
    trace = read_trace(mixed_run / "trace.csv")
    with open(mixed_run / "trace.csv", newline="") as fh:
        raw = list(csv.DictReader(fh))
    assert len(trace.rows) == len(raw)
    for parsed, text_row in zip(trace.rows, raw):
        for col in TRACE_COLUMNS:
            cell = text_row[col]
            value = parsed[col]
            if cell == "":
                assert value is None
            elif col in ("trial", "shot"):
                assert value == int(cell)
            elif col == "sigma_sharp_is_state":
                assert value is (cell == "true")
            elif cell == "nan":
                assert math.isnan(value)
            else:
                assert value == float(cell)


def test_crosscheck_accepts_run_summary(mixed_run):
    trace = read_trace(mixed_run / "trace.csv")
    crosscheck_summary(trace, load_summary(mixed_run / "summary.json"))


def test_crosscheck_rejects_tampered_rows(tmp_path, mixed_run):
    trace = read_trace(mixed_run / "trace.csv")
    shot0 = {r["trial"]: r["mean_fidelity_to_truth"] for r in trace.rows if r["shot"] == 0}
    # push the median-rank trial to the top so the shot-0 median must move
    target = sorted(shot0, key=shot0.get)[len(shot0) // 2]
    lines = (mixed_run / "trace.csv").read_text().splitlines()
    doctored = []
    for line in lines:
        if line.startswith(f"{target},0,"):
            cells = line.split(",")
            cells[2] = "0.95"
            line = ",".join(cells)
        doctored.append(line)
    trace = read_trace(write(tmp_path, "\n".join(doctored) + "\n"))
    summary = load_summary(mixed_run / "summary.json")
    with pytest.raises(ValueError, match="median at shot 0"):
        crosscheck_summary(trace, summary)


def test_crosscheck_rejects_wrong_shots_and_lengths(tmp_path, mixed_run):
    trace = read_trace(mixed_run / "trace.csv")
    summary = load_summary(mixed_run / "summary.json")
    clipped = dict(summary)
    clipped["shots"] = summary["shots"][:-1]
    with pytest.raises(ValueError, match="shots"):
        crosscheck_summary(trace, clipped)
    padded = dict(summary)
    padded["fvg_bound"] = {
        "median": summary["fvg_bound"]["median"][:-1],
        "q25": summary["fvg_bound"]["q25"][:-1],
        "q75": summary["fvg_bound"]["q75"][:-1],
    }
    with pytest.raises(ValueError, match="fvg_bound.*wrong length"):
        crosscheck_summary(trace, padded)
