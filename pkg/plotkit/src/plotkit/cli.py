"""Command line entry point: plot --in trace.csv --out fig.svg."""

from __future__ import annotations

import argparse
import sys

from .figure import PlotSpec, render
from .traces import SERIES_COLUMNS


def _parse_layout(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected ROWSxCOLS, got {text!r}")


def _parse_ylim(text: str) -> tuple[float, float]:
    try:
        lo, hi = text.split(",")
        return float(lo), float(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO,HI, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="plot",
        description="Render fidbench trace CSVs as median fidelity curves "
        "with interquartile bands, one panel per trace.",
    )
    p.add_argument(
        "--in",
        dest="inputs",
        metavar="TRACE",
        action="append",
        required=True,
        help="trace.csv from a run; repeat for multiple panels",
    )
    p.add_argument("--out", required=True, help="output image path (.svg by default)")
    p.add_argument(
        "--series",
        default="mean_fidelity,super_exact_bound",
        help="comma separated series, from: " + ", ".join(sorted(SERIES_COLUMNS)),
    )
    p.add_argument(
        "--layout",
        type=_parse_layout,
        default=None,
        metavar="ROWSxCOLS",
        help="panel grid (default: one row)",
    )
    p.add_argument(
        "--ylim",
        type=_parse_ylim,
        default=None,
        metavar="LO,HI",
        help="fidelity axis range (default: fit the data)",
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    series = tuple(s.strip() for s in args.series.split(",") if s.strip())
    spec = PlotSpec(
        inputs=tuple(args.inputs),
        output=args.out,
        series=series,
        layout=args.layout,
        ylim=args.ylim,
    )
    try:
        path = render(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
