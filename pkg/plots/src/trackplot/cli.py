"""plot_track command line."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .logfile import LogFormatError
from .render import PlotSpec, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plot_track", description="Render a tracking run log as a figure"
    )
    parser.add_argument("--log", type=Path, required=True, help="estimates table")
    parser.add_argument("--truth", type=Path, help="ground-truth table to overlay")
    parser.add_argument("--scans", type=Path, help="scan file for measurement points")
    parser.add_argument("--stride", type=int, default=25, help="draw every n-th frame")
    parser.add_argument("--out", type=Path, required=True, help="output PNG path")
    parser.add_argument("--xlim", type=float, nargs=2, metavar=("LO", "HI"))
    parser.add_argument("--ylim", type=float, nargs=2, metavar=("LO", "HI"))
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    limits = None
    if args.xlim and args.ylim:
        limits = (args.xlim[0], args.xlim[1], args.ylim[0], args.ylim[1])
    try:
        spec = PlotSpec(
            log_path=args.log,
            out_path=args.out,
            truth_path=args.truth,
            scans_path=args.scans,
            stride=args.stride,
            axis_limits=limits,
            dpi=args.dpi,
        )
        out = render(spec)
    except (LogFormatError, FileNotFoundError, ValueError) as exc:
        print(f"plot_track: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
