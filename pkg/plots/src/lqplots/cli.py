"""Command line entry point.

    plots render --csv FILE [--csv FILE2 ...] --kind K --out FILE.png
                 [--fit-lo N --fit-hi N] [--column mse_Gamma|mse_phi]
"""

from __future__ import annotations

import argparse
import sys

from .errors import PlotsError
from .figures import KINDS, FigureSpec, render
from .slopes import DEFAULT_FIT_WINDOW


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plots")
    subs = ap.add_subparsers(dest="command", required=True)
    r = subs.add_parser("render")
    r.add_argument("--csv", action="append", required=True,
                   help="aggregate CSV (repeat for comparison kinds)")
    r.add_argument("--kind", choices=KINDS, required=True)
    r.add_argument("--out", required=True, help="output image path")
    r.add_argument("--fit-lo", type=int, default=DEFAULT_FIT_WINDOW[0])
    r.add_argument("--fit-hi", type=int, default=DEFAULT_FIT_WINDOW[1])
    r.add_argument("--column", default="mse_Gamma",
                   choices=("mse_Gamma", "mse_phi"))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(input_csv=args.csv, kind=args.kind, output=args.out,
                      fit_window=(args.fit_lo, args.fit_hi), column=args.column)
    try:
        result = render(spec)
    except PlotsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    line = f"wrote {result.output}"
    if result.slope is not None:
        line += f" (slope {result.slope:.2f})"
    print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
