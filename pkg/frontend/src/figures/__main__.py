"""Command line front door: python -m figures render --preset <id>
--in <csv> --out <png>.

Exit codes: 0 success, 2 usage or data problem.
"""
from __future__ import annotations

import argparse
import sys

from figures import PRESETS, RenderError, preset_spec, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="figures", description="Render simulator CSV output to PNG")
    sub = parser.add_subparsers(dest="command", required=True)
    ren = sub.add_parser("render", help="render one preset CSV")
    ren.add_argument("--preset", required=True, choices=sorted(PRESETS))
    ren.add_argument("--in", dest="csv_in", required=True,
                     help="input CSV written by the simulator")
    ren.add_argument("--out", required=True, help="output PNG path")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        render(preset_spec(args.preset, args.csv_in), args.out)
    except RenderError as exc:
        print(f"render error: {exc}", file=sys.stderr)
        return 2
    print(args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
