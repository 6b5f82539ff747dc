"""Command line entry point for the report renderer."""

from __future__ import annotations

import argparse
import sys

from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="besov-ks-plot")
    parser.add_argument("--reports", required=True, help="directory with <scenario>.csv/.json")
    parser.add_argument("--out", required=True, help="directory for rendered figures")
    parser.add_argument("--format", choices=("svg", "png"), default="svg")
    args = parser.parse_args(argv)
    paths = render(args.reports, args.out, fmt=args.format)
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
