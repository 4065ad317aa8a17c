"""plot <input.csv> -o <out.(svg|png)>"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .render import PlotDataError, render_curves


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def main(argv: Optional[list[str]] = None) -> int:
    parser = _Parser(prog="cpd-plot")
    parser.add_argument("input", help="benchmark CSV")
    parser.add_argument("-o", "--output", required=True,
                        help="output image (.svg or .png)")
    args = parser.parse_args(argv)
    try:
        render_curves(args.input, args.output)
    except (PlotDataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.output}")
    return 0


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
