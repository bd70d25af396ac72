"""render_fig command: figN CSVs in, one styled figure out."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaError, read_curve
from .render import build_figure_spec, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_fig",
        description="Render a speed-up figure from rapidpurify figN CSV files.",
    )
    parser.add_argument("figure", type=int, choices=(1, 2, 3),
                        help="which of the three figures to draw")
    parser.add_argument("--csv", action="append", required=True,
                        help="input curve CSV; repeat for several efficiencies")
    parser.add_argument("--eta", action="append", type=float, default=None,
                        help="efficiency of each CSV, in order (otherwise "
                             "parsed from figN_<eta>_<seed>.csv names)")
    parser.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    if args.eta is not None and len(args.eta) != len(args.csv):
        parser.error("--eta must be given once per --csv")

    curves = []
    for i, path in enumerate(args.csv):
        eta = args.eta[i] if args.eta is not None else None
        try:
            curves.append(read_curve(path, eta=eta))
        except SchemaError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            return 2

    spec = build_figure_spec(args.figure, curves)
    render(spec, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
