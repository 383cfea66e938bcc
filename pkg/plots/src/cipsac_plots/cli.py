"""cipsac-plot: regenerate figures from simulator result CSVs."""

import argparse
import sys

from .figures import FIGURE_KINDS, FigureSpec, SchemaError, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cipsac-plot",
        description="Render a figure from a cipsac results CSV")
    parser.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    parser.add_argument("--in", dest="csv_path", required=True,
                        help="input CSV path")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image path (png)")
    parser.add_argument("--title", default=None)
    parser.add_argument("--dpi", type=int, default=120)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = FigureSpec(kind=args.kind, csv_path=args.csv_path,
                      out_path=args.out_path, title=args.title, dpi=args.dpi)
    try:
        render(spec)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
