"""Command line for rendering figure analogues from pipeline CSVs.

Exit codes: 0 success, 2 bad input (missing file or column, wrong arity).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .figures import FIGURES, FigureSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nkfigs", description=__doc__)
    parser.add_argument("figure", choices=FIGURES, help="which figure analogue to render")
    parser.add_argument(
        "--input", action="append", required=True,
        help="input CSV (repeat for figures with several inputs, e.g. fig3)",
    )
    parser.add_argument("--output", required=True, help="output image path (.svg or .pdf preferred)")
    parser.add_argument("--title", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = FigureSpec(
            figure=args.figure,
            inputs=tuple(Path(p) for p in args.input),
            output=Path(args.output),
            title=args.title,
        )
        path = render(spec)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
