"""Batch figure rendering from the command line.

Either pass flags (--input/--output/--kind) or a TOML spec file with one
``[[figure]]`` block per figure.
"""

from __future__ import annotations

import argparse
import sys

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .render import FigureSpec, render
from .tables import SchemaError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="olgfig", description="Render figures from olgdebt tables")
    parser.add_argument("--spec", help="TOML file with [[figure]] blocks")
    parser.add_argument("--input", help="input table path")
    parser.add_argument("--output", help="output image path")
    parser.add_argument("--kind", default="auto",
                        choices=["auto", "grid-heatmap", "path-fan",
                                 "welfare-trajectory"])
    parser.add_argument("--title", default="")
    parser.add_argument("--spaghetti", action="store_true",
                        help="overlay up to 100 sampled paths on fan charts")
    return parser


def specs_from_args(args) -> list[FigureSpec]:
    if args.spec:
        with open(args.spec, "rb") as fh:
            data = tomllib.load(fh)
        blocks = data.get("figure", [])
        if not blocks:
            raise ValueError(f"{args.spec}: no [[figure]] blocks")
        out = []
        for block in blocks:
            out.append(FigureSpec(
                input_path=block["input"], output_path=block["output"],
                kind=block.get("kind", "auto"),
                title=block.get("title", ""),
                xlabel=block.get("xlabel", ""),
                ylabel=block.get("ylabel", ""),
                xlim=tuple(block["xlim"]) if "xlim" in block else None,
                ylim=tuple(block["ylim"]) if "ylim" in block else None,
                spaghetti=bool(block.get("spaghetti", False))))
        return out
    if not args.input or not args.output:
        raise ValueError("need --input and --output (or --spec)")
    return [FigureSpec(input_path=args.input, output_path=args.output,
                       kind=args.kind, title=args.title,
                       spaghetti=args.spaghetti)]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        for spec in specs_from_args(args):
            result = render(spec)
            print(result.output_path)
    except (ValueError, FileNotFoundError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
