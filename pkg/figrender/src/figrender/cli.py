"""figrender command line: render --recipe fig3.json --in results.csv --out fig3.png"""

from __future__ import annotations

import argparse
import sys

from .recipes import RecipeError, load_recipe
from .render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="figrender")
    sub = parser.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("render", help="render a figure recipe")
    sp.add_argument("--recipe", required=True)
    sp.add_argument("--in", dest="inputs", action="append", default=[],
                    metavar="CSV", help="input CSV (repeat per recipe input)")
    sp.add_argument("--out", help="output PNG (defaults to the recipe's)")
    try:
        args = parser.parse_args(argv)
        recipe = load_recipe(args.recipe)
        out = render(recipe, input_paths=args.inputs, out=args.out)
        print(f"wrote {out}")
        return 0
    except RecipeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
