"""fde-figures <kind> <csv...> [--params params.json] --out <stem>."""

from __future__ import annotations

import argparse
import sys

from .io import SchemaMismatch
from .plots import RENDERERS, render


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fde-figures",
                                 description="render figures from fdelab outputs")
    ap.add_argument("kind", choices=sorted(RENDERERS))
    ap.add_argument("csvs", nargs="+", help="input CSV paths")
    ap.add_argument("--params", help="parameter JSON for guide lines")
    ap.add_argument("--out", required=True, help="output stem (writes .png and .svg)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = render(args.kind, args.csvs, args.out, args.params)
    except (SchemaMismatch, FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    for path in result["files"]:
        sys.stdout.write(path + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
