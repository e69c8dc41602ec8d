"""plot <kind> --in CSV [--in CSV ...] --out IMG

Renders one figure (SVG by default, PNG when the output path ends in .png)
from sweep CSVs, plus a ``<IMG>.json`` sidecar with the extracted
annotations.  Read-only on inputs.
"""

from __future__ import annotations

import argparse
import sys

from .figures import FIGURE_KINDS
from .schema import SchemaMismatch


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    parser.add_argument("kind", choices=sorted(FIGURE_KINDS))
    parser.add_argument("--in", dest="inputs", action="append", required=True, metavar="CSV")
    parser.add_argument("--out", required=True, metavar="IMG")
    args = parser.parse_args(argv)
    try:
        FIGURE_KINDS[args.kind](args.inputs, args.out)
    except SchemaMismatch as exc:
        print(f"schema mismatch: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} and {args.out}.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
