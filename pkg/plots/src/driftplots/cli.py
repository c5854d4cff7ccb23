"""Console scripts, one per figure kind.

Both take ``--in`` (a curve CSV from the simulator CLI), ``--out`` (image
path) and ``--kind`` (image format).  Exit codes: 0 on success, 2 on bad
input (missing file, schema mismatch, unusable arguments).
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .csvio import SchemaError
from .figures import plot_decay_fit, plot_direction_curves


def _base_parser(description: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--in", dest="infile", required=True, metavar="CSV",
                    help="direction-curve CSV written by the simulator CLI")
    ap.add_argument("--out", required=True, metavar="IMAGE",
                    help="output image path")
    ap.add_argument("--kind", choices=("png", "svg", "pdf"), default="png",
                    help="image format (default: png)")
    ap.add_argument("--title", default=None, help="override the figure title")
    return ap


def direction_main(argv=None) -> int:
    ap = _base_parser("Plot one exceedance curve per block height, "
                      "confidence bands shaded.")
    args = ap.parse_args(argv)
    try:
        plot_direction_curves(args.infile, args.out, kind=args.kind,
                              title=args.title)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out}")
    return 0


def decay_main(argv=None) -> int:
    ap = _base_parser("Fit and plot the log-log decay of the exceedance "
                      "at a probe threshold across heights.")
    ap.add_argument("--eps", default="0",
                    help="probe offset above --v-plus; fractions OK (default 0)")
    ap.add_argument("--v-plus", dest="v_plus", default="0",
                    help="direction estimate the offset is measured from "
                         "(not in the CSV, so supplied here; default 0)")
    args = ap.parse_args(argv)
    try:
        eps = float(Fraction(args.eps))
        v_plus = float(Fraction(args.v_plus))
    except (ValueError, ZeroDivisionError):
        print(f"error: bad --eps/--v-plus: {args.eps!r}, {args.v_plus!r}",
              file=sys.stderr)
        return 2
    try:
        _, fit = plot_decay_fit(args.infile, args.out, eps=eps, v_plus=v_plus,
                                kind=args.kind, title=args.title)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if fit.slope is None:
        print(f"wrote {args.out} (no fit: {fit.degenerate})")
    else:
        print(f"wrote {args.out} (slope {fit.slope:.4f} over "
              f"{len(fit.heights)} heights at v = {fit.v_used:g})")
    return 0
