"""Reading the stamped curve CSVs that the simulator CLI writes.

A curve file is plain CSV with an optional leading ``# config_hash=...``
comment, a header row, and one data row per (H, v) grid point.  Parsing is
deliberately strict: a file that does not carry the documented columns is
rejected with an error naming the first missing column, rather than plotted
half-empty.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from fractions import Fraction

DIRECTION_COLUMNS = ("H", "v", "p_hat", "ci_lo", "ci_hi", "n", "n_certified")


class SchemaError(ValueError):
    """The input file does not match the documented curve schema."""


@dataclass(frozen=True)
class CurvePoint:
    """One (H, v) grid point of a direction curve."""

    H: int
    v: float
    p_hat: float
    ci_lo: float
    ci_hi: float
    n: int
    n_certified: int


def _num(cell: str) -> float:
    try:
        return float(cell)
    except ValueError:
        # exact grid values may be written as fractions ("-1/2")
        return float(Fraction(cell))


def read_direction_csv(path: str) -> tuple[list[CurvePoint], dict]:
    """Parse a direction-curve CSV into points plus its stamp metadata.

    Returns ``(points, meta)`` where ``meta`` holds any ``key=value`` pairs
    from the leading comment line (normally just ``config_hash``).  Raises
    :class:`SchemaError` when the header or a row does not fit the schema.
    """
    meta: dict[str, str] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if first.startswith("#"):
            for part in first.lstrip("#").strip().split():
                if "=" in part:
                    key, val = part.split("=", 1)
                    meta[key] = val
        else:
            fh.seek(0)
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected a curve header") from None
        missing = [c for c in DIRECTION_COLUMNS if c not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing column {missing[0]!r} "
                f"(direction-curve schema is {', '.join(DIRECTION_COLUMNS)})")
        idx = {c: header.index(c) for c in DIRECTION_COLUMNS}
        points = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                points.append(CurvePoint(
                    H=int(row[idx["H"]]),
                    v=_num(row[idx["v"]]),
                    p_hat=_num(row[idx["p_hat"]]),
                    ci_lo=_num(row[idx["ci_lo"]]),
                    ci_hi=_num(row[idx["ci_hi"]]),
                    n=int(row[idx["n"]]),
                    n_certified=int(row[idx["n_certified"]]),
                ))
            except (ValueError, IndexError, ZeroDivisionError) as exc:
                raise SchemaError(f"{path}: line {lineno}: bad row {row!r}: {exc}") from exc
    if not points:
        raise SchemaError(f"{path}: no data rows")
    return points, meta
