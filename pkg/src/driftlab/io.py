"""File outputs and config loading.

Every artifact (CSV curve, JSONL rows, JSON summary) is stamped with a short
hash of the fully-resolved run configuration so downstream consumers can tell
which config produced which file.  CSV files carry the hash in a leading
``# config_hash=...`` comment line; JSONL files in a first meta record; JSON
summaries in a ``config_hash`` field.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
from fractions import Fraction

import numpy as np

from .errors import ConfigError


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"not JSON-serializable: {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Key-sorted, whitespace-free JSON; the hashing pre-image."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      default=_jsonable)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()[:16]


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    return cfg


def _ensure_dir(path: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)


def write_json(path: str, payload: dict, *, config: dict = None) -> None:
    _ensure_dir(path)
    out = dict(payload)
    if config is not None:
        out["config_hash"] = config_hash(config)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def write_csv(path: str, rows, *, config: dict = None) -> None:
    """Write rows (first row = header) with an optional hash comment line."""
    _ensure_dir(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if config is not None:
            fh.write(f"# config_hash={config_hash(config)}\n")
        csv.writer(fh).writerows(rows)


def write_jsonl(path: str, rows, *, config: dict = None) -> None:
    _ensure_dir(path)
    with open(path, "w", encoding="utf-8") as fh:
        if config is not None:
            fh.write(json.dumps({"meta": True,
                                 "config_hash": config_hash(config)}) + "\n")
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, default=_jsonable) + "\n")


def read_csv(path: str):
    """Read a curve CSV back: (header, rows-as-strings, meta dict)."""
    meta = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if first.startswith("# "):
            for part in first[2:].strip().split():
                if "=" in part:
                    k, v = part.split("=", 1)
                    meta[k] = v
        else:
            fh.seek(0)
        reader = csv.reader(fh)
        header = next(reader)
        rows = [tuple(r) for r in reader]
    return header, rows, meta
