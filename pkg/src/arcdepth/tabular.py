"""Delimited table output: TSV or JSON, byte-stable across runs."""

from __future__ import annotations

import json
from pathlib import Path


def format_value(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def write_table(path, header, rows, emit="tsv"):
    """Write a table as TSV (default) or a JSON list of row objects."""
    path = Path(path)
    if emit == "tsv":
        lines = ["\t".join(header)]
        lines += ["\t".join(format_value(v) for v in row) for row in rows]
        path.write_text("\n".join(lines) + "\n")
    elif emit == "json":
        objs = [dict(zip(header, row)) for row in rows]
        path.write_text(json.dumps(objs, indent=1, sort_keys=True,
                                   default=float) + "\n")
    else:
        raise ValueError(f"unknown emit format {emit!r}")
    return path


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True,
                                     default=float) + "\n")
    return Path(path)
