"""CSV/JSON emission for result tables."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    return value


def emit_table(rows: Sequence[Mapping], fmt: str, path) -> None:
    """Write homogeneous ``rows`` as CSV (header, 17 significant digits, LF)
    or as a JSON array of objects."""
    if not rows:
        raise ValueError("refusing to write an empty table")
    columns = list(rows[0].keys())
    for row in rows:
        if list(row.keys()) != columns:
            raise ValueError("rows must share the same columns in the same order")
    path = Path(path)
    if fmt == "csv":
        lines = [",".join(columns)]
        lines += [",".join(_cell(row[c]) for c in columns) for row in rows]
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        text = json.dumps([{c: _plain(row[c]) for c in columns} for row in rows], indent=1) + "\n"
    else:
        raise ValueError(f"unknown format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
