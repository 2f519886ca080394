"""Delimited result tables with a comment-line metadata preamble.

Format: '#'-prefixed metadata lines (``key: value``; the resolved run
configuration is embedded as one JSON line), a tab-separated header row,
then tab-separated data rows with floats printed at 10 significant digits.
Deterministic by construction: no timestamps, stable key order, fixed
formatting.  These files are the interface consumed by the plotting
package and by downstream analysis.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

__all__ = ["TableError", "write_table", "read_table", "format_value"]

FLOAT_FORMAT = "%.10g"


class TableError(ValueError):
    """Malformed or mismatched table file."""


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if np.isnan(v):
            return "nan"
        return FLOAT_FORMAT % float(v)
    return str(v)


def write_table(path, columns: dict, meta: dict) -> None:
    """Write named columns (equal length) with a metadata preamble."""
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) > 1:
        raise TableError(f"column lengths differ: {sorted(lengths)}")
    n_rows = lengths.pop() if lengths else 0

    lines = []
    for key in meta:
        value = meta[key]
        if isinstance(value, (dict, list, tuple)):
            value = json.dumps(value, sort_keys=True, separators=(",", ":"))
        lines.append(f"# {key}: {value}")
    lines.append("\t".join(names))
    for i in range(n_rows):
        lines.append("\t".join(format_value(a[i]) for a in arrays))
    payload = "\n".join(lines) + "\n"
    tmp = f"{path}.tmp"
    with open(tmp, "w", newline="\n") as fh:
        fh.write(payload)
    os.replace(tmp, path)


@dataclass
class Table:
    meta: dict
    columns: dict

    def __getitem__(self, name):
        return self.columns[name]


def read_table(path) -> Table:
    """Parse a table file back into metadata and typed columns."""
    meta: dict = {}
    header = None
    rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, value = body.split(":", 1)
                    meta[key.strip()] = _parse_meta_value(value.strip())
                continue
            if header is None:
                header = line.split("\t")
                continue
            cells = line.split("\t")
            if len(cells) != len(header):
                raise TableError(
                    f"row has {len(cells)} cells, header has {len(header)}")
            rows.append(cells)
    if header is None:
        raise TableError(f"no header row in {path}")
    columns = {}
    for j, name in enumerate(header):
        raw_col = [r[j] for r in rows]
        columns[name] = _coerce_column(raw_col)
    return Table(meta=meta, columns=columns)


def _parse_meta_value(value: str):
    if value and value[0] in "{[":
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            return value
    return value


def _coerce_column(raw: list):
    if not raw:
        return np.empty(0, dtype=float)
    lowered = [c.lower() for c in raw]
    if all(c in ("true", "false") for c in lowered):
        return np.array([c == "true" for c in lowered])
    try:
        return np.array([float(c) for c in raw])
    except ValueError:
        return np.array(raw, dtype=object)
