"""Reader for the simulator's delimited result tables.

The file schema (documented in the simulator's README): '#'-prefixed
``key: value`` metadata lines, a tab-separated header row, tab-separated
data rows.  This package only ever reads these files; it never modifies
them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = ["Table", "SchemaError", "read_table", "require_columns"]


class SchemaError(ValueError):
    """Table metadata or columns do not match the requested figure kind."""


@dataclass(frozen=True)
class Table:
    meta: dict
    columns: dict
    path: str

    def __getitem__(self, name):
        return self.columns[name]

    @property
    def kind(self) -> str:
        return str(self.meta.get("table", ""))

    def __len__(self) -> int:
        if not self.columns:
            return 0
        return len(next(iter(self.columns.values())))


def read_table(path) -> Table:
    meta: dict = {}
    header = None
    rows: list[list[str]] = []
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if ":" in body:
                    key, value = body.split(":", 1)
                    meta[key.strip()] = _meta_value(value.strip())
                continue
            if header is None:
                header = line.split("\t")
                continue
            cells = line.split("\t")
            if len(cells) != len(header):
                raise SchemaError(
                    f"{path}: row with {len(cells)} cells under a "
                    f"{len(header)}-column header")
            rows.append(cells)
    if header is None:
        raise SchemaError(f"{path}: no header row")
    columns = {name: _coerce([r[j] for r in rows])
               for j, name in enumerate(header)}
    return Table(meta=meta, columns=columns, path=str(path))


def require_columns(table: Table, names) -> None:
    missing = [n for n in names if n not in table.columns]
    if missing:
        raise SchemaError(
            f"{table.path}: table kind {table.kind!r} is missing columns "
            f"{missing}")


def _meta_value(value: str):
    if value and value[0] in "{[":
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            return value
    return value


def _coerce(raw: list):
    if not raw:
        return np.empty(0, dtype=float)
    lowered = [c.lower() for c in raw]
    if all(c in ("true", "false") for c in lowered):
        return np.array([c == "true" for c in lowered])
    try:
        return np.array([float(c) for c in raw])
    except ValueError:
        return np.array(raw, dtype=object)
