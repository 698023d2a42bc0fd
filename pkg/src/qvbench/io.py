"""CSV / JSON emission of result records."""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, fields
from pathlib import Path


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_results(records, fmt: str, path) -> Path:
    """Write same-typed dataclass records as CSV or JSON.

    CSV uses the record type's ``CSV_COLUMNS`` and leaves missing values
    blank; JSON keeps every field and writes explicit nulls.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "csv":
        columns = getattr(type(records[0]), "CSV_COLUMNS", None) or [f.name for f in fields(records[0])]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(columns)
            for r in records:
                w.writerow([_cell(getattr(r, c)) for c in columns])
    elif fmt == "json":
        path.write_text(json.dumps([asdict(r) for r in records], indent=2, allow_nan=True))
    else:
        raise ValueError(f"format must be csv or json, got {fmt!r}")
    return path


def load_results(path, cls) -> list:
    """Read back a JSON file written by :func:`emit_results`."""
    return [cls(**row) for row in json.loads(Path(path).read_text())]


def write_table(rows, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)
    return path
