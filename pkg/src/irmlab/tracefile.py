"""Trace file I/O: CSV with a header row and canonical 18-digit decimals.

Columns are `step,timestamp,utilization` followed by `<strategy>.<field>`
groups. Files are written atomically (temp file in the target directory,
then rename) so partially written traces never exist on disk.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .exceptions import ValidationError


@dataclass
class RecordedTrace:
    """A parsed trace file: header plus rows of canonical cell strings."""

    columns: list[str]
    rows: list[list[str]]

    def column(self, name: str) -> list[str]:
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise ValidationError(f"trace has no column {name!r}") from None
        return [row[idx] for row in self.rows]


def _atomic_write(path, payload: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_trace(trace, path):
    """Write a SimTrace as CSV, atomically."""
    from io import StringIO

    buf = StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace.columns())
    for i in range(len(trace)):
        writer.writerow(trace.row(i))
    _atomic_write(path, buf.getvalue())


def read_trace(path) -> RecordedTrace:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"trace file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            columns = next(reader)
        except StopIteration:
            raise ValidationError(f"trace file {path} is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(columns):
                raise ValidationError(
                    f"{path}:{lineno}: expected {len(columns)} cells, found {len(row)}"
                )
            rows.append(row)
    if not rows:
        raise ValidationError(f"trace file {path} has a header but no data rows")
    return RecordedTrace(columns=columns, rows=rows)


def write_json(record: dict, path):
    """Write a JSON document (metrics summaries, calibration reports) atomically."""
    _atomic_write(path, json.dumps(record, indent=2, sort_keys=False) + "\n")
