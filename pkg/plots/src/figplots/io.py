"""CSV ingestion for the figN curve schema."""

from __future__ import annotations

import csv
import math
import os
import re

REQUIRED = ("L", "t_numerator", "t_denominator", "s")
OPTIONAL = ("stderr_s",)

_NAME_RE = re.compile(r"fig\d+_([0-9.eE+-]+)_\d+\.csv$")


class SchemaError(ValueError):
    """The CSV does not conform to the figN curve schema."""


def eta_from_filename(path: str) -> float | None:
    m = _NAME_RE.search(os.path.basename(path))
    if not m:
        return None
    try:
        return float(m.group(1))
    except ValueError:
        return None


def read_curve(path: str, eta: float | None = None) -> dict:
    """Read one figN CSV into a plain dict of columns.

    Raises SchemaError naming the offending column on a missing required
    column or a value that does not parse; rows with a non-finite ``s``
    (censored targets) are dropped.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        for col in REQUIRED:
            if col not in header:
                raise SchemaError(f"{path}: missing required column {col!r}")
        for col in header:
            if col not in REQUIRED + OPTIONAL:
                raise SchemaError(f"{path}: unexpected column {col!r}")
        idx = {col: header.index(col) for col in header}
        columns: dict[str, list[float]] = {col: [] for col in header}
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{line_no}: expected {len(header)} fields")
            for col in header:
                try:
                    value = float(row[idx[col]])
                except ValueError:
                    raise SchemaError(
                        f"{path}:{line_no}: column {col!r} is not numeric"
                    ) from None
                columns[col].append(value)

    keep = [i for i, v in enumerate(columns["s"]) if math.isfinite(v)]
    curve = {col: [vals[i] for i in keep] for col, vals in columns.items()}
    if "stderr_s" not in curve:
        curve["stderr_s"] = None
    curve["eta"] = eta if eta is not None else eta_from_filename(path)
    curve["path"] = path
    return curve
