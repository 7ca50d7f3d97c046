"""CSV/JSON readers for the published fdelab output schemas.

These scripts consume only the documented column layouts; anything else is
a schema mismatch and aborts before any figure is touched.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

PROFILE_COLUMNS = ["r", "f", "fprime", "r2f1m"]
TRACE_COLUMNS = ["s", "g", "w", "phi", "h"]
REPORT_COLUMNS = ["tau", "sup_dist", "l1_dist", "wl1_dist", "center_value", "lambda_env"]
CONTRACTION_COLUMNS = ["tau", "wl1_pair_dist", "dissipation"]


class SchemaMismatch(Exception):
    """Input file does not follow a published fdelab schema."""


def read_csv(path, expected_columns):
    """Read a CSV with the exact expected header into float arrays.

    Empty cells (not-applicable diagnostics) become NaN.
    """
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file") from None
        if header != expected_columns:
            raise SchemaMismatch(
                f"{path}: header {header!r} does not match {expected_columns!r}")
        rows = list(reader)
    if not rows:
        raise SchemaMismatch(f"{path}: no data rows")
    cols = {name: np.empty(len(rows)) for name in expected_columns}
    for i, row in enumerate(rows):
        if len(row) != len(expected_columns):
            raise SchemaMismatch(f"{path}: row {i + 2} has {len(row)} cells")
        for name, cell in zip(expected_columns, row):
            cols[name][i] = float(cell) if cell else np.nan
    return cols


def read_params_json(path):
    """Parameter summary written by the fdelab CLI (params + regime)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if "params" not in doc or "regime" not in doc:
        raise SchemaMismatch(f"{path}: expected 'params' and 'regime' keys")
    return doc
