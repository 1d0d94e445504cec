"""Schema-locked CSV loading.

Each figure kind reads exactly one upstream CSV schema; a header that
differs in any column name or order is rejected with the offending
column named, and a CSV without data rows is an empty-input error. All
numeric parsing is float64.
"""

import csv
from pathlib import Path

SCHEMAS = {
    "dynamics": ("iteration", "mean_avg", "var_avg"),
    "gradflow": ("layer", "timestep", "grad_l2"),
    "train": ("epoch", "step", "train_bpc", "val_bpc", "lr"),
}


class FigureError(Exception):
    """Base error for the rendering scripts."""


class SchemaError(FigureError):
    """CSV header does not match the expected schema."""


class EmptyInputError(FigureError):
    """CSV has a header but no data rows."""


def load_rows(path, schema):
    """Read a CSV and validate its header against a named schema."""
    expected = SCHEMAS[schema]
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path} has no header row") from None
        if tuple(header) != expected:
            bad = [c for c in header if c not in expected]
            missing = [c for c in expected if c not in header]
            detail = []
            if bad:
                detail.append(f"unexpected column(s) {', '.join(bad)}")
            if missing:
                detail.append(f"missing column(s) {', '.join(missing)}")
            if not detail:
                detail.append("columns out of order")
            raise SchemaError(
                f"{path} does not match the {schema} schema "
                f"{expected}: {'; '.join(detail)}"
            )
        rows = [row for row in reader if row]
    if not rows:
        raise EmptyInputError(f"{path} has no data rows")
    return rows


def parse_cell(value):
    """Float value of a cell; None for blanks and non-numeric markers."""
    if value is None or value == "":
        return None
    try:
        return float(value)
    except ValueError:
        return None  # e.g. a DNC marker in a loss column


def curve_label(path):
    return Path(path).stem
