"""Series validation, centring and single-column CSV input/output.

A series is represented as a one-dimensional, read-only ``float64`` array.
Time indices used throughout the package are 1-based: observation ``t``
lives at array position ``t - 1``.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np
from sklearn.utils import check_array

from .exceptions import InputNotFoundError, InvalidSeriesError

__all__ = ["check_series", "demean", "read_series_csv", "write_series_csv", "format_float"]


def check_series(x, *, name="x"):
    """Validate ``x`` and return it as an immutable 1-d float array.

    Raises
    ------
    InvalidSeriesError
        If ``x`` is empty, not one-dimensional or contains NaN/Inf.
    """
    try:
        arr = check_array(
            x, ensure_2d=False, dtype=np.float64, ensure_all_finite=True, copy=True,
            input_name=name,
        )
    except ValueError as exc:
        raise InvalidSeriesError(str(exc)) from exc
    if arr.ndim != 1:
        raise InvalidSeriesError(f"{name} must be one-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def demean(x):
    """Subtract the arithmetic mean."""
    arr = check_series(x)
    out = arr - arr.mean()
    # a second pass removes the rounding residue of the first
    out -= out.mean()
    out.setflags(write=False)
    return out


def format_float(value):
    """17 significant digits, which round-trips any double."""
    return format(float(value), ".17g")


def read_series_csv(path):
    """Read one numeric column, allowing a single header line."""
    path = Path(path)
    if not path.is_file():
        raise InputNotFoundError(f"no such file: {path}")
    text = path.read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise InvalidSeriesError(f"{path} contains no data")
    values = []
    for i, row in enumerate(rows):
        if len(row) != 1:
            raise InvalidSeriesError(f"{path}:{i + 1}: expected one column, got {len(row)}")
        cell = row[0].strip()
        try:
            values.append(float(cell))
        except ValueError:
            if i == 0:
                continue  # header line
            raise InvalidSeriesError(f"{path}:{i + 1}: not a number: {cell!r}") from None
    return check_series(values)


def write_series_csv(path, x, header="value"):
    arr = check_series(x)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header + "\n")
        for v in arr:
            fh.write(format_float(v) + "\n")
    return path
