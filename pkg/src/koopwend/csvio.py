"""CSV reading and writing with locale-independent numeric formatting.

All files are RFC-4180 style: comma-separated, CRLF line endings, '.' as
the decimal separator.  Numbers are written with 17 significant digits so
that doubles round-trip exactly.
"""

from __future__ import annotations

import csv
from typing import Iterable, Optional, Sequence

import numpy as np


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def write_csv(path, rows: Iterable[Sequence], header: Optional[Sequence[str]] = None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        writer.writerows(rows)


def write_points(path, points: np.ndarray) -> None:
    """One point per row, no header; a vector becomes a single column."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    write_csv(path, ([fmt(v) for v in row] for row in arr))


def load_points(path) -> np.ndarray:
    """Read a headerless CSV of floats; returns an N x d array."""
    with open(path, "r", newline="") as fh:
        rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: inconsistent column counts {sorted(widths)}")
    return np.asarray(rows, dtype=float)


def load_values(path) -> np.ndarray:
    """Read a single-column headerless CSV as a vector."""
    arr = load_points(path)
    if arr.shape[1] != 1:
        raise ValueError(f"{path}: expected a single value column, got {arr.shape[1]}")
    return arr[:, 0]
