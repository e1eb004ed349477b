"""Error measurement, convergence-rate estimation, and operator-norm bounds."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from koopwend.domain import BoxDomain
from koopwend.interpolation import CenterSet


@dataclass(frozen=True, eq=False)
class ErrorReport:
    """Pointwise prediction errors over a validation grid, with summaries.

    ``l2_error`` uses midpoint quadrature over the validation cells,
    sqrt(vol(domain)/m * sum of squared per-point errors); without a domain
    the volume defaults to one (plain root mean square).
    """

    sup_error: float
    l2_error: float
    per_point: np.ndarray
    grid_h: float
    kernel: Optional[tuple[int, int]] = None
    variant: Optional[str] = None


@dataclass(frozen=True)
class RateEstimate:
    """Log-log least-squares slope of error against grid resolution."""

    hs: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float


def error_report(
    true_values,
    predicted,
    grid: Optional[CenterSet] = None,
    h: float = float("nan"),
    domain: Optional[BoxDomain] = None,
    kernel: Optional[tuple[int, int]] = None,
    variant: Optional[str] = None,
) -> ErrorReport:
    """Summarize prediction errors on a validation grid.

    ``true_values`` and ``predicted`` are length-m vectors or m x p arrays
    for p observables; the per-point error of a vector-valued observable is
    the Euclidean norm across components.
    """
    t = np.asarray(true_values, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if t.shape != p.shape:
        raise ValueError(f"shape mismatch: true {t.shape} vs predicted {p.shape}")
    diff = p - t
    per_point = np.abs(diff) if diff.ndim == 1 else np.linalg.norm(diff, axis=1)
    if grid is not None and len(grid) != per_point.shape[0]:
        raise ValueError("grid size does not match the number of values")
    if domain is None and grid is not None:
        domain = grid.domain
    vol = domain.volume if domain is not None else 1.0
    m = per_point.shape[0]
    return ErrorReport(
        sup_error=float(per_point.max()),
        l2_error=float(np.sqrt(vol / m * np.sum(per_point**2))),
        per_point=per_point,
        grid_h=float(h),
        kernel=kernel,
        variant=variant,
    )


def convergence_rate(reports: list[ErrorReport], norm: str = "sup") -> RateEstimate:
    """Least-squares slope of log(error) against log(h) across reports."""
    if len(reports) < 2:
        raise ValueError("need at least two reports with distinct h")
    hs = np.array([r.grid_h for r in reports], dtype=float)
    if not np.all(np.diff(hs) < 0):
        raise ValueError("fill distances must be strictly decreasing")
    errs = np.array(
        [r.sup_error if norm == "sup" else r.l2_error for r in reports], dtype=float
    )
    if np.any(errs <= 0):
        raise ValueError("errors must be positive for a log-log fit")
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    return RateEstimate(hs=tuple(hs), errors=tuple(errs), slope=float(slope))


def h1_bound(
    A: Callable[[np.ndarray], np.ndarray],
    samples: CenterSet,
    fd_step: float,
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> float:
    """Sample-based bound on the H^1 operator norm of composition with A.

    Evaluates max(c0, sup ||DA(x)||_F^2 / |det DA(x)|)^(1/2) over the sample
    points, where c0 is the largest 1/|det DA(x)|.  Jacobians come from an
    analytic callback when given, otherwise from central finite differences
    with step ``fd_step`` on the map itself.  A non-positive determinant
    means A is not an orientation-consistent diffeomorphism on the samples
    and raises with the offending point.
    """
    pts = samples.points
    n, d = pts.shape
    if jacobian is not None:
        J = np.asarray(jacobian(pts), dtype=float).reshape(n, d, d)
    else:
        if not fd_step > 0:
            raise ValueError("fd_step must be positive")
        J = np.empty((n, d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = fd_step
            J[:, :, j] = (A(pts + e) - A(pts - e)) / (2.0 * fd_step)
    dets = np.linalg.det(J)
    if np.any(dets <= 0):
        bad = int(np.argmin(dets))
        raise ValueError(
            f"Jacobian determinant {dets[bad]:.3e} <= 0 at sample {pts[bad]}; "
            "the map is not a diffeomorphism there"
        )
    frob_sq = np.sum(J**2, axis=(1, 2))
    c0 = float(np.max(1.0 / dets))
    ratio = float(np.max(frob_sq / dets))
    return float(np.sqrt(max(c0, ratio)))


def error_field_export(report: ErrorReport, grid: CenterSet, path) -> None:
    """Write rows (x_1, ..., x_d, error) for external intensity plotting."""
    if len(grid) != report.per_point.shape[0]:
        raise ValueError("grid size does not match the report")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row, err in zip(grid.points, report.per_point):
            writer.writerow([f"{v:.17g}" for v in row] + [f"{err:.17g}"])
