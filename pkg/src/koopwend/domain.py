"""Axis-aligned box domains."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box ``(lo_1, hi_1) x ... x (lo_d, hi_d)``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise ValueError("lo and hi must have the same dimension")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError(f"degenerate box: lo={lo} not componentwise below hi={hi}")

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> BoxDomain:
        return cls((lo,) * dim, (hi,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def extents(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.extents))

    def contains(self, points: np.ndarray, atol: float = 0.0) -> np.ndarray:
        """Boolean mask of rows lying inside the closed box (within atol)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo = np.asarray(self.lo) - atol
        hi = np.asarray(self.hi) + atol
        return np.all((pts >= lo) & (pts <= hi), axis=1)

    def expand(self, margin: float) -> BoxDomain:
        lo = tuple(v - margin for v in self.lo)
        hi = tuple(v + margin for v in self.hi)
        return BoxDomain(lo, hi)
