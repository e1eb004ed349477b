"""Kernel matrices, SPD factorization, and interpolation in the native space.

A set of pairwise-distinct centers X spans the subspace of kernel sections
k(., x_i); interpolation on X solves the symmetric positive definite system
with the Gram matrix K[i, j] = k(x_i, x_j).  Canonical coefficients alpha and
center values f_X are the two coordinate systems used throughout (the Gram
matrix is the change of basis between them).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky
from scipy.linalg.lapack import dpotrf
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from koopwend.domain import BoxDomain
from koopwend.errors import FactorizationError
from koopwend.wendland import WendlandKernel, _profile_inplace

# Relative jitter ladder tried when the plain Cholesky factorization fails.
JITTER_LADDER = (1e-12, 1e-10, 1e-8)

# Centers closer than this (in state-space units) are treated as duplicates.
MIN_SEPARATION = 1e-12

_ASSEMBLY_CHUNK = 16_000_000  # max scratch elements (~128 MB) per assembly block


class CenterSet:
    """Ordered set of pairwise-distinct points in R^d.

    Immutable after construction; caches the minimum pairwise separation and
    optionally carries the box domain the points were drawn from plus the
    uniform-grid geometry that generated them.
    """

    def __init__(self, points, domain: Optional[BoxDomain] = None, grid=None):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise ValueError("centers must form a non-empty N x d array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("centers must be finite")
        if pts.shape[0] > 1:
            dmin, pair = _min_separation(pts)
            if dmin < MIN_SEPARATION:
                raise ValueError(
                    f"near-duplicate centers: rows {pair[0]} and {pair[1]} are "
                    f"separated by {dmin:.3e} (< {MIN_SEPARATION:.0e})"
                )
        else:
            dmin = np.inf
        if domain is not None and not np.all(domain.contains(pts, atol=1e-12)):
            raise ValueError("centers lie outside the declared domain box")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        self.points = pts
        self.separation = float(dmin)
        self.domain = domain
        self.grid = grid

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __repr__(self) -> str:
        return f"CenterSet(n={len(self)}, dim={self.dim}, separation={self.separation:.3g})"


def _min_separation(pts: np.ndarray) -> tuple[float, tuple[int, int]]:
    tree = cKDTree(pts)
    dists, idx = tree.query(pts, k=2)
    j = int(np.argmin(dists[:, 1]))
    return float(dists[j, 1]), (j, int(idx[j, 1]))


def _as_points(obj) -> np.ndarray:
    if isinstance(obj, CenterSet):
        return obj.points
    return np.atleast_2d(np.asarray(obj, dtype=float))


def assemble_matrix(kern: WendlandKernel, Z, X) -> np.ndarray:
    """Rectangular kernel matrix with entry (i, j) = k(z_i, x_j).

    ``Z`` and ``X`` may be CenterSets or plain arrays.  When called with the
    same object twice the result is exactly symmetric (identical arithmetic
    path for (i, j) and (j, i)).
    """
    zp, xp = _as_points(Z), _as_points(X)
    if zp.shape[1] != kern.d or xp.shape[1] != kern.d:
        raise ValueError(
            f"kernel expects dimension {kern.d}, got point sets of dimension "
            f"{zp.shape[1]} and {xp.shape[1]}"
        )
    m, n = zp.shape[0], xp.shape[0]
    out = np.empty((m, n))
    rows = max(1, min(m, _ASSEMBLY_CHUNK // max(n, 1)))
    for start in range(0, m, rows):
        stop = min(start + rows, m)
        block = cdist(zp[start:stop], xp)
        out[start:stop] = _profile_inplace(kern, block)
    return out


@dataclass(frozen=True, eq=False)
class KernelFactorization:
    """Gram matrix together with its (possibly jittered) Cholesky factor.

    ``matrix`` may be dropped (None) on memory-constrained paths where only
    solves are needed; see ``gram_factorization(keep_matrix=False)``.
    """

    matrix: Optional[np.ndarray]
    factor: np.ndarray
    jitter_used: float
    kernel: Optional[WendlandKernel] = None
    centers: Optional[CenterSet] = None

    @property
    def n(self) -> int:
        return self.factor.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve((self.factor, True), rhs)


def factorize(
    K: np.ndarray,
    kernel: Optional[WendlandKernel] = None,
    centers: Optional[CenterSet] = None,
) -> KernelFactorization:
    """Cholesky-factorize a symmetric kernel matrix.

    If the plain factorization fails, retries with diagonal jitter
    ``lam * max(diag)`` for ``lam`` in the jitter ladder, recording the jitter
    that succeeded.  Raises FactorizationError when even the largest jitter
    fails, reporting the minimum pairwise separation if known.
    """
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError("kernel matrix must be square")
    maxdiag = float(np.max(np.diagonal(K)))
    for lam in (0.0,) + JITTER_LADDER:
        jitter = lam * maxdiag
        # Fortran-ordered copy lets LAPACK factorize in place; the original
        # matrix is kept as-is on the factorization record.
        work = K.T.copy(order="F")
        if jitter:
            work[np.diag_indices_from(work)] += jitter
        try:
            factor = cholesky(work, lower=True, overwrite_a=True, check_finite=False)
        except LinAlgError:
            continue
        return KernelFactorization(
            matrix=K, factor=factor, jitter_used=jitter, kernel=kernel, centers=centers
        )
    sep = centers.separation if centers is not None else None
    detail = f"minimum pairwise separation {sep:.3e}" if sep is not None else "separation unknown"
    raise FactorizationError(
        f"Cholesky failed at maximum jitter {JITTER_LADDER[-1]:.0e} * max diagonal; "
        f"this usually signals nearly-coincident centers ({detail})"
    )


def gram_factorization(
    kern: WendlandKernel, X: CenterSet, keep_matrix: bool = True
) -> KernelFactorization:
    """Assemble and factorize the Gram matrix of a center set.

    With ``keep_matrix=False`` the factorization happens in place and the
    Gram matrix is not retained, halving peak memory for large center sets;
    jitter retries then reassemble the matrix.
    """
    if keep_matrix:
        return factorize(assemble_matrix(kern, X, X), kernel=kern, centers=X)
    for lam in (0.0,) + JITTER_LADDER:
        K = assemble_matrix(kern, X, X)
        jitter = lam * kern.diag
        if jitter:
            K[np.diag_indices_from(K)] += jitter
        # K.T is an F-contiguous view, so LAPACK factorizes the buffer in
        # place; a failed attempt corrupts it, hence the reassembly above.
        c, info = dpotrf(K.T, lower=1, overwrite_a=1)
        if info == 0:
            return KernelFactorization(
                matrix=None, factor=c, jitter_used=jitter, kernel=kern, centers=X
            )
    raise FactorizationError(
        f"Cholesky failed at maximum jitter {JITTER_LADDER[-1]:.0e} * diagonal; "
        f"this usually signals nearly-coincident centers "
        f"(minimum pairwise separation {X.separation:.3e})"
    )


@dataclass(frozen=True, eq=False)
class Interpolant:
    """Member of the span of kernel sections at the centers.

    ``alpha`` are canonical coefficients, ``values`` the function values at
    the centers (Lagrange coordinates); they are related through the Gram
    matrix.
    """

    centers: CenterSet
    alpha: np.ndarray
    values: np.ndarray
    kernel: WendlandKernel = field(repr=False)


def interpolate(fact: KernelFactorization, values) -> Interpolant:
    """Unique interpolant through the given center values."""
    values = np.asarray(values, dtype=float)
    if values.shape != (fact.n,):
        raise ValueError(f"expected {fact.n} values, got shape {values.shape}")
    alpha = fact.solve(values)
    if fact.centers is None or fact.kernel is None:
        raise ValueError(
            "factorization carries no center geometry; build it via "
            "gram_factorization to obtain an evaluable interpolant"
        )
    return Interpolant(centers=fact.centers, alpha=alpha, values=values, kernel=fact.kernel)


def kernel_apply(kern: WendlandKernel, Z, X, B: np.ndarray) -> np.ndarray:
    """Product of the kernel matrix K_{Z,X} with a vector or matrix.

    Assembles the matrix in row blocks so the full M x N array is never
    materialized; used for evaluation on large query grids.
    """
    zp, xp = _as_points(Z), _as_points(X)
    if zp.shape[1] != kern.d or xp.shape[1] != kern.d:
        raise ValueError(
            f"kernel expects dimension {kern.d}, got point sets of dimension "
            f"{zp.shape[1]} and {xp.shape[1]}"
        )
    B = np.asarray(B, dtype=float)
    m, n = zp.shape[0], xp.shape[0]
    if B.shape[0] != n:
        raise ValueError(f"operand must have {n} rows, got {B.shape[0]}")
    out = np.empty((m,) + B.shape[1:])
    rows = max(1, min(m, _ASSEMBLY_CHUNK // max(n, 1)))
    for start in range(0, m, rows):
        stop = min(start + rows, m)
        block = cdist(zp[start:stop], xp)
        out[start:stop] = _profile_inplace(kern, block) @ B
    return out


def evaluate(interp: Interpolant, Z) -> np.ndarray:
    """Evaluate the interpolant at new points."""
    return kernel_apply(interp.kernel, Z, interp.centers, interp.alpha)


def project(fact: KernelFactorization, f: Callable[[np.ndarray], np.ndarray]) -> Interpolant:
    """Project a function onto the center span by sampling and interpolating.

    ``f`` receives the full N x d array of centers and must return N values.
    Idempotent on the span: projecting an interpolant's evaluation reproduces
    its coefficients.
    """
    if fact.centers is None:
        raise ValueError("projection requires a factorization with attached centers")
    values = np.asarray(f(fact.centers.points), dtype=float).reshape(-1)
    return interpolate(fact, values)


def native_norm_sq(interp: Interpolant) -> float:
    """Squared native-space norm, ``alpha . values``; clamped at zero."""
    val = float(np.dot(interp.alpha, interp.values))
    if val < 0.0:
        if val < -1e-10:
            warnings.warn(
                f"native norm squared clamped from {val:.3e} to 0; "
                "the factorization may be inaccurate",
                stacklevel=2,
            )
        return 0.0
    return val


def extension_norm_bound(fact: KernelFactorization) -> float:
    """Conditioning diagnostic: sqrt of the absolute entry sum of the inverse.

    Bounds the sup-norm operator norm of the interpolation map extended to
    continuous functions.  Forms the explicit inverse, so intended for
    desk-scale center counts only.
    """
    inv = fact.solve(np.eye(fact.n))
    return float(np.sqrt(np.abs(inv).sum()))


def fill_distance(X: CenterSet, domain: BoxDomain, probe_resolution: float) -> float:
    """Largest distance from any point of the box to its nearest center.

    Maximizes over a uniform probe grid of the given spacing, so the result
    is a lower bound on the true supremum that converges as the resolution
    shrinks.
    """
    if probe_resolution <= 0:
        raise ValueError("probe_resolution must be positive")
    if len(X) < 1:
        raise ValueError("empty center set")
    axes = [
        np.linspace(lo, hi, max(2, int(np.ceil((hi - lo) / probe_resolution)) + 1))
        for lo, hi in zip(domain.lo, domain.hi)
    ]
    tree = cKDTree(X.points)
    worst = 0.0
    grids = np.meshgrid(*axes, indexing="ij")
    probes = np.stack([g.ravel() for g in grids], axis=1)
    for start in range(0, probes.shape[0], 500_000):
        d, _ = tree.query(probes[start : start + 500_000])
        worst = max(worst, float(np.max(d)))
    return worst
