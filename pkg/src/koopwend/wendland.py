"""Compactly supported Wendland radial basis functions.

The radial profile is a piecewise polynomial: start from the truncated
power ``(1 - r)^ell`` and apply ``k`` times the weighted antiderivative
``p(r) -> int_r^1 t p(t) dt``, which raises the degree by two and keeps the
zero at the support boundary.  With ``ell = floor(d/2) + k + 1`` the result
is positive definite on R^d and C^{2k} across the support boundary.

Construction is carried out in exact rational arithmetic so that degree and
boundary-smoothness properties can be asserted with zero tolerance; the
coefficients are converted to floats once for numerical evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from koopwend.errors import KernelConfigError

SUPPORTED_D = range(1, 17)
SUPPORTED_K = range(0, 5)


@dataclass(frozen=True)
class UnivariatePolynomial:
    """Polynomial over exact rationals; ``coeffs[j]`` multiplies ``r**j``.

    The coefficient tuple is normalized: no trailing zeros unless the
    polynomial is identically zero (then a single zero coefficient).
    """

    coeffs: tuple[Fraction, ...]

    def __post_init__(self):
        cs = tuple(Fraction(c) for c in self.coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs = cs[:-1]
        if not cs:
            cs = (Fraction(0),)
        object.__setattr__(self, "coeffs", cs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs == (Fraction(0),)

    def __call__(self, x):
        """Horner evaluation; exact for Fraction input, float otherwise."""
        acc = self.coeffs[-1] if isinstance(x, Fraction) else float(self.coeffs[-1])
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + (c if isinstance(x, Fraction) else float(c))
        return acc

    def __add__(self, other: UnivariatePolynomial) -> UnivariatePolynomial:
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return UnivariatePolynomial(tuple(x + y for x, y in zip(a, b)))

    def __mul__(self, other: UnivariatePolynomial) -> UnivariatePolynomial:
        if self.is_zero or other.is_zero:
            return UnivariatePolynomial((Fraction(0),))
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return UnivariatePolynomial(tuple(out))

    def scale(self, c) -> UnivariatePolynomial:
        c = Fraction(c)
        return UnivariatePolynomial(tuple(c * a for a in self.coeffs))

    def derivative(self) -> UnivariatePolynomial:
        if self.degree == 0:
            return UnivariatePolynomial((Fraction(0),))
        return UnivariatePolynomial(
            tuple(j * c for j, c in enumerate(self.coeffs) if j >= 1)
        )

    def antiderivative(self) -> UnivariatePolynomial:
        """Antiderivative with zero constant term."""
        return UnivariatePolynomial(
            (Fraction(0),) + tuple(c / (j + 1) for j, c in enumerate(self.coeffs))
        )

    def float_coeffs(self) -> np.ndarray:
        return np.array([float(c) for c in self.coeffs])


def base_poly(ell: int) -> UnivariatePolynomial:
    """Expansion of ``(1 - r)**ell``, the truncated-power profile on [0, 1]."""
    if ell < 0:
        raise ValueError("ell must be non-negative")
    return UnivariatePolynomial(
        tuple(Fraction((-1) ** j * math.comb(ell, j)) for j in range(ell + 1))
    )


def apply_I(p: UnivariatePolynomial) -> UnivariatePolynomial:
    """Weighted antiderivative ``q(r) = int_r^1 t p(t) dt`` on [0, 1].

    Raises the degree by two and enforces ``q(1) = 0``; its derivative is
    ``q'(r) = -r p(r)``.
    """
    if p.is_zero:
        return UnivariatePolynomial((Fraction(0),))
    tp = UnivariatePolynomial((Fraction(0), Fraction(1))) * p
    anti = tp.antiderivative()
    one = anti(Fraction(1))
    return UnivariatePolynomial((one,)) + anti.scale(-1)


@dataclass(frozen=True, eq=False)
class WendlandKernel:
    """Radial kernel ``k(x, z) = p(||x - z|| / scale)`` truncated at the scale.

    ``d`` is the spatial dimension the kernel is positive definite on, ``k``
    the smoothness index (the profile is C^{2k} across the support boundary)
    and ``sigma = (d+1)/2 + k`` the Sobolev order of the induced native space.
    """

    d: int
    k: int
    ell: int
    scale: float
    poly: UnivariatePolynomial
    sigma: Fraction
    _fcoeffs: np.ndarray = field(repr=False)

    @property
    def diag(self) -> float:
        """Kernel value at zero distance, ``p(0)``."""
        return float(self.poly.coeffs[0])


def build_wendland(d: int, k: int, scale: float = 1.0) -> WendlandKernel:
    """Construct the minimal-degree compactly supported kernel for (d, k).

    Parameters
    ----------
    d : int
        Spatial dimension, 1 <= d <= 16.  For k = 0 only d >= 3 yields the
        Sobolev native-space identification, so smaller d is rejected.
    k : int
        Smoothness index, 0 <= k <= 4.
    scale : float
        Support radius in state-space units.
    """
    if d not in SUPPORTED_D:
        raise KernelConfigError(f"dimension d={d} outside supported range [1, 16]")
    if k not in SUPPORTED_K:
        raise KernelConfigError(f"smoothness k={k} outside supported range [0, 4]")
    if k == 0 and d < 3:
        raise KernelConfigError(
            f"(d={d}, k=0) violates the hypothesis 'd >= 3 if k = 0' of the "
            "native-space/Sobolev identification"
        )
    if not scale > 0:
        raise KernelConfigError(f"support scale must be positive, got {scale}")
    ell = d // 2 + k + 1
    poly = base_poly(ell)
    for _ in range(k):
        poly = apply_I(poly)
    expected_degree = d // 2 + 3 * k + 1
    assert poly.degree == expected_degree, (poly.degree, expected_degree)
    assert poly.coeffs[0] > 0
    assert poly(Fraction(1)) == 0
    return WendlandKernel(
        d=d,
        k=k,
        ell=ell,
        scale=float(scale),
        poly=poly,
        sigma=Fraction(d + 1, 2) + k,
        _fcoeffs=poly.float_coeffs(),
    )


def _profile_inplace(kern: WendlandKernel, r: np.ndarray) -> np.ndarray:
    """Overwrite an array of distances with kernel profile values."""
    if kern.scale != 1.0:
        np.divide(r, kern.scale, out=r)
    outside = r >= 1.0
    cs = kern._fcoeffs
    acc = np.full_like(r, cs[-1])
    for c in cs[-2::-1]:
        acc *= r
        acc += c
    acc[outside] = 0.0
    r[...] = acc
    return r


def eval_phi(kern: WendlandKernel, r) -> np.ndarray | float:
    """Radial profile ``p(r/scale)`` for r < scale, zero beyond the support."""
    arr = np.array(r, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    _profile_inplace(kern, arr)
    return float(arr[0]) if scalar else arr


def eval_kernel(kern: WendlandKernel, x, z) -> float:
    """Kernel value ``k(x, z)``; symmetric in its point arguments."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if x.shape != (kern.d,) or z.shape != (kern.d,):
        raise ValueError(
            f"points must have dimension {kern.d}, got {x.shape} and {z.shape}"
        )
    return float(eval_phi(kern, float(np.linalg.norm(x - z))))


def smoothness_defect(kern: WendlandKernel, order: int) -> Fraction:
    """Jump of the order-th derivative across the support boundary.

    Computed from exact polynomial derivatives of the inside branch (the
    outside branch is identically zero); expected to vanish for
    ``order <= 2k``.
    """
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    p = kern.poly
    for _ in range(order):
        p = p.derivative()
    return abs(p(Fraction(1))) / Fraction(kern.scale) ** order
