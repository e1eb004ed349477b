"""Kernel EDMD approximants of the Koopman operator.

Observables evolve through the composition operator f -> f(A(.)).  Its
data-driven approximant interpolates f(A(x_i)) on the centers X; when flow
values of f are unavailable, a second center set Y supplies them through an
extra interpolation, requiring only the offline kernel measurements
k(A(x_i), y_j).  Both variants produce canonical coefficients over X that
can be evaluated anywhere.

All operations taking observable values accept a vector of length N or a
stacked N x p array for p observables at once.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from koopwend.domain import BoxDomain
from koopwend.interpolation import (
    CenterSet,
    KernelFactorization,
    assemble_matrix,
    gram_factorization,
    kernel_apply,
)
from koopwend.wendland import WendlandKernel

Variant = Literal["A-samples", "Y-centers", "X-self"]

# Beyond this many centers the one-step propagation matrix is not cached;
# multi-step predictions re-assemble kernel blocks per step instead.
PROPAGATION_CACHE_LIMIT = 8192


@dataclass(frozen=True, eq=False)
class FlowSamples:
    """Centers X together with their one-step flow images A(x_i)."""

    X: CenterSet
    AX: np.ndarray
    n_outside: int = 0

    @classmethod
    def create(cls, X: CenterSet, AX, domain_Y: Optional[BoxDomain] = None) -> FlowSamples:
        AX = np.atleast_2d(np.asarray(AX, dtype=float))
        if AX.shape != X.points.shape:
            raise ValueError(f"flow images must have shape {X.points.shape}, got {AX.shape}")
        n_outside = 0
        if domain_Y is not None:
            inside = domain_Y.contains(AX, atol=1e-12)
            n_outside = int(np.sum(~inside))
            if n_outside:
                warnings.warn(
                    f"{n_outside} of {len(X)} flow images fall outside the declared "
                    "image domain; the center sets do not cover the dynamics there",
                    stacklevel=2,
                )
        AX = np.ascontiguousarray(AX)
        AX.setflags(write=False)
        return cls(X=X, AX=AX, n_outside=n_outside)


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    """Factorized kernel matrices needed to apply the approximants."""

    samples: FlowSamples
    kernelX: WendlandKernel
    factX: KernelFactorization
    Y: Optional[CenterSet] = None
    kernelY: Optional[WendlandKernel] = None
    factY: Optional[KernelFactorization] = None
    K_AX_Y: Optional[np.ndarray] = None
    _propagation: list = field(default_factory=list, repr=False)

    @property
    def X(self) -> CenterSet:
        return self.samples.X

    @property
    def n(self) -> int:
        return len(self.samples.X)

    def propagation_matrix(self) -> np.ndarray:
        """One-step coefficient propagation, the solve of K_{X,X} against K_{A(X),X}.

        Formed once and cached; multi-step predictions apply it repeatedly to
        coefficient vectors instead of taking explicit matrix powers.
        """
        if not self._propagation:
            K_AX_X = assemble_matrix(self.kernelX, self.samples.AX, self.X)
            self._propagation.append(self.factX.solve(K_AX_X))
        return self._propagation[0]

    def propagate(self, alpha: np.ndarray) -> np.ndarray:
        """Apply one coefficient-propagation step to alpha."""
        if self.n > PROPAGATION_CACHE_LIMIT:
            return self.factX.solve(kernel_apply(self.kernelX, self.samples.AX, self.X, alpha))
        return self.propagation_matrix() @ alpha


def build_model(
    kernelX: WendlandKernel,
    samples: FlowSamples,
    Y: Optional[CenterSet] = None,
    kernelY: Optional[WendlandKernel] = None,
    keep_matrices: bool = True,
) -> KoopmanModel:
    """Assemble and factorize everything the approximants need.

    ``Y`` is optional; without it only the flow-value variant is available.
    A distinct kernel may be used on the image side as long as the spatial
    dimension matches.  ``keep_matrices=False`` drops the Gram matrices after
    factorization (large-grid path).
    """
    factX = gram_factorization(kernelX, samples.X, keep_matrix=keep_matrices)
    factY = None
    K_AX_Y = None
    if Y is not None:
        kernelY = kernelY or kernelX
        if kernelY.d != kernelX.d:
            raise ValueError("kernels on X and Y must share the spatial dimension")
        factY = gram_factorization(kernelY, Y, keep_matrix=keep_matrices)
        K_AX_Y = assemble_matrix(kernelY, samples.AX, Y)
    elif kernelY is not None:
        raise ValueError("kernelY given without a Y center set")
    return KoopmanModel(
        samples=samples,
        kernelX=kernelX,
        factX=factX,
        Y=Y,
        kernelY=kernelY,
        factY=factY,
        K_AX_Y=K_AX_Y,
    )


@dataclass(frozen=True, eq=False)
class PredictionCoefficients:
    """Canonical coefficients over X of one or more predicted observables."""

    alpha: np.ndarray
    steps: int
    variant: Variant
    model: KoopmanModel = field(repr=False)


def _require_Y(model: KoopmanModel):
    if model.Y is None or model.factY is None or model.K_AX_Y is None:
        raise ValueError("model was built without a Y center set")


def _check_values(values, n: int, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim not in (1, 2) or values.shape[0] != n:
        raise ValueError(f"expected {n} {what}, got shape {values.shape}")
    return values


def kedmd_matrix(model: KoopmanModel) -> np.ndarray:
    """Canonical-basis matrix of the approximant, K_{X,X}^{-1} K_{A(X),Y}."""
    _require_Y(model)
    return model.factX.solve(model.K_AX_Y)


def matrix_rep(model: KoopmanModel, basis: str = "canonical") -> np.ndarray:
    """Matrix of the approximant in the canonical or Lagrange basis."""
    _require_Y(model)
    if basis == "canonical":
        return kedmd_matrix(model)
    if basis == "lagrange":
        return model.factY.solve(model.K_AX_Y.T).T
    raise ValueError(f"unknown basis {basis!r}")


def apply_from_flow_values(model: KoopmanModel, fA) -> PredictionCoefficients:
    """Approximant from flow measurements f(A(x_i)): interpolate them on X."""
    fA = _check_values(fA, model.n, "flow values")
    alpha = model.factX.solve(fA)
    return PredictionCoefficients(alpha=alpha, steps=1, variant="A-samples", model=model)


def apply_from_Y_values(model: KoopmanModel, fY) -> PredictionCoefficients:
    """Approximant from values f(y_j) at user-chosen centers only.

    Interpolates f on Y first, reads that interpolant off at the flow images
    through the offline kernel measurements, then interpolates on X.
    """
    _require_Y(model)
    fY = _check_values(fY, len(model.Y), "values on Y")
    alpha = model.factX.solve(model.K_AX_Y @ model.factY.solve(fY))
    return PredictionCoefficients(alpha=alpha, steps=1, variant="Y-centers", model=model)


def multistep_from_flow_values(model: KoopmanModel, fA, n: int) -> PredictionCoefficients:
    """n-step prediction from flow values, via repeated coefficient propagation."""
    if n < 1:
        raise ValueError("step count must be a positive integer")
    alpha = apply_from_flow_values(model, fA).alpha
    for _ in range(n - 1):
        alpha = model.propagate(alpha)
    return PredictionCoefficients(alpha=alpha, steps=n, variant="A-samples", model=model)


def multistep_self(model: KoopmanModel, fX, n: int) -> PredictionCoefficients:
    """n-step prediction requiring only values f(x_i) at the centers themselves."""
    if n < 1:
        raise ValueError("step count must be a positive integer")
    fX = _check_values(fX, model.n, "center values")
    alpha = model.factX.solve(fX)
    for _ in range(n):
        alpha = model.propagate(alpha)
    return PredictionCoefficients(alpha=alpha, steps=n, variant="X-self", model=model)


def predict(coeffs: PredictionCoefficients, Z) -> np.ndarray:
    """Evaluate the predicted observable(s) at query points."""
    model = coeffs.model
    return kernel_apply(model.kernelX, Z, model.X, coeffs.alpha)
