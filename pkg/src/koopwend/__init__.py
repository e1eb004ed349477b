"""Koopman operator approximation with compactly supported Wendland kernels.

Learns data-driven approximants of the composition operator f -> f(A(.))
from one-step flow samples, using kernel interpolation in the native space
of a Wendland radial basis function.  Ships the Duffing and Lorenz
benchmark systems plus a harness that measures how the prediction error
decays as the center grid is refined.
"""

from koopwend.wendland import WendlandKernel, build_wendland
from koopwend.domain import BoxDomain
from koopwend.interpolation import CenterSet

__all__ = ["WendlandKernel", "build_wendland", "BoxDomain", "CenterSet"]

__version__ = "0.1.0"
