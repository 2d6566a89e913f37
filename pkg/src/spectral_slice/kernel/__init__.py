"""Reverse-communication kernels."""

from .common import Action, ConvergenceReport, Job, KernelBase, compute_convergence, orthonormalize
from .general import (GeneralKernel, PolynomialKernel, rci_general, rci_general_step,
                      rci_polynomial, rci_polynomial_step)
from .hermitian import (GAIN_MIN, HermitianKernel, filter_gains, rci_hermitian,
                        rci_hermitian_step)

__all__ = ["Action", "ConvergenceReport", "Job", "KernelBase", "compute_convergence",
           "orthonormalize", "GeneralKernel", "PolynomialKernel", "HermitianKernel",
           "rci_general", "rci_general_step", "rci_polynomial", "rci_polynomial_step",
           "rci_hermitian", "rci_hermitian_step", "filter_gains", "GAIN_MIN"]
