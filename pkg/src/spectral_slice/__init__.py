"""spectral-slice: contour-integration eigensolver for interior eigenvalues.

Eigenpairs of ``A x = lam B x`` (and polynomial ``sum_k lam^k A_k x = 0``)
inside an interval or ellipse are computed by filtering a random subspace
with a quadrature approximation of the spectral projector, followed by
Rayleigh-Ritz.  Dense and CSR drivers sit on top of a reverse-communication
kernel that can also be driven by user code.
"""

from .contour import (GAUSS, TRAPEZOIDAL, Closure, ContourRule, CustomGeometry, custom_contour,
                      filter_value, gauss_legendre, general_contour, hermitian_contour)
from .core import (Config, CsrMatrix, DenseMatrix, EigResult, Ellipse, FeastError, Form, Info,
                   Interval, ProblemKind, Structure, default_config, describe_info,
                   expand_uplo, validate)
from .drivers import (solve, solve_dense_general, solve_dense_hermitian, solve_polynomial,
                      solve_sparse, stochastic_count, subspace_only)
from .kernel import (Action, Job, rci_general, rci_general_step, rci_hermitian,
                     rci_hermitian_step, rci_polynomial, rci_polynomial_step)

__version__ = "0.1.0"

__all__ = [
    "GAUSS", "TRAPEZOIDAL", "Closure", "ContourRule", "CustomGeometry", "custom_contour",
    "filter_value", "gauss_legendre", "general_contour", "hermitian_contour",
    "Config", "CsrMatrix", "DenseMatrix", "EigResult", "Ellipse", "FeastError", "Form", "Info",
    "Interval", "ProblemKind", "Structure", "default_config", "describe_info", "expand_uplo",
    "validate",
    "solve", "solve_dense_general", "solve_dense_hermitian", "solve_polynomial", "solve_sparse",
    "stochastic_count", "subspace_only",
    "Action", "Job", "rci_general", "rci_general_step", "rci_hermitian", "rci_hermitian_step",
    "rci_polynomial", "rci_polynomial_step",
]
