"""Driver entry points."""

from .backend import Backend, drive
from .solvers import (DENSE_FALLBACK_MAX_N, solve, solve_dense_general,
                      solve_dense_hermitian, solve_polynomial, solve_sparse,
                      stochastic_count, subspace_only)

__all__ = ["Backend", "drive", "solve", "solve_dense_general", "solve_dense_hermitian",
           "solve_polynomial", "solve_sparse", "stochastic_count", "subspace_only",
           "DENSE_FALLBACK_MAX_N"]
