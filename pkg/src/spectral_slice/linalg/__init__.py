"""Dense and sparse kernels used by the contour solvers."""

from .bicgstab import SolveStats, bicgstab
from .lu import CONJ_TRANSPOSE, NORMAL, LuFactorization, lu_factor, lu_solve
from .reduced import (
    cholesky,
    hessenberg,
    jacobi_eigh,
    polynomial_eig,
    polynomial_linearize,
    reduced_general_eig,
    reduced_hermitian_eig,
    schur_qr,
)
from .sparse import ShiftedCsrOperator, csr_matvec, identity_csr, shifted_csr

__all__ = [
    "SolveStats", "bicgstab", "LuFactorization", "lu_factor", "lu_solve",
    "NORMAL", "CONJ_TRANSPOSE", "cholesky", "hessenberg", "jacobi_eigh", "schur_qr",
    "reduced_hermitian_eig", "reduced_general_eig", "polynomial_linearize",
    "polynomial_eig", "csr_matvec", "shifted_csr", "identity_csr",
    "ShiftedCsrOperator",
]
