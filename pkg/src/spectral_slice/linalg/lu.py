"""Dense LU with partial pivoting, double or single precision.

``PA = LU`` is stored packed (unit lower L below the diagonal, U on and
above) with LAPACK-style pivots: row ``k`` was swapped with row ``piv[k]``.
One factorization serves both ``A x = b`` and ``A^H x = b``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._accel import njit, select
from ..core import FeastError, Info

__all__ = ["LuFactorization", "lu_factor", "lu_solve", "NORMAL", "CONJ_TRANSPOSE"]

NORMAL = "N"
CONJ_TRANSPOSE = "C"

_DTYPES = {"double": np.complex128, "single": np.complex64}


# -- numba kernels (scalar loops) ----------------------------------------------

@njit
def _factor_loops(a, piv):
    n = a.shape[0]
    info = 0
    for k in range(n):
        p = k
        amax = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > amax:
                amax = v
                p = i
        piv[k] = p
        if amax == 0.0:
            if info == 0:
                info = k + 1
            continue
        if p != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[p, j]
                a[p, j] = tmp
        inv = 1.0 / a[k, k]
        for i in range(k + 1, n):
            a[i, k] *= inv
        for i in range(k + 1, n):
            lik = a[i, k]
            if lik != 0:
                for j in range(k + 1, n):
                    a[i, j] -= lik * a[k, j]
    return info


@njit
def _solve_loops(lu, piv, b, adjoint):
    n = lu.shape[0]
    m = b.shape[1]
    if not adjoint:
        for k in range(n):
            p = piv[k]
            if p != k:
                for c in range(m):
                    tmp = b[k, c]
                    b[k, c] = b[p, c]
                    b[p, c] = tmp
        for i in range(n):
            for j in range(i):
                lij = lu[i, j]
                if lij != 0:
                    for c in range(m):
                        b[i, c] -= lij * b[j, c]
        for i in range(n - 1, -1, -1):
            for j in range(i + 1, n):
                uij = lu[i, j]
                if uij != 0:
                    for c in range(m):
                        b[i, c] -= uij * b[j, c]
            inv = 1.0 / lu[i, i]
            for c in range(m):
                b[i, c] *= inv
    else:
        # U^H y = b (forward), L^H w = y (backward), x = P^T w
        for i in range(n):
            for j in range(i):
                uji = np.conj(lu[j, i])
                if uji != 0:
                    for c in range(m):
                        b[i, c] -= uji * b[j, c]
            inv = 1.0 / np.conj(lu[i, i])
            for c in range(m):
                b[i, c] *= inv
        for i in range(n - 1, -1, -1):
            for j in range(i + 1, n):
                lji = np.conj(lu[j, i])
                if lji != 0:
                    for c in range(m):
                        b[i, c] -= lji * b[j, c]
        for k in range(n - 1, -1, -1):
            p = piv[k]
            if p != k:
                for c in range(m):
                    tmp = b[k, c]
                    b[k, c] = b[p, c]
                    b[p, c] = tmp


# -- numpy fallbacks (vectorized per pivot step) --------------------------------

def _factor_numpy(a, piv):
    n = a.shape[0]
    info = 0
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        piv[k] = p
        if a[p, k] == 0:
            if info == 0:
                info = k + 1
            continue
        if p != k:
            a[[k, p], :] = a[[p, k], :]
        a[k + 1:, k] /= a[k, k]
        a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return info


def _solve_numpy(lu, piv, b, adjoint):
    n = lu.shape[0]
    if not adjoint:
        for k in range(n):
            p = piv[k]
            if p != k:
                b[[k, p], :] = b[[p, k], :]
        for i in range(1, n):
            b[i] -= lu[i, :i] @ b[:i]
        for i in range(n - 1, -1, -1):
            b[i] -= lu[i, i + 1:] @ b[i + 1:]
            b[i] /= lu[i, i]
    else:
        lh = lu.conj().T
        for i in range(n):
            b[i] -= lh[i, :i] @ b[:i]
            b[i] /= lh[i, i]
        for i in range(n - 2, -1, -1):
            b[i] -= lh[i, i + 1:] @ b[i + 1:]
        for k in range(n - 1, -1, -1):
            p = piv[k]
            if p != k:
                b[[k, p], :] = b[[p, k], :]


_factor = select(_factor_loops, _factor_numpy)
_solve = select(_solve_loops, _solve_numpy)


@dataclass(frozen=True)
class LuFactorization:
    lu: np.ndarray
    piv: np.ndarray

    @property
    def n(self) -> int:
        return self.lu.shape[0]

    @property
    def precision(self) -> str:
        return "single" if self.lu.dtype == np.complex64 else "double"


def lu_factor(m, precision: str = "double") -> LuFactorization:
    """Factor a square matrix, storing complex ``precision`` values.

    A zero pivot raises :class:`FeastError` with ``info=-2`` (inner solver
    failure); conversion overflow to single precision raises ``info=-1``.
    """
    if precision not in _DTYPES:
        raise ValueError("precision must be 'double' or 'single'")
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("lu_factor needs a square matrix")
    if not np.all(np.isfinite(m)):
        raise FeastError(Info.INNER_SOLVER, "matrix has non-finite entries")
    with np.errstate(over="ignore"):
        a = np.array(m, dtype=_DTYPES[precision], order="C")
    if not np.all(np.isfinite(a)):
        raise FeastError(Info.PRECISION_CONVERSION,
                         "overflow converting matrix to single precision")
    piv = np.empty(a.shape[0], dtype=np.int64)
    info = _factor(a, piv)
    if info:
        raise FeastError(Info.INNER_SOLVER, f"zero pivot at column {info}")
    return LuFactorization(a, piv)


def lu_solve(f: LuFactorization, rhs, mode: str = NORMAL) -> np.ndarray:
    """Solve ``A X = RHS`` (``mode='N'``) or ``A^H X = RHS`` (``mode='C'``).

    The result is complex128 whatever the factorization precision.
    """
    if mode not in (NORMAL, CONJ_TRANSPOSE):
        raise ValueError("mode must be 'N' or 'C'")
    rhs = np.asarray(rhs)
    vec = rhs.ndim == 1
    b2 = rhs.reshape(rhs.shape[0], -1)
    if b2.shape[0] != f.n:
        raise ValueError("right-hand side has the wrong number of rows")
    b = np.array(b2, dtype=f.lu.dtype, order="C")
    _solve(f.lu, f.piv, b, mode == CONJ_TRANSPOSE)
    out = b.astype(np.complex128)
    return out[:, 0] if vec else out
