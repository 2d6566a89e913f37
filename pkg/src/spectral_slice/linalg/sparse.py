"""CSR products: ``A x`` and ``A^H x`` on column blocks, plus shifted copies."""

from __future__ import annotations

import numpy as np

from .._accel import njit, select
from ..core import CsrMatrix

__all__ = ["csr_matvec", "shifted_csr", "identity_csr", "ShiftedCsrOperator"]


@njit
def _matvec_loops(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    k = x.shape[1]
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            v = data[p]
            for c in range(k):
                out[i, c] += v * x[j, c]


@njit
def _rmatvec_loops(indptr, indices, data, x, out):
    n = indptr.shape[0] - 1
    k = x.shape[1]
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            v = np.conj(data[p])
            for c in range(k):
                out[j, c] += v * x[i, c]


def _matvec_numpy(indptr, indices, data, x, out):
    if data.size == 0:
        return
    prod = data[:, None] * x[indices]
    # row sums via prefix sums; robust to empty rows
    cs = np.concatenate([np.zeros((1, x.shape[1]), prod.dtype), np.cumsum(prod, axis=0)])
    out += cs[indptr[1:]] - cs[indptr[:-1]]


def _rmatvec_numpy(indptr, indices, data, x, out):
    if data.size == 0:
        return
    rows = np.repeat(np.arange(indptr.size - 1), np.diff(indptr))
    np.add.at(out, indices, np.conj(data)[:, None] * x[rows])


_matvec = select(_matvec_loops, _matvec_numpy)
_rmatvec = select(_rmatvec_loops, _rmatvec_numpy)


def csr_matvec(a: CsrMatrix, x, mode: str = "N") -> np.ndarray:
    """``A @ x`` (``mode='N'``) or ``A^H @ x`` (``mode='C'``) for full CSR ``a``.

    ``x`` may be a vector or an ``n x k`` block.
    """
    if a.uplo != "F":
        raise ValueError("csr_matvec needs a full (expanded) matrix")
    if mode not in ("N", "C"):
        raise ValueError("mode must be 'N' or 'C'")
    x = np.asarray(x)
    vec = x.ndim == 1
    xb = x.reshape(x.shape[0], -1)
    if xb.shape[0] != a.n:
        raise ValueError(f"dimension mismatch: matrix {a.n}, block {xb.shape[0]}")
    dtype = np.result_type(a.data.dtype, xb.dtype, np.float64)
    xb = np.ascontiguousarray(xb, dtype=dtype)
    data = a.data.astype(dtype, copy=False)
    out = np.zeros((a.n, xb.shape[1]), dtype=dtype)
    if mode == "N":
        _matvec(a.indptr, a.indices, data, xb, out)
    else:
        _rmatvec(a.indptr, a.indices, data, xb, out)
    return out[:, 0] if vec else out


def identity_csr(n: int, dtype=np.float64) -> CsrMatrix:
    return CsrMatrix(n, np.arange(n + 1), np.arange(n), np.ones(n, dtype=dtype))


def shifted_csr(a: CsrMatrix, b: CsrMatrix | None, z: complex) -> CsrMatrix:
    """Explicit ``z B - A`` (``B = I`` when ``b`` is None) on the union pattern."""
    if b is None:
        b = identity_csr(a.n)
    rows = np.concatenate([b.row_indices(), a.row_indices()])
    cols = np.concatenate([b.indices, a.indices])
    vals = np.concatenate([z * b.data.astype(complex), -a.data.astype(complex)])
    return CsrMatrix.from_coo(a.n, rows, cols, vals)


class ShiftedCsrOperator:
    """Applies ``z B - A`` (or its adjoint) without forming the shifted matrix."""

    def __init__(self, a: CsrMatrix, b: CsrMatrix | None, z: complex):
        self.a, self.b, self.z = a, b, complex(z)

    def __call__(self, x, mode: str = "N"):
        zz = self.z if mode == "N" else np.conj(self.z)
        bx = x if self.b is None else csr_matvec(self.b, x, mode)
        return zz * bx - csr_matvec(self.a, x, mode)
