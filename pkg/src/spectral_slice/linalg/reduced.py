"""Small dense eigensolvers for the Rayleigh-Ritz step.

* Hermitian pencils: Cholesky of ``Bq`` and cyclic Jacobi on
  ``L^-1 Aq L^-H``.
* General pencils: ``C = Bq^-1 Aq``, Householder Hessenberg reduction,
  single-shift complex QR (Wilkinson shifts, exceptional shifts every 10
  stalled sweeps), eigenvectors by back substitution on the Schur form.
* Polynomial: block companion linearization.

The iteration kernels use array slicing that numba compiles as-is, so the
same source is the jitted kernel and the numpy fallback.
"""

from __future__ import annotations

import numpy as np

from .._accel import njit, select
from ..core import FeastError, Info
from .lu import lu_factor, lu_solve

__all__ = [
    "cholesky",
    "jacobi_eigh",
    "hessenberg",
    "schur_qr",
    "reduced_hermitian_eig",
    "reduced_general_eig",
    "polynomial_linearize",
    "polynomial_eig",
]

_EPS = np.finfo(np.float64).eps


# -- kernels --------------------------------------------------------------------

def _cholesky_impl(a):
    n = a.shape[0]
    low = np.zeros_like(a)
    for j in range(n):
        d = a[j, j].real
        for k in range(j):
            d -= (low[j, k] * np.conj(low[j, k])).real
        if not d > 0.0:
            return low, j + 1
        ljj = np.sqrt(d)
        low[j, j] = ljj
        for i in range(j + 1, n):
            s = a[i, j]
            for k in range(j):
                s -= low[i, k] * np.conj(low[j, k])
            low[i, j] = s / ljj
    return low, 0


def _jacobi_impl(a, v, tol, max_sweeps):
    """Cyclic complex Jacobi; ``a`` Hermitian, overwritten with diag form."""
    n = a.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        total = 0.0
        for i in range(n):
            for j in range(n):
                t = abs(a[i, j]) ** 2
                total += t
                if i != j:
                    off += t
        if off <= tol * tol * total or off == 0.0:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                e = apq / mag
                theta = (aqq - app) / (2.0 * mag)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # J = [[c, s], [-s conj(e), c conj(e)]] on (p, q)
                ce = np.conj(e)
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - s * ce * colq
                a[:, q] = s * colp + c * ce * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * e * rowq
                a[q, :] = s * rowp + c * e * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * ce * vq
                v[:, q] = s * vp + c * ce * vq
    return -1


def _hessenberg_impl(h, z):
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        xnorm = np.sqrt(np.sum((x * np.conj(x)).real))
        if xnorm == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if abs(x0) > 0 else 1.0 + 0.0j
        alpha = -phase * xnorm
        x[0] -= alpha
        vnorm = np.sqrt(np.sum((x * np.conj(x)).real))
        if vnorm == 0.0:
            continue
        x /= vnorm
        xc = np.conj(x)
        # H <- (I - 2 v v^H) H (I - 2 v v^H)
        for j in range(n):
            s = np.sum(xc * h[k + 1:, j])
            h[k + 1:, j] -= 2.0 * s * x
        for i in range(n):
            s = np.sum(h[i, k + 1:] * x)
            h[i, k + 1:] -= 2.0 * s * xc
        for i in range(n):
            s = np.sum(z[i, k + 1:] * x)
            z[i, k + 1:] -= 2.0 * s * xc
        h[k + 2:, k] = 0.0
        h[k + 1, k] = alpha


def _qr_impl(h, z, max_iter):
    """Reduce upper Hessenberg ``h`` to upper triangular, accumulating ``z``.

    Returns the number of QR sweeps, or -1 if ``max_iter`` was exceeded.
    """
    n = h.shape[0]
    hnorm = 0.0
    for i in range(n):
        for j in range(n):
            hnorm = max(hnorm, abs(h[i, j]))
    if hnorm == 0.0:
        return 0
    hi = n - 1
    stall = 0
    total = 0
    while hi > 0:
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = hnorm
            if abs(h[lo, lo - 1]) <= _EPS * s or abs(h[lo, lo - 1]) <= 1e-14 * _EPS * hnorm:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            hi -= 1
            stall = 0
            continue
        total += 1
        stall += 1
        if total > max_iter:
            return -1
        a = h[hi - 1, hi - 1]
        b = h[hi - 1, hi]
        c = h[hi, hi - 1]
        d = h[hi, hi]
        if stall % 10 == 0:
            # exceptional shift to break cycles
            mu = d + 0.75 * abs(c) * (1.0 + 0.5j)
        else:
            half = 0.5 * (a - d)
            disc = np.sqrt(half * half + b * c)
            m1 = 0.5 * (a + d) + disc
            m2 = 0.5 * (a + d) - disc
            mu = m1 if abs(m1 - d) < abs(m2 - d) else m2
        x = h[lo, lo] - mu
        y = h[lo + 1, lo]
        for k in range(lo, hi):
            if k > lo:
                x = h[k, k - 1]
                y = h[k + 1, k - 1]
            # Givens rotation G with G [x; y] = [r; 0]
            ax = abs(x)
            ay = abs(y)
            if ay == 0.0:
                cs = 1.0
                sn = 0.0 + 0.0j
            elif ax == 0.0:
                cs = 0.0
                sn = np.conj(y) / ay
            else:
                rr = np.sqrt(ax * ax + ay * ay)
                cs = ax / rr
                sn = (x / ax) * np.conj(y) / rr
            c0 = max(lo, k - 1)
            rk = h[k, c0:].copy()
            rk1 = h[k + 1, c0:].copy()
            h[k, c0:] = cs * rk + sn * rk1
            h[k + 1, c0:] = -np.conj(sn) * rk + cs * rk1
            if k > lo:
                h[k + 1, k - 1] = 0.0
            r1 = min(k + 3, hi + 1)
            ck = h[:r1, k].copy()
            ck1 = h[:r1, k + 1].copy()
            h[:r1, k] = cs * ck + np.conj(sn) * ck1
            h[:r1, k + 1] = -sn * ck + cs * ck1
            zk = z[:, k].copy()
            zk1 = z[:, k + 1].copy()
            z[:, k] = cs * zk + np.conj(sn) * zk1
            z[:, k + 1] = -sn * zk + cs * zk1
    return total


def _triangular_vectors_impl(t):
    """Right eigenvectors of upper triangular ``t`` (unit columns)."""
    n = t.shape[0]
    y = np.zeros_like(t)
    tnorm = 0.0
    for i in range(n):
        for j in range(i, n):
            tnorm = max(tnorm, abs(t[i, j]))
    small = max(tnorm, 1e-300) * _EPS
    for k in range(n):
        y[k, k] = 1.0
        lam = t[k, k]
        for i in range(k - 1, -1, -1):
            s = 0.0 + 0.0j
            for j in range(i + 1, k + 1):
                s += t[i, j] * y[j, k]
            d = t[i, i] - lam
            if abs(d) < small:
                d = small
            y[i, k] = -s / d
        nrm = np.sqrt(np.sum((y[:, k] * np.conj(y[:, k])).real))
        y[:, k] /= nrm
    return y


_cholesky_jit = njit(_cholesky_impl)
_jacobi_jit = njit(_jacobi_impl)
_hessenberg_jit = njit(_hessenberg_impl)
_tri_vec_jit = njit(_triangular_vectors_impl)


_qr_jit = njit(_qr_impl)

_cholesky_k = select(_cholesky_jit, _cholesky_impl)
_jacobi_k = select(_jacobi_jit, _jacobi_impl)
_hessenberg_k = select(_hessenberg_jit, _hessenberg_impl)
_qr_k = select(_qr_jit, _qr_impl)
_tri_vec_k = select(_tri_vec_jit, _triangular_vectors_impl)


# -- public wrappers -------------------------------------------------------------

def _work_dtype(*arrays):
    return np.complex128 if any(np.iscomplexobj(a) for a in arrays) else np.float64


def cholesky(a) -> np.ndarray:
    """Lower ``L`` with ``L L^H = a``; ``FeastError(-3)`` if not positive definite."""
    a = np.ascontiguousarray(a, dtype=_work_dtype(a))
    low, info = _cholesky_k(a)
    if info:
        raise FeastError(Info.REDUCED_SOLVER,
                         f"matrix B may not be positive definite (pivot {info})")
    return low


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 60):
    """Eigen-decomposition of a Hermitian matrix; eigenvalues ascending."""
    a = np.array(a, dtype=_work_dtype(a), order="C")
    a = 0.5 * (a + a.conj().T)
    v = np.eye(a.shape[0], dtype=a.dtype)
    sweeps = _jacobi_k(a, v, tol, max_sweeps)
    if sweeps < 0:
        raise FeastError(Info.REDUCED_SOLVER, "Jacobi iteration did not converge")
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def _tri_solve(low, b, lower=True, adjoint=False):
    """Dense triangular solve with ``low`` (or its adjoint)."""
    m = low.conj().T if adjoint else low
    x = np.array(b, dtype=np.result_type(m, b), copy=True)
    n = m.shape[0]
    if lower != adjoint:
        for i in range(n):
            x[i] = (x[i] - m[i, :i] @ x[:i]) / m[i, i]
    else:
        for i in range(n - 1, -1, -1):
            x[i] = (x[i] - m[i, i + 1:] @ x[i + 1:]) / m[i, i]
    return x


def reduced_hermitian_eig(aq, bq=None):
    """Solve ``Aq phi = lam Bq phi`` with ``phi^H Bq phi = I``.

    Real input stays real.  Raises ``FeastError(-3)`` when ``Bq`` is not
    positive definite.
    """
    aq = np.asarray(aq)
    aq = 0.5 * (aq + aq.conj().T)
    if bq is None:
        return jacobi_eigh(aq)
    bq = np.asarray(bq)
    bq = 0.5 * (bq + bq.conj().T)
    low = cholesky(bq)
    # C = L^-1 Aq L^-H
    t = _tri_solve(low, aq, lower=True)
    c = _tri_solve(low, t.conj().T, lower=True).conj().T
    w, y = jacobi_eigh(c)
    phi = _tri_solve(low, y, lower=True, adjoint=True)
    return w, phi


def hessenberg(a):
    """``a = Z H Z^H`` with ``H`` upper Hessenberg."""
    h = np.array(a, dtype=np.complex128, order="C")
    z = np.eye(h.shape[0], dtype=np.complex128)
    _hessenberg_k(h, z)
    return h, z


def schur_qr(a, max_iter: int | None = None):
    """Complex Schur form ``a = Z T Z^H`` by Hessenberg QR."""
    h, z = hessenberg(a)
    n = h.shape[0]
    cap = 60 * max(n, 1) if max_iter is None else max_iter
    sweeps = _qr_k(h, z, cap)
    if sweeps < 0:
        raise FeastError(Info.REDUCED_SOLVER, "QR iteration did not converge")
    return np.triu(h), z


def _eig_standard(c):
    t, z = schur_qr(c)
    y = _tri_vec_k(np.ascontiguousarray(t))
    v = z @ y
    v /= np.linalg.norm(v, axis=0)
    return np.diag(t).copy(), v


def reduced_general_eig(aq, bq=None, left: bool = False, cond_max: float = 1e14):
    """Eigen-decomposition of the pencil ``(Aq, Bq)``.

    Returns ``(lam, vr, vl)``; ``vl`` is None unless ``left``.  Left vectors
    satisfy ``vl^H Bq vr = I``.  A singular or ill-conditioned ``Bq``
    (estimated 1-norm condition above ``cond_max``) raises
    ``FeastError(-3)``.
    """
    aq = np.asarray(aq, dtype=np.complex128)
    n = aq.shape[0]
    if bq is None:
        bq = np.eye(n, dtype=np.complex128)
    bq = np.asarray(bq, dtype=np.complex128)
    try:
        fb = lu_factor(bq)
    except FeastError as exc:
        raise FeastError(Info.REDUCED_SOLVER, "reduced matrix Bq is singular") from exc
    binv = lu_solve(fb, np.eye(n))
    cond = np.linalg.norm(bq, 1) * np.linalg.norm(binv, 1)
    if not np.isfinite(cond) or cond > cond_max:
        raise FeastError(Info.REDUCED_SOLVER, f"reduced matrix Bq ill-conditioned ({cond:.2e})")
    c = binv @ aq
    lam, vr = _eig_standard(c)
    if not left:
        return lam, vr, None
    try:
        fv = lu_factor(vr)
    except FeastError as exc:
        raise FeastError(Info.REDUCED_SOLVER, "defective reduced eigenbasis") from exc
    winv_h = lu_solve(fv, np.eye(n))  # rows are left vectors of C
    vl = lu_solve(lu_factor(bq), winv_h.conj().T, mode="C")
    return lam, vr, vl


def polynomial_linearize(aq_list):
    """Companion pencil ``(C0, C1)`` for ``sum_i lam^i Aq_i``.

    Eigenvectors have the block form ``[x; lam x; ...; lam^(p-1) x]``.
    For ``p = 1`` this is ``(-Aq_0, Aq_1)``.
    """
    blocks = [np.asarray(b, dtype=np.complex128) for b in aq_list]
    if len(blocks) < 2:
        raise ValueError("need at least two coefficient blocks")
    p = len(blocks) - 1
    m = blocks[0].shape[0]
    c0 = np.zeros((p * m, p * m), dtype=np.complex128)
    c1 = np.zeros_like(c0)
    for i in range(p - 1):
        c0[i * m:(i + 1) * m, (i + 1) * m:(i + 2) * m] = np.eye(m)
        c1[i * m:(i + 1) * m, i * m:(i + 1) * m] = np.eye(m)
    for i in range(p):
        c0[(p - 1) * m:, i * m:(i + 1) * m] = -blocks[i]
    c1[(p - 1) * m:, (p - 1) * m:] = blocks[p]
    return c0, c1


def polynomial_eig(aq_list, cond_max: float = 1e14):
    """Eigenpairs of the projected polynomial via linearization.

    Returns ``(lam, x)`` with ``x`` the unit-norm first blocks.  A singular
    leading coefficient raises ``FeastError(-3)``.
    """
    c0, c1 = polynomial_linearize(aq_list)
    m = np.asarray(aq_list[0]).shape[0]
    lam, v, _ = reduced_general_eig(c0, c1, cond_max=cond_max)
    x = v[:m].copy()
    # the first block can be tiny for large |lam|; the trailing one is not
    p = len(aq_list) - 1
    tail = v[(p - 1) * m:]
    use_tail = np.linalg.norm(x, axis=0) < np.linalg.norm(tail, axis=0) * 1e-8
    x[:, use_tail] = tail[:, use_tail]
    x /= np.linalg.norm(x, axis=0)
    return lam, x
