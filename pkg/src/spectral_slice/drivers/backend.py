"""Service RCI actions for in-memory matrices.

A :class:`Backend` owns the operator set (linear ``{A, B}`` or polynomial
``{A_0..A_p}``), the shifted-system solvers and the optional worker pool.
With ``workers > 1`` and stored factorizations, the first solve request of a
contour pass launches the solves of every node with that right-hand side;
later requests pick up the finished blocks.  The kernel still sums the
blocks in node order, so results do not depend on the worker count.
"""

from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np

from ..core import CsrMatrix, FeastError, Info
from ..kernel.common import Job
from ..linalg.bicgstab import bicgstab
from ..linalg.lu import lu_factor, lu_solve
from ..linalg.sparse import ShiftedCsrOperator, csr_matvec, shifted_csr

__all__ = ["Backend", "drive"]


def _matmul(m, x, adjoint=False):
    if isinstance(m, CsrMatrix):
        return csr_matvec(m, x, "C" if adjoint else "N")
    return (m.conj().T if adjoint else m) @ x


def _dense(m):
    return m.to_dense() if isinstance(m, CsrMatrix) else np.asarray(m)


class Backend:
    """Linear-system and product services for one run.

    Parameters
    ----------
    a, b : matrix or None
        Linear pencil (``b=None`` means ``B = I``).  Dense arrays or
        :class:`CsrMatrix` in full storage.
    coeffs : sequence, optional
        Polynomial coefficients ``A_0..A_p`` (replaces ``a``/``b``).
    solver : {'lu', 'bicgstab'}
    precision : {'double', 'single'}
        Precision of the factorization or of the Krylov vectors.
    store : bool
        Keep one factorization (or explicit shifted matrix) per node.
    tol, maxit : BiCGStab controls.
    nodes : array, optional
        Contour nodes, needed for prefetching with ``workers > 1``.
    """

    def __init__(self, a=None, b=None, *, coeffs: Optional[Sequence] = None,
                 solver="lu", precision="double", store=True, tol=1e-1, maxit=40,
                 workers=1, nodes=None, seed=0):
        if coeffs is None:
            self.a, self.b, self.coeffs = a, b, None
            self.n = a.n if isinstance(a, CsrMatrix) else np.asarray(a).shape[0]
        else:
            self.a = self.b = None
            self.coeffs = list(coeffs)
            c0 = self.coeffs[0]
            self.n = c0.n if isinstance(c0, CsrMatrix) else np.asarray(c0).shape[0]
        if solver not in ("lu", "bicgstab"):
            raise ValueError("solver must be 'lu' or 'bicgstab'")
        self.solver = solver
        self.precision = precision
        self.store = store
        self.tol, self.maxit = tol, maxit
        self.seed = seed
        self.workers = max(1, int(workers))
        self.nodes = None if nodes is None else np.asarray(nodes)
        self._fact = {}
        self._node_locks = {}
        self._lock = threading.Lock()
        self._pool = ThreadPoolExecutor(self.workers) if self.workers > 1 else None
        self._prefetch = {}
        self.factorizations = 0
        self.inner_iterations = 0
        self.solves = 0
        self.inner_log = []

    def close(self):
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    # -- shifted systems -------------------------------------------------------

    def _shifted_dense(self, z):
        if self.coeffs is None:
            a = _dense(self.a)
            bz = z * (np.eye(self.n) if self.b is None else _dense(self.b))
            return bz - a
        return sum((z ** k) * _dense(c) for k, c in enumerate(self.coeffs))

    def _shifted_operator(self, z):
        if self.coeffs is None:
            if isinstance(self.a, CsrMatrix) and (self.b is None or isinstance(self.b, CsrMatrix)):
                if self.store:
                    return ("csr", shifted_csr(self.a, self.b, z))
                return ("op", ShiftedCsrOperator(self.a, self.b, z))
            return ("dense", self._shifted_dense(z))
        coeffs = self.coeffs

        def apply(x, mode="N"):
            zz = z if mode == "N" else np.conj(z)
            return sum((zz ** k) * _matmul(c, x, mode == "C") for k, c in enumerate(coeffs))
        return ("op", apply)

    def _build(self, z):
        with self._lock:
            self.factorizations += 1
        if self.solver == "lu":
            return lu_factor(self._shifted_dense(z), self.precision)
        return self._shifted_operator(z)

    def _node_lock(self, node):
        with self._lock:
            lk = self._node_locks.get(node)
            if lk is None:
                lk = self._node_locks[node] = threading.Lock()
            return lk

    def factorize(self, node, z):
        with self._node_lock(node):
            if self.store and node in self._fact:
                return
            self._fact[node] = self._build(z)

    def _factor_for(self, node, z):
        with self._node_lock(node):
            f = self._fact.get(node)
            if f is None:
                f = self._fact[node] = self._build(z)
            return f

    def _apply(self, f, x, adjoint):
        kind, op = f
        mode = "C" if adjoint else "N"
        if kind == "csr":
            return csr_matvec(op, x, mode)
        if kind == "dense":
            return (op.conj().T if adjoint else op) @ x
        return op(x, mode)

    def _solve_now(self, node, z, rhs, adjoint):
        f = self._factor_for(node, z)
        if self.solver == "lu":
            return lu_solve(f, rhs, "C" if adjoint else "N"), 0
        rng = np.random.default_rng([int(self.seed) & 0xFFFFFFFF, node, int(adjoint)])
        x, stats = bicgstab(lambda v: self._apply(f, v, adjoint), rhs, tol=self.tol,
                            maxit=self.maxit, precision=self.precision, rng=rng)
        return x, stats

    def solve(self, node, z, rhs, adjoint=False):
        rhs = np.array(rhs, dtype=np.complex128)
        key = (node, adjoint)
        fut = None
        if self._pool is not None and self.store and self.nodes is not None:
            with self._lock:
                entry = self._prefetch.pop(key, None)
            if entry is not None and np.array_equal(entry[0], rhs):
                fut = entry[1]
            else:
                # launch the remaining nodes for this right-hand side
                with self._lock:
                    for j, zj in enumerate(self.nodes):
                        if j == node:
                            continue
                        self._prefetch[(j, adjoint)] = (
                            rhs, self._pool.submit(self._solve_now, j, zj, rhs, adjoint))
        if fut is not None:
            x, stats = fut.result()
        else:
            x, stats = self._solve_now(node, z, rhs, adjoint)
        self.solves += 1
        if stats:
            self.inner_iterations += stats.iterations
            self.inner_log.append((node, adjoint, stats))
        return x

    # -- products -------------------------------------------------------------

    def multiply(self, job: Job, x, matrix_index=1):
        adjoint = job in (Job.MULTIPLY_A_ADJOINT, Job.MULTIPLY_B_ADJOINT)
        if self.coeffs is not None:
            if job not in (Job.MULTIPLY_A, Job.MULTIPLY_A_ADJOINT):
                raise ValueError("polynomial problems only use A[k] products")
            return _matmul(self.coeffs[matrix_index - 1], x, adjoint)
        if job in (Job.MULTIPLY_A, Job.MULTIPLY_A_ADJOINT):
            return _matmul(self.a, x, adjoint)
        if self.b is None:
            return np.array(x, copy=True)
        return _matmul(self.b, x, adjoint)


def drive(kernel, backend: Backend, trace: Optional[list] = None):
    """Run ``kernel`` to completion, servicing its requests with ``backend``.

    Returns the kernel's :class:`EigResult`; backend failures are reported
    through ``info`` (``-1``/``-2``).  ``trace`` collects the emitted actions.
    """
    failure = None
    try:
        while True:
            act = kernel.step()
            if trace is not None:
                trace.append(act)
            job = act.job
            if job == Job.DONE:
                break
            if job == Job.FACTORIZE:
                backend.factorize(act.node, act.ze)
            elif job == Job.FACTORIZE_ADJOINT:
                # LU and Krylov operators serve both systems
                backend.factorize(act.node, act.ze)
            elif job in (Job.SOLVE, Job.SOLVE_ADJOINT):
                cols = act.columns
                kernel.work2[:, cols] = backend.solve(act.node, act.ze, kernel.work2[:, cols],
                                                      adjoint=job == Job.SOLVE_ADJOINT)
            else:
                cols = act.columns
                out = backend.multiply(job, kernel.X[:, cols], act.matrix_index)
                w1 = kernel.work1
                w1[:, cols] = out.real if not np.iscomplexobj(w1) else out
    except FeastError as exc:
        failure = exc
    finally:
        backend.close()
    if failure is not None:
        kernel._finished = True
        kernel.info = failure.info
        kernel.error = str(failure)
    if kernel.info is None:  # pragma: no cover - defensive
        kernel.info = Info.INNER_SOLVER
    kernel.fpm[60] = backend.inner_iterations
    return kernel.result()
