"""Pieces shared by the reverse-communication kernels.

A kernel is a state machine driven by :meth:`KernelBase.step`.  Every call
returns an :class:`Action`; the caller performs it on the kernel's
workspaces and calls ``step`` again, until ``Job.DONE``.

Workspace contract (columns are 1-based in ``Action`` fields):

* ``SOLVE`` / ``SOLVE_ADJOINT``: overwrite ``work2[:, :col_count]`` with
  ``(Ze B - A)^-1 work2`` (or the adjoint system).  The polynomial kernel
  uses ``P(Ze)`` in place of ``Ze B - A``.
* ``MULTIPLY_A`` / ``MULTIPLY_B`` (and adjoints): set
  ``work1[:, i:j] = op @ X[:, i:j]`` for the column window of the action.
  ``matrix_index`` selects the coefficient ``A[k]`` of a polynomial.
* ``FACTORIZE`` / ``FACTORIZE_ADJOINT``: prepare solves at node ``node``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..contour import ContourRule, filter_value
from ..core import Config, EigResult, FeastError, Info

__all__ = ["Job", "Action", "orthonormalize", "ConvergenceReport", "KernelBase",
           "compute_convergence"]


class Job(enum.IntEnum):
    INIT = -1
    DONE = 0
    FACTORIZE = 10
    SOLVE = 11
    FACTORIZE_ADJOINT = 20
    SOLVE_ADJOINT = 21
    MULTIPLY_A = 30
    MULTIPLY_A_ADJOINT = 31
    MULTIPLY_B = 40
    MULTIPLY_B_ADJOINT = 41


@dataclass(frozen=True)
class Action:
    job: Job
    node: Optional[int] = None
    ze: Optional[complex] = None
    col_offset: int = 1
    col_count: int = 0
    matrix_index: int = 1

    @property
    def ijob(self) -> int:
        return int(self.job)

    @property
    def columns(self) -> slice:
        """0-based column slice of the window."""
        return slice(self.col_offset - 1, self.col_offset - 1 + self.col_count)


@dataclass(frozen=True)
class ConvergenceReport:
    epsout: float
    max_res: float
    M: int
    converged: bool


def compute_convergence(res, M, epsout, config: Config) -> ConvergenceReport:
    """Apply the ``fpm(6)`` criterion against ``eps = 10**-fpm(3)``."""
    eps = 10.0 ** (-config[3])
    res = np.asarray(res, dtype=float)
    max_res = float(res[:M].max()) if M > 0 else 0.0
    if config[6] == 1:
        ok = M > 0 and max_res < eps
    else:
        ok = epsout < eps
    return ConvergenceReport(float(epsout), max_res, int(M), bool(ok))


def _gs_column(v, basis, count):
    for _ in range(2):
        if count:
            b = basis[:, :count]
            # modified Gram-Schmidt sweep
            for i in range(count):
                v = v - b[:, i] * np.vdot(b[:, i], v)
    return v


def orthonormalize(q, tol: float = 1e-14, left=None):
    """Modified Gram-Schmidt with one reorthogonalization pass.

    Columns whose norm falls below ``tol`` times their original norm are
    dropped.  With ``left`` given, both blocks are processed together and
    a column index survives only if it is independent in both.

    Returns ``(q_basis, left_basis_or_None, kept_indices)``.
    """
    q = np.asarray(q)
    n, k = q.shape
    out = np.zeros((n, k), dtype=q.dtype)
    lout = None if left is None else np.zeros((n, k), dtype=np.result_type(left, q))
    kept = []
    for j in range(k):
        v = q[:, j].copy()
        nv0 = np.linalg.norm(v)
        if nv0 == 0 or not np.isfinite(nv0):
            continue
        v = _gs_column(v, out, len(kept))
        nv = np.linalg.norm(v)
        if nv <= tol * nv0:
            continue
        if left is not None:
            u = np.asarray(left[:, j]).copy()
            nu0 = np.linalg.norm(u)
            if nu0 == 0 or not np.isfinite(nu0):
                continue
            u = _gs_column(u, lout, len(kept))
            nu = np.linalg.norm(u)
            if nu <= tol * nu0:
                continue
            lout[:, len(kept)] = u / nu
        out[:, len(kept)] = v / nv
        kept.append(j)
    m = len(kept)
    return out[:, :m], (None if lout is None else lout[:, :m]), np.array(kept, dtype=int)


class KernelBase:
    """Generator-backed RCI state machine.

    Subclasses implement ``_run`` as a generator yielding :class:`Action`
    objects and returning when finished (``self.info`` set).
    """

    def __init__(self, n: int, m0: int, config: Config, rule: ContourRule, *,
                 seed=None, rng: np.random.Generator | None = None):
        self.n = int(n)
        self.m0 = int(m0)
        self.config = config
        self.rule = rule
        self.fpm = np.array([0] + config.to_list(), dtype=np.int64)
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.Ze = None
        self.loop = 0
        self.epsout = 1.0
        self.M = 0
        self.info = None
        self.phase = Job.INIT
        self.history = []
        self.node = None
        self._gen = None
        self._finished = False

    # -- protocol ----------------------------------------------------------------

    def step(self) -> Action:
        if self._finished:
            return Action(Job.DONE)
        if self._gen is None:
            self._gen = self._guarded()
        try:
            act = next(self._gen)
        except StopIteration:
            self._finished = True
            self.phase = Job.DONE
            self.node = None
            return Action(Job.DONE)
        self.phase = act.job
        self.node = act.node
        if act.ze is not None:
            self.Ze = act.ze
        return act

    def _guarded(self):
        try:
            yield from self._run()
        except FeastError as exc:
            self.info = exc.info
            self.error = str(exc)

    def _run(self):  # pragma: no cover - abstract
        raise NotImplementedError
        yield

    @property
    def done(self) -> bool:
        return self._finished

    # -- shared helpers -----------------------------------------------------------

    def _set_out(self, i, v):
        self.fpm[i] = int(v)

    def out_config(self) -> Config:
        return Config({i: int(self.fpm[i]) for i in range(1, 65)})

    def _factorize_now(self) -> bool:
        return self.loop == 0 or self.config[10] == 0

    def _contour(self, nodes, weights, rhs, mu=None, *, adjoint_rhs=None,
                 adjoint_mode=None, adjoint_reuse=False, sign=1.0):
        """Accumulate filtered blocks over the nodes.

        ``rhs`` is an array (same for every node) or ``callable(j, z)``.  With
        ``mu`` None the classical sum ``sum_j w_j Y_j`` is formed, otherwise
        the per-column coefficients ``w_j / (z_j - mu_i)`` are used.  The
        optional adjoint pass solves with the conjugate-transposed system at
        each node and accumulates with conjugated nodes and weights:

        * ``adjoint_mode='conj-node'`` adds to the same (right) block
          (Hermitian problems: ``(conj(z) B - A)^-1 = (z B - A)^-H``);
        * ``adjoint_mode='left'`` builds a separate left block.

        Returns ``(right, left_or_None)``.
        """
        m = rhs.shape[1] if not callable(rhs) else None
        acc = None
        lacc = None
        for j, (z, w) in enumerate(zip(nodes, weights)):
            if self._factorize_now():
                yield Action(Job.FACTORIZE, node=j, ze=complex(z))
            b = rhs(j, z) if callable(rhs) else rhs
            m = b.shape[1]
            self.work2[:, :m] = b
            self._set_out(23, m)
            yield Action(Job.SOLVE, node=j, ze=complex(z), col_offset=1, col_count=m)
            y = self.work2[:, :m].copy()
            coef = w if mu is None else w / (z - mu)
            term = y * coef
            acc = term if acc is None else acc + term
            if adjoint_mode is None:
                continue
            if self._factorize_now() and not adjoint_reuse:
                yield Action(Job.FACTORIZE_ADJOINT, node=j, ze=complex(z))
            bl = adjoint_rhs if adjoint_mode == "left" else b
            if callable(bl):
                bl = bl(j, z)
            ml = bl.shape[1]
            self.work2[:, :ml] = bl
            self._set_out(23, ml)
            yield Action(Job.SOLVE_ADJOINT, node=j, ze=complex(z), col_offset=1, col_count=ml)
            yl = self.work2[:, :ml].copy()
            cz, cw = np.conj(z), np.conj(w)
            coefl = cw if mu is None else cw / (cz - np.conj(mu))
            terml = yl * coefl
            if adjoint_mode == "conj-node":
                # same mu (real) for the conjugate node of a Hermitian rule
                coefl = cw if mu is None else cw / (cz - mu)
                acc = acc + yl * coefl
            else:
                lacc = terml if lacc is None else lacc + terml
        if acc is None:
            acc = np.zeros((self.n, 0), complex)
        return acc * sign, (None if lacc is None else lacc * sign)

    def _multiply(self, job, cols: slice, matrix_index=1):
        """Yield a multiplication request over a 0-based column slice."""
        start, stop = cols.start, cols.stop
        count = stop - start
        if job in (Job.MULTIPLY_A_ADJOINT, Job.MULTIPLY_B_ADJOINT):
            self._set_out(34, start + 1)
            self._set_out(35, count)
        else:
            self._set_out(24, start + 1)
            self._set_out(25, count)
        if job in (Job.MULTIPLY_A, Job.MULTIPLY_A_ADJOINT):
            self._set_out(57, matrix_index)
        yield Action(job, col_offset=start + 1, col_count=count, matrix_index=matrix_index)
        return self.work1[:, cols].copy()

    def _record(self, M, max_res, trace, converged, m):
        self.history.append({"loop": self.loop, "M": int(M), "trace": float(trace),
                             "epsout": float(self.epsout), "max_res": float(max_res),
                             "converged": bool(converged), "subspace": int(m)})

    def _random_block(self, k, complex_values):
        if complex_values:
            r = np.sqrt(self.rng.uniform(0, 1, (self.n, k)))
            t = self.rng.uniform(0, 2 * np.pi, (self.n, k))
            return r * np.exp(1j * t)
        return self.rng.uniform(-1.0, 1.0, (self.n, k))

    def _rademacher(self, k):
        return self.rng.choice([-1.0, 1.0], size=(self.n, k))

    def _filter(self, mu):
        return filter_value(self.rule, np.asarray(mu, dtype=complex))

    def result(self) -> EigResult:
        """Outcome after ``Job.DONE``."""
        if not self._finished:
            raise RuntimeError("kernel has not finished")
        return EigResult(
            M=int(self.M), E=self.E, X=self.X_right, res=self.res,
            epsout=float(self.epsout), loop=int(self.loop),
            info=int(self.info), X_left=getattr(self, "X_left", None),
            res_left=getattr(self, "res_left", None), fpm=self.out_config(),
            history=list(self.history))


def stochastic_estimate(v, q) -> int:
    """Hutchinson estimate ``round(mean_i Re(v_i^H q_i))``."""
    vals = np.real(np.einsum("ij,ij->j", np.conj(v), q))
    return int(np.rint(vals.mean())) if vals.size else 0


def check_pairs_finite(lam):
    if not np.all(np.isfinite(lam)):
        raise FeastError(Info.REDUCED_SOLVER, "non-finite Ritz values")
