"""Hermitian kernel: real-symmetric and complex-Hermitian pencils on an interval.

Per refinement loop:

1. contour pass: at each upper-half node ``z_j`` solve with ``z_j B - A``
   (and, for complex data, the adjoint system which stands in for the
   conjugate node);
2. Gram-Schmidt on the filtered block ``Q``;
3. ``A Q`` and ``B Q`` requested from the caller;
4. Rayleigh-Ritz on ``(Q^H A Q, Q^H B Q)``, residuals, convergence test.

Loop 0 filters a random block.  Later loops apply residual inverse
iteration columnwise::

    Q_i = rho(mu_i) x_i + sum_j w_j / (z_j - mu_i) (z_j B - A)^-1 r_i,

with ``r_i = A x_i - mu_i B x_i``.  In exact arithmetic this is
``rho(B^-1 A) x_i``; with inexact solves the error scales with ``||r_i||``.

Because each filtered block is the image of B-orthonormal Ritz vectors,
the filter gain on every new Ritz direction is known (see
:func:`filter_gains`).  Inside Ritz values whose gain is below
:data:`GAIN_MIN` come from directions the filter has suppressed to noise
level; they are ranked after the inside pairs and left out of ``M``.
"""

from __future__ import annotations

import numpy as np

from ..contour import Closure, ContourRule
from ..core import Config, FeastError, Info, Interval
from ..linalg.reduced import reduced_hermitian_eig
from .common import (Job, KernelBase, compute_convergence, orthonormalize,
                     stochastic_estimate)

__all__ = ["HermitianKernel", "rci_hermitian", "rci_hermitian_step", "filter_gains",
           "GAIN_MIN"]

# true inside eigenpairs have gain close to rho(lambda) >= ~1/2
GAIN_MIN = 0.25


def filter_gains(q_raw, basis, x):
    """Filter gain on each Ritz direction.

    ``q_raw`` is the filter applied to B-orthonormal columns, ``basis`` an
    orthonormal basis of it and ``x = basis @ phi`` the B-orthonormal Ritz
    vectors.  With ``R = basis^H q_raw`` each ``x_i`` is the filtered image
    of a preimage of B-norm ``||R^-1 phi_i||``, so the gain is the inverse
    of that norm.
    """
    r = basis.conj().T @ q_raw
    phi = basis.conj().T @ x
    try:
        c = np.linalg.solve(r, phi)
    except np.linalg.LinAlgError:
        return np.zeros(x.shape[1])
    norms = np.linalg.norm(c, axis=0)
    with np.errstate(divide="ignore"):
        return np.where(norms > 0, 1.0 / norms, np.inf)


class HermitianKernel(KernelBase):
    """RCI state for Hermitian problems.

    Parameters
    ----------
    n, m0 : int
        Problem size and search subspace size.
    config : Config
    region : Interval
        Search interval; sets the inside test and the residual scale.
    rule : ContourRule
        Half-symmetric rule (a conjugation-symmetric full rule is accepted
        and halved).
    real : bool
        Real-symmetric data: the workspaces ``work1``/``X`` are real and no
        adjoint solves are requested.
    has_b : bool
        False for standard problems (``B = I``); ``MULTIPLY_B`` is skipped.
    adjoint_reuse : bool
        Caller solves adjoint systems from the ``FACTORIZE`` factorization,
        so ``FACTORIZE_ADJOINT`` is never emitted.
    x0 : array, optional
        Initial guess (``n x m0``) used when ``fpm(5)=1``.
    """

    def __init__(self, n, m0, config: Config, region: Interval, rule: ContourRule, *,
                 real=True, has_b=True, adjoint_reuse=False, x0=None, seed=None,
                 rng=None):
        if rule.closure is Closure.FULL:
            rule = rule.half()
        super().__init__(n, m0, config, rule, seed=seed, rng=rng)
        self.region = region
        self.real = bool(real)
        self.has_b = bool(has_b)
        self.adjoint_reuse = bool(adjoint_reuse)
        self.alpha = region.scale
        dt = np.float64 if self.real else np.complex128
        self.work1 = np.zeros((n, m0), dt)
        self.work2 = np.zeros((n, m0), np.complex128)
        self.X = np.zeros((n, m0), dt)
        self.Aq = np.zeros((m0, m0), dt)
        self.Bq = np.zeros((m0, m0), dt)
        self.E = np.full(m0, np.nan)
        self.res = np.zeros(m0)
        if x0 is not None:
            x0 = np.asarray(x0)
            if x0.shape != (n, m0):
                raise ValueError("initial guess must be n x m0")
            self.X[:] = x0.real if self.real else x0
        self._have_guess = config[5] == 1

    @property
    def X_right(self):
        return self.X

    def _combine(self, acc):
        return 2.0 * acc.real if self.real else acc

    def _pass(self, rhs, mu=None):
        nodes, weights = self.rule.nodes, self.rule.weights
        acc, _ = yield from self._contour(
            nodes, weights, rhs, mu,
            adjoint_mode=None if self.real else "conj-node",
            adjoint_reuse=self.adjoint_reuse)
        return self._combine(acc)

    def _rr(self, q):
        """Multiplies and Rayleigh-Ritz on orthonormal ``q``."""
        m = q.shape[1]
        self.X[:, :m] = q
        self.X[:, m:] = 0
        cols = slice(0, m)
        aq_img = yield from self._multiply(Job.MULTIPLY_A, cols)
        if self.has_b:
            bq_img = yield from self._multiply(Job.MULTIPLY_B, cols)
        else:
            bq_img = q.copy()
        aq = q.conj().T @ aq_img
        bq = q.conj().T @ bq_img
        self.Aq[:] = 0
        self.Bq[:] = 0
        self.Aq[:m, :m] = aq
        self.Bq[:m, :m] = bq
        lam, phi = reduced_hermitian_eig(aq, bq)
        x = q @ phi
        ax = aq_img @ phi
        bx = bq_img @ phi
        r = ax - bx * lam
        return lam, x, bx, r

    def _publish(self, lam, x, bx, r, gains=None):
        """Sort, store E/X/res; return (M, residuals sorted, order)."""
        m = lam.size
        inside = self.region.contains(lam)
        if gains is not None:
            inside &= gains >= GAIN_MIN
        order = np.lexsort((lam, ~inside))
        lam, x, bx, r = lam[order], x[:, order], bx[:, order], r[:, order]
        M = int(inside.sum())
        bnorm = np.linalg.norm(bx, axis=0) * self.alpha
        res = np.linalg.norm(r, axis=0) / np.where(bnorm > 0, bnorm, 1.0)
        self.E[:] = np.nan
        self.E[:m] = lam
        self.res[:] = 0
        self.res[:m] = res
        self.X[:] = 0
        self.X[:, :m] = x.real if self.real else x
        self.M = M
        return M, lam, x, r

    def _run(self):
        n, m0, cfg = self.n, self.m0, self.config
        mode = cfg[14]
        mu = None
        trace_prev = None
        if mode == 2:
            v = self._rademacher(m0)
            self.X[:] = v
            rhs = (yield from self._multiply(Job.MULTIPLY_B, slice(0, m0))) if self.has_b else v
            q = yield from self._pass(rhs.astype(complex))
            self.M = stochastic_estimate(v, q)
            self.info = Info.STOCHASTIC_ONLY
            return
        if self._have_guess:
            q, _, _ = orthonormalize(self.X.copy())
            if q.shape[1] == 0:
                raise FeastError(Info.BAD_M0, "initial guess has rank 0")
            lam, x, bx, r = yield from self._rr(q)
            M, lam, x, r = self._publish(lam, x, bx, r)
            trace_prev = float(np.sum(lam[:M]))
            mu = lam
            rhs = r.astype(complex)
        else:
            x = None
            rhs = self._random_block(m0, not self.real).astype(complex)
        self.loop = 0
        while True:
            q = yield from self._pass(rhs, mu)
            if mu is not None:
                q = q + x * self._filter(mu).real
            if mode == 1:
                self.X[:, :q.shape[1]] = q.real if self.real else q
                self.M = 0
                self.info = Info.SUBSPACE_ONLY
                return
            q_raw = q
            q, _, kept = orthonormalize(q)
            if q.shape[1] == 0:
                self.M = 0
                self.info = Info.NO_EIGENVALUE
                return
            lam, x, bx, r = yield from self._rr(q)
            # gains need a B-orthonormal preimage: skip the random loop-0 block
            gains = None if mu is None else filter_gains(q_raw[:, kept], q, x)
            M, lam, x, r = self._publish(lam, x, bx, r, gains)
            m = lam.size
            trace = float(np.sum(lam[:M]))
            self.epsout = 1.0 if trace_prev is None else abs(trace - trace_prev) / self.alpha
            trace_prev = trace
            rep = compute_convergence(self.res, M, self.epsout, cfg)
            self._record(M, rep.max_res, trace, rep.converged, m)
            if M == 0:
                self.info = Info.NO_EIGENVALUE
                return
            # a subspace spanning the whole space cannot be too small; wait
            # for gains so a spurious loop-0 value does not trigger this
            if (M >= m0 and m == m0 and m < n
                    and (gains is not None or self.loop >= cfg[4])):
                self.info = Info.M0_TOO_SMALL
                return
            if rep.converged:
                self.info = Info.SUCCESS
                return
            if self.loop >= cfg[4]:
                self.info = Info.NO_CONVERGENCE
                return
            self.loop += 1
            mu = lam
            rhs = r.astype(complex)


def rci_hermitian(n, m0, config, region, rule, **kw) -> HermitianKernel:
    """Create a Hermitian RCI state; drive it with :func:`rci_hermitian_step`."""
    return HermitianKernel(n, m0, config, region, rule, **kw)


def rci_hermitian_step(state: HermitianKernel):
    return state.step()
