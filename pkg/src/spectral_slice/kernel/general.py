"""Non-Hermitian and polynomial kernels on a full contour.

Both are written for ``P(z) = sum_k z^k A_k``; a linear pencil is ``p = 1``
with ``A_0 = -A`` and ``A_1 = B`` so that ``P(z) = z B - A``.  The caller
only ever sees ``z B - A`` style requests (``MULTIPLY_A``/``MULTIPLY_B``) for
linear problems and ``A[k]`` requests (``matrix_index`` 1..p+1) for
polynomial ones.

Subspace update for loops after the first, per Ritz pair ``(mu_i, x_i)``::

    Q_i = rho(mu_i) x_i - sum_j w_j / (z_j - mu_i) P(z_j)^-1 P(mu_i) x_i

which is the residual form of ``rho`` applied to ``x_i``.  Left vectors use
conjugated nodes/weights and adjoint solves.

Sidedness ``fpm(15)``: 0 two-sided (right and left subspaces), 1 right
only, 2 left = conj(right) for complex-symmetric data.
"""

from __future__ import annotations

import numpy as np

from ..contour import ContourRule
from ..core import Config, Ellipse, FeastError, Info
from ..linalg.lu import lu_factor, lu_solve
from ..linalg.reduced import polynomial_eig, reduced_general_eig
from .common import (Job, KernelBase, check_pairs_finite, compute_convergence,
                     orthonormalize, stochastic_estimate)

__all__ = ["GeneralKernel", "PolynomialKernel", "rci_general", "rci_general_step",
           "rci_polynomial", "rci_polynomial_step", "BIORTHO_TOL"]

BIORTHO_TOL = 1e-8


class GeneralKernel(KernelBase):
    """RCI state for general (non-Hermitian) and polynomial problems.

    Parameters
    ----------
    n, m0 : int
    config : Config
    region : Ellipse
        Sets the residual scale ``|Emid| + r``; the inside test comes from
        ``rule.contains``.
    rule : ContourRule
        Full contour rule (half rules are expanded).
    degree : int
        Polynomial degree ``p`` (only with ``polynomial=True``).
    polynomial : bool
        Use the ``A[k]`` multiplication protocol and the polynomial
        residual ``||P(lam) x|| / (||x|| sum_k (|Emid|+r)^k ||A_k||_F)``.
    coef_norms : sequence, optional
        ``||A_k||_F`` for the polynomial residual; estimated from the
        products ``A_k Q`` when absent.
    has_b, adjoint_reuse, x0, seed, rng
        As for :class:`~spectral_slice.kernel.hermitian.HermitianKernel`.
    """

    def __init__(self, n, m0, config: Config, region: Ellipse, rule: ContourRule, *,
                 degree=1, polynomial=False, coef_norms=None, has_b=True,
                 adjoint_reuse=False, x0=None, x0_left=None, seed=None, rng=None):
        super().__init__(n, m0, config, rule.full(), seed=seed, rng=rng)
        self.region = region
        self.p = int(degree)
        self.polynomial = bool(polynomial)
        if not self.polynomial and self.p != 1:
            raise ValueError("linear kernel has degree 1")
        self.coef_norms = None if coef_norms is None else np.asarray(coef_norms, float)
        self.has_b = bool(has_b)
        self.adjoint_reuse = bool(adjoint_reuse)
        self.side = config[15]
        if config[14] == 2:
            self.side = 1
        self.two = self.side == 0
        self.alpha = region.scale
        width = 2 * m0 if self.two else m0
        self.work1 = np.zeros((n, width), np.complex128)
        self.work2 = np.zeros((n, m0), np.complex128)
        self.X = np.zeros((n, width), np.complex128)
        self.Aq = np.zeros((m0, m0), np.complex128)
        self.Bq = np.zeros((m0, m0), np.complex128)
        self.Aq_list = []
        self.E = np.full(m0, np.nan + 0j)
        self.res = np.zeros(m0)
        self.res_left = np.zeros(m0) if self.side != 1 else None
        if x0 is not None:
            x0 = np.asarray(x0)
            if x0.shape != (n, m0):
                raise ValueError("initial guess must be n x m0")
            self.X[:, :m0] = x0
            if self.two:
                self.X[:, m0:] = np.conj(x0) if x0_left is None else x0_left
        self._have_guess = config[5] == 1

    # -- views ---------------------------------------------------------------

    @property
    def X_right(self):
        return self.X[:, :self.m0]

    @property
    def X_left(self):
        if self.side == 1:
            return None
        if self.two:
            return self.X[:, self.m0:]
        return np.conj(self.X[:, :self.m0])

    # -- requests -----------------------------------------------------------

    def _images(self, q, ql, with_left=True, skip_zero=False):
        """``C_k = A_k Q`` and (two-sided) ``D_k = A_k^H Q_L``."""
        m0 = self.m0
        m = q.shape[1]
        self.X[:, :m] = q
        self.X[:, m:m0] = 0
        rc = slice(0, m)
        lc = slice(m0, m0 + m)
        if self.two and ql is not None:
            self.X[:, m0:m0 + m] = ql
            self.X[:, m0 + m:] = 0
        left = self.two and with_left and ql is not None
        if self.polynomial:
            c, d = [], []
            for k in range(self.p + 1):
                if skip_zero and k == 0:
                    c.append(None)
                    continue
                c.append((yield from self._multiply(Job.MULTIPLY_A, rc, k + 1)))
            if left:
                for k in range(self.p + 1):
                    d.append((yield from self._multiply(Job.MULTIPLY_A_ADJOINT, lc, k + 1)))
            return c, (d if left else None)
        if skip_zero:
            aq = None
        else:
            aq = yield from self._multiply(Job.MULTIPLY_A, rc)
        ahq = (yield from self._multiply(Job.MULTIPLY_A_ADJOINT, lc)) if left and not skip_zero else None
        bq = (yield from self._multiply(Job.MULTIPLY_B, rc)) if self.has_b else q.copy()
        bhq = None
        if left:
            bhq = (yield from self._multiply(Job.MULTIPLY_B_ADJOINT, lc)) if self.has_b else ql.copy()
        c = [None if aq is None else -aq, bq]
        d = [None if ahq is None else -ahq, bhq] if left else None
        return c, d

    # -- numerics -------------------------------------------------------------

    def _project(self, q, ql, c):
        if self.side == 0:
            w = ql.conj().T
        elif self.side == 2:
            w = q.T
        else:
            w = q.conj().T
        return [w @ ck for ck in c]

    def _coef_norms(self, c, q):
        if self.coef_norms is not None:
            return self.coef_norms
        m = max(q.shape[1], 1)
        return np.array([np.linalg.norm(ck) * np.sqrt(self.n / m) for ck in c])

    def _left_inverse_iteration(self, aq, lam):
        """Left vectors of the projected polynomial by inverse iteration."""
        m = aq[0].shape[0]
        out = np.zeros((m, lam.size), complex)
        start = np.ones(m, complex) / np.sqrt(m)
        for i, l in enumerate(lam):
            mh = sum((l ** k) * ak for k, ak in enumerate(aq)).conj().T
            # P(lam) may vanish exactly at a root, so scale by the coefficients
            scale = max(sum(abs(l) ** k * np.linalg.norm(ak, 1) for k, ak in enumerate(aq)),
                        1e-300)
            psi = start
            for shift in (1e-13, 1e-10, 1e-7):
                try:
                    f = lu_factor(mh + shift * scale * np.eye(m))
                except FeastError:
                    continue
                v = start
                with np.errstate(all="ignore"):
                    for _ in range(3):
                        v = lu_solve(f, v)
                        v = v / np.linalg.norm(v)
                if np.all(np.isfinite(v)):
                    psi = v
                    break
            out[:, i] = psi
        return out

    def _reduce(self, q, ql, c, d):
        """Rayleigh-Ritz; returns a dict with sorted Ritz data (K columns)."""
        aq = self._project(q, ql, c)
        m = q.shape[1]
        self.Aq_list = aq
        if not self.polynomial:
            a_red, b_red = -aq[0], aq[1]
            self.Aq[:] = 0
            self.Bq[:] = 0
            self.Aq[:m, :m] = a_red
            self.Bq[:m, :m] = b_red
            lam, phi, psi = reduced_general_eig(a_red, b_red, left=self.two)
            if self.side == 2:
                t = np.einsum("ij,ik,kj->j", phi, b_red, phi)
                t = np.where(np.abs(t) > 0, t, 1.0)
                phi = phi / np.sqrt(t)
                psi = np.conj(phi)
        else:
            lam, phi = polynomial_eig(aq)
            psi = None
            if self.side == 2:
                psi = np.conj(phi)
            elif self.two:
                psi = self._left_inverse_iteration(aq, lam)
        check_pairs_finite(lam)
        inside = self.rule.contains(lam)
        dist = np.abs(lam - self.region.emid)
        # inside first by (re, im), then outside nearest to the center
        key_a = np.where(inside, lam.real, dist)
        key_b = np.where(inside, lam.imag, 0.0)
        order = np.lexsort((key_b, key_a, ~inside))
        k = min(self.m0, lam.size)
        order = order[:k]
        lam, phi = lam[order], phi[:, order]
        psi = None if psi is None else psi[:, order]
        return lam, phi, psi, inside[order]

    def _residuals(self, lam, phi, psi, q, ql, c, d):
        cx = [ck @ phi for ck in c]
        x = q @ phi
        r = sum(cx[k] * (lam ** k) for k in range(len(cx)))
        out = {"x": x, "cx": cx, "r": r}
        if self.polynomial:
            nrm = self._coef_norms(c, q)
            denom = np.linalg.norm(x, axis=0) * sum(self.alpha ** k * nrm[k] for k in range(len(nrm)))
        else:
            denom = self.alpha * np.linalg.norm(cx[1], axis=0)
        out["res"] = np.linalg.norm(r, axis=0) / np.where(denom > 0, denom, 1.0)
        if psi is None:
            return out
        if self.side == 2:
            y = np.conj(x)
            dy = [np.conj(v) for v in cx]
        else:
            y = ql @ psi
            if self.polynomial:
                y = y / np.linalg.norm(y, axis=0)
                psi = psi / np.linalg.norm(ql @ psi, axis=0)
            dy = [dk @ psi for dk in d]
        rl = sum(dy[k] * (np.conj(lam) ** k) for k in range(len(dy)))
        if self.polynomial:
            nrm = self._coef_norms(c, q)
            denl = np.linalg.norm(y, axis=0) * sum(self.alpha ** k * nrm[k] for k in range(len(nrm)))
        else:
            denl = self.alpha * np.linalg.norm(dy[1], axis=0)
        out.update(y=y, dy=dy, rl=rl,
                   res_left=np.linalg.norm(rl, axis=0) / np.where(denl > 0, denl, 1.0))
        return out

    def _publish(self, lam, inside, rr):
        m0 = self.m0
        k = lam.size
        M = int(inside.sum())
        self.E[:] = np.nan
        self.E[:k] = lam
        self.res[:] = 0
        self.res[:k] = rr["res"]
        self.X[:, :m0] = 0
        self.X[:, :k] = rr["x"]
        if self.two:
            self.X[:, m0:] = 0
            self.X[:, m0:m0 + k] = rr["y"]
        if self.res_left is not None and "res_left" in rr:
            self.res_left[:] = 0
            self.res_left[:k] = rr["res_left"]
        self.M = M
        return M

    def _safe_shift(self, mu):
        """Move Ritz values that sit on a node; the update holds for any shift."""
        z = self.rule.nodes
        d = np.min(np.abs(z[:, None] - mu[None, :]), axis=0)
        tiny = 1e-8 * self.alpha
        bump = d < tiny
        if not np.any(bump):
            return mu
        mu = mu.copy()
        mu[bump] += 1e-6 * self.alpha * (1 + 1j)
        return mu

    def _contour_pass(self, rhs, mu=None, x=None, rhs_left=None, y=None):
        nodes, weights = self.rule.nodes, self.rule.weights
        acc, lacc = yield from self._contour(
            nodes, weights, rhs, mu,
            adjoint_rhs=rhs_left, adjoint_mode="left" if self.two else None,
            adjoint_reuse=self.adjoint_reuse)
        if mu is None:
            return acc, lacc
        rho = self._filter(mu)
        q = x * rho - acc
        ql = None if lacc is None else y * np.conj(rho) - lacc
        return q, ql

    # -- main loop --------------------------------------------------------------

    def _run(self):
        n, m0, cfg = self.n, self.m0, self.config
        mode = cfg[14]
        if mode == 2:
            yield from self._stochastic()
            return
        complex_x0 = True
        mu = x = y = None
        trace_prev = None
        rhs_left = None
        if self._have_guess:
            q, ql, _ = orthonormalize(self.X[:, :m0].copy(),
                                      left=self.X[:, m0:].copy() if self.two else None)
            if q.shape[1] == 0:
                raise FeastError(Info.BAD_M0, "initial guess has rank 0")
            pack = yield from self._loop_rr(q, ql)
            lam, inside, rr = pack
            M = self._publish(lam, inside, rr)
            trace_prev = float(np.sum(lam[:M].real))
            mu, x, rhs, y, rhs_left = self._next_rhs(lam, rr)
        else:
            rhs = self._random_block(m0, complex_x0)
            if self.two:
                rhs_left = self._random_block(m0, complex_x0)
        self.loop = 0
        while True:
            q, ql = yield from self._contour_pass(rhs, mu, x, rhs_left, y)
            if mode == 1:
                k = q.shape[1]
                self.X[:, :k] = q
                if self.two and ql is not None:
                    self.X[:, m0:m0 + k] = ql
                self.M = 0
                self.info = Info.SUBSPACE_ONLY
                return
            if self.side == 2:
                ql = np.conj(q)
            q, ql, _ = orthonormalize(q, left=ql if self.two else None)
            if self.side == 2:
                ql = np.conj(q)
            if q.shape[1] == 0:
                self.M = 0
                self.info = Info.NO_EIGENVALUE
                return
            lam, inside, rr = yield from self._loop_rr(q, ql)
            M = self._publish(lam, inside, rr)
            m = q.shape[1]
            trace = float(np.sum(lam[:M].real))
            self.epsout = 1.0 if trace_prev is None else abs(trace - trace_prev) / self.alpha
            trace_prev = trace
            rep = compute_convergence(self.res, M, self.epsout, cfg)
            self._record(M, rep.max_res, trace, rep.converged, m)
            if M == 0:
                self.info = Info.NO_EIGENVALUE
                return
            # a subspace spanning the whole space cannot be too small
            if M >= m0 and m == m0 and m < n:
                self.info = Info.M0_TOO_SMALL
                return
            if rep.converged:
                self.info = self._biortho_info(rr, M)
                return
            if self.loop >= cfg[4]:
                self.info = Info.NO_CONVERGENCE
                return
            self.loop += 1
            mu, x, rhs, y, rhs_left = self._next_rhs(lam, rr)

    def _loop_rr(self, q, ql):
        c, d = yield from self._images(q, ql)
        lam, phi, psi, inside = self._reduce(q, ql, c, d)
        rr = self._residuals(lam, phi, psi, q, ql, c, d)
        return lam, inside, rr

    def _next_rhs(self, lam, rr):
        mu = self._safe_shift(lam)
        x = rr["x"]
        cx = rr["cx"]
        rhs = sum(cx[k] * (mu ** k) for k in range(len(cx)))
        y = rhs_left = None
        if self.two:
            y = rr["y"]
            dy = rr["dy"]
            rhs_left = sum(dy[k] * (np.conj(mu) ** k) for k in range(len(dy)))
        return mu, x, rhs, y, rhs_left

    def _biortho_info(self, rr, M):
        if self.polynomial or "y" not in rr:
            return Info.SUCCESS
        y = rr["y"][:, :M]
        bx = rr["cx"][1][:, :M]
        g = y.conj().T @ bx
        self.biortho_error = float(np.max(np.abs(g - np.eye(M))))
        return Info.SUCCESS if self.biortho_error < BIORTHO_TOL else Info.NOT_BIORTHONORMAL

    def _stochastic(self):
        m0 = self.m0
        v = self._rademacher(m0).astype(complex)
        c, _ = yield from self._images(v, None, with_left=False, skip_zero=True)
        if self.polynomial:
            def rhs(j, z):
                return sum(k * z ** (k - 1) * c[k] for k in range(1, self.p + 1))
        else:
            rhs = c[1]
        q, _ = yield from self._contour_pass(rhs)
        self.M = stochastic_estimate(v, q)
        self.info = Info.STOCHASTIC_ONLY


class PolynomialKernel(GeneralKernel):
    """:class:`GeneralKernel` with the polynomial protocol enabled."""

    def __init__(self, n, m0, config, region, rule, degree, **kw):
        if degree < 1:
            raise ValueError("polynomial degree must be >= 1")
        super().__init__(n, m0, config, region, rule, degree=degree, polynomial=True, **kw)


def rci_general(n, m0, config, region, rule, **kw) -> GeneralKernel:
    return GeneralKernel(n, m0, config, region, rule, **kw)


def rci_general_step(state: GeneralKernel):
    return state.step()


def rci_polynomial(n, p, m0, config, region, rule, **kw) -> PolynomialKernel:
    return PolynomialKernel(n, m0, config, region, rule, p, **kw)


def rci_polynomial_step(state: PolynomialKernel):
    return state.step()
