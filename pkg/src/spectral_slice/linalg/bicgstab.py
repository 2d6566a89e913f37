"""Unpreconditioned BiCGStab on blocks of right-hand sides.

Columns are iterated together but stop independently: once column ``c``
reaches ``||b - A x|| <= tol ||b||`` it is frozen and no longer passed to the
operator.  Hitting ``maxit`` is not an error; the best iterate is returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import FeastError, Info

__all__ = ["SolveStats", "bicgstab"]


@dataclass(frozen=True)
class SolveStats:
    """Per-solve summary; per-column details in ``column_*``."""

    iterations: int
    final_relative_residual: float
    column_iterations: np.ndarray
    column_residuals: np.ndarray
    converged: bool
    restarts: int = 0

    @property
    def residual_min(self) -> float:
        return float(self.column_residuals.min()) if self.column_residuals.size else 0.0


def _cdot(u, v):
    """Column-wise ``u^H v``."""
    return np.einsum("ij,ij->j", u.conj(), v)


def _norms(u):
    return np.sqrt(np.einsum("ij,ij->j", u.real, u.real) + np.einsum("ij,ij->j", u.imag, u.imag)) \
        if np.iscomplexobj(u) else np.linalg.norm(u, axis=0)


def bicgstab(apply: Callable[[np.ndarray], np.ndarray], rhs, tol: float = 1e-1,
             maxit: int = 40, precision: str = "double", x0=None,
             rng: np.random.Generator | None = None):
    """Solve ``A X = RHS`` column by column with BiCGStab.

    Parameters
    ----------
    apply : callable
        ``apply(V) -> A @ V`` on ``n x k`` blocks (double precision in/out).
    rhs : array
        ``n`` vector or ``n x k`` block.
    tol, maxit : float, int
        Relative residual target and iteration cap (one iteration = two
        operator applications).
    precision : {'double', 'single'}
        Working precision of the Krylov vectors.  The reported residual is
        always recomputed in double precision.
    rng : Generator, optional
        Source of the perturbation used to restart after a breakdown.

    Returns
    -------
    x : ndarray
        complex128 solution with the shape of ``rhs``.
    stats : SolveStats
    """
    if not 0 < tol < 1:
        raise ValueError("tol must be in (0, 1)")
    if maxit < 1:
        raise ValueError("maxit must be >= 1")
    wdt = np.complex64 if precision == "single" else np.complex128
    b_in = np.asarray(rhs)
    vec = b_in.ndim == 1
    b = np.asarray(b_in.reshape(b_in.shape[0], -1), dtype=np.complex128)
    n, k = b.shape
    bnorm = _norms(b)
    safe = np.where(bnorm > 0, bnorm, 1.0)

    def op(v):
        return np.asarray(apply(v.astype(np.complex128)), dtype=wdt)

    x = np.zeros((n, k), wdt) if x0 is None else np.array(x0, dtype=wdt).reshape(n, k)
    its = np.zeros(k, dtype=np.int64)
    restarts = np.zeros(k, dtype=np.int64)
    done = bnorm == 0
    x[:, done] = 0
    best_x = x.copy()
    best_res = np.where(done, 0.0, np.inf)

    def start(cols):
        r = b[:, cols].astype(wdt) - (op(x[:, cols]) if np.any(x[:, cols]) else 0)
        return r

    active = np.flatnonzero(~done)
    r = np.zeros((n, k), wdt)
    if active.size:
        r[:, active] = start(active)
    rhat = r.copy()
    rho = np.ones(k, wdt)
    alpha = np.ones(k, wdt)
    omega = np.ones(k, wdt)
    v = np.zeros((n, k), wdt)
    p = np.zeros((n, k), wdt)

    def record(cols, res):
        better = res < best_res[cols]
        idx = cols[better]
        best_res[idx] = res[better]
        best_x[:, idx] = x[:, idx]

    if active.size:
        res0 = _norms(r[:, active]) / safe[active]
        record(active, res0)
        conv = res0 <= tol
        done[active[conv]] = True

    it = 0
    while it < maxit:
        active = np.flatnonzero(~done)
        if active.size == 0:
            break
        it += 1
        its[active] = it
        ra, rh = r[:, active], rhat[:, active]
        rho_new = _cdot(rh, ra)
        scale = _norms(rh) * _norms(ra)
        broke = np.abs(rho_new) <= 1e-30 * np.maximum(scale, 1e-300)
        beta = (rho_new / rho[active]) * (alpha[active] / omega[active])
        pa = ra + beta * (p[:, active] - omega[active] * v[:, active])
        va = op(pa)
        denom = _cdot(rh, va)
        broke |= np.abs(denom) <= 1e-30 * np.maximum(_norms(rh) * _norms(va), 1e-300)
        denom = np.where(broke, 1, denom)
        al = rho_new / denom
        s = ra - al * va
        snorm = _norms(s) / safe[active]
        early = (snorm <= tol) & ~broke
        xa = x[:, active] + al * pa
        ta = op(s)
        tt = _cdot(ta, ta).real
        # early columns never use omega; subnormal t.t would overflow it
        stopped_t = (tt <= np.finfo(tt.dtype).tiny) | early
        om = np.where(stopped_t, 0, _cdot(ta, s) / np.where(stopped_t, 1, tt))
        full = ~early & ~broke
        xa = np.where(full, xa + om * s, xa)
        xa = np.where(broke, x[:, active], xa)
        rn = np.where(early, s, s - om * ta)
        broke |= full & (om == 0) & ~stopped_t
        x[:, active] = xa
        r[:, active] = rn
        p[:, active] = pa
        v[:, active] = va
        rho[active] = rho_new
        alpha[active] = al
        omega[active] = np.where(om == 0, 1, om)
        res = _norms(rn) / safe[active]
        record(active, res)
        finished = (res <= tol) & ~broke
        done[active[finished]] = True
        bad = active[broke & ~finished]
        if bad.size:
            if np.any(restarts[bad] >= 1):
                raise FeastError(Info.INNER_SOLVER, "BiCGStab breakdown after restart")
            restarts[bad] += 1
            gen = rng if rng is not None else np.random.default_rng(12345)
            pert = gen.standard_normal((n, bad.size)) + 1j * gen.standard_normal((n, bad.size))
            xscale = np.maximum(_norms(x[:, bad].astype(np.complex128)), safe[bad]) * 1e-3 / np.sqrt(n)
            x[:, bad] = x[:, bad] + (pert * xscale).astype(wdt)
            r[:, bad] = start(bad)
            rhat[:, bad] = r[:, bad]
            rho[bad] = alpha[bad] = omega[bad] = 1
            v[:, bad] = 0
            p[:, bad] = 0

    xout = best_x.astype(np.complex128)
    # true residual in double precision
    true_res = np.zeros(k)
    nz = np.flatnonzero(bnorm > 0)
    if nz.size:
        true_res[nz] = _norms(b[:, nz] - np.asarray(apply(xout[:, nz]), dtype=np.complex128)) / bnorm[nz]
    stats = SolveStats(
        iterations=int(its.max()) if k else 0,
        final_relative_residual=float(true_res.max()) if k else 0.0,
        column_iterations=its,
        column_residuals=true_res,
        converged=bool(np.all(true_res <= tol * (1 + 1e-6) + (1e-6 if precision == "single" else 0))),
        restarts=int(restarts.sum()),
    )
    return (xout[:, 0] if vec else xout), stats
