"""Black-box entry points wiring storage, contour, kernel and inner solvers."""

from __future__ import annotations

import time
import warnings
from typing import Optional, Sequence

import numpy as np

from .. import _log
from ..contour import ContourRule, general_contour, hermitian_contour
from ..core import (Config, CsrMatrix, DenseMatrix, EigResult, Ellipse, Form, Info,
                    Interval, ProblemKind, Structure, default_config, expand_uplo,
                    validate)
from ..kernel.general import GeneralKernel, PolynomialKernel
from ..kernel.hermitian import HermitianKernel
from .backend import Backend, drive

__all__ = [
    "solve_dense_hermitian",
    "solve_dense_general",
    "solve_sparse",
    "solve_polynomial",
    "stochastic_count",
    "subspace_only",
    "solve",
    "DENSE_FALLBACK_MAX_N",
]

DENSE_FALLBACK_MAX_N = 64


# -- helpers ---------------------------------------------------------------------

def _is_complex(*mats):
    for m in mats:
        if m is None:
            continue
        data = m.data if isinstance(m, CsrMatrix) else (m.values if isinstance(m, DenseMatrix) else np.asarray(m))
        if np.iscomplexobj(data):
            return True
    return False


def _n_of(m):
    if isinstance(m, CsrMatrix):
        return m.n
    if isinstance(m, DenseMatrix):
        return m.n
    return np.asarray(m).shape[0]


def _dense_full(m, uplo, kind):
    if m is None:
        return None
    dm = m if isinstance(m, DenseMatrix) else DenseMatrix(np.asarray(m), uplo)
    if dm.uplo != uplo and not isinstance(m, DenseMatrix):
        dm = DenseMatrix(dm.values, uplo)
    return expand_uplo(dm, kind).values


def _csr_full(m, uplo, kind):
    if m is None:
        return None
    if not isinstance(m, CsrMatrix):
        m = CsrMatrix.from_dense(np.asarray(m), uplo)
    if m.uplo == "F" and uplo != "F":
        m = CsrMatrix(m.n, m.indptr, m.indices, m.data, uplo)
    return expand_uplo(m, kind)


def _empty(info, n, m0, cfg, complex_=True, two=False):
    n = max(int(n), 0)
    m0 = max(int(m0), 0)
    dt = complex if complex_ else float
    return EigResult(M=0, E=np.full(m0, np.nan, dtype=dt), X=np.zeros((n, m0), dt),
                     res=np.zeros(m0), epsout=0.0, loop=0, info=int(info),
                     X_left=np.zeros((n, m0), complex) if two else None,
                     res_left=np.zeros(m0) if two else None, fpm=cfg)


def _fallback_limit(flag) -> int:
    """``True`` means the default size cap; an int is an explicit cap."""
    if flag is True:
        return DENSE_FALLBACK_MAX_N
    return int(flag or 0)


def _pad(res: EigResult, m0: int) -> EigResult:
    """Grow ``E``/``X``/``res`` of a run on a clamped subspace back to ``m0``."""
    m = res.E.size
    if m >= m0:
        return res
    extra = m0 - m
    n = res.X.shape[0]
    res.E = np.concatenate([res.E, np.full(extra, np.nan, dtype=res.E.dtype)])
    res.X = np.hstack([res.X, np.zeros((n, extra), res.X.dtype)])
    res.res = np.concatenate([res.res, np.zeros(extra)])
    if res.X_left is not None:
        res.X_left = np.hstack([res.X_left, np.zeros((n, extra), res.X_left.dtype)])
    if res.res_left is not None:
        res.res_left = np.concatenate([res.res_left, np.zeros(extra)])
    return res


def _clamp(m0, n, degree, x0, x0_left):
    """Subspace size actually iterated: at most ``degree * n``."""
    m = min(int(m0), max(int(n), 0) * degree)
    if m < m0:
        x0 = None if x0 is None else np.asarray(x0)[:, :m]
        x0_left = None if x0_left is None else np.asarray(x0_left)[:, :m]
    return m, x0, x0_left


def _hermitian_rule(region: Interval, cfg: Config, rule: Optional[ContourRule]):
    if rule is not None:
        return rule.half()
    return hermitian_contour(region.emin, region.emax, cfg[2], cfg[16], cfg[18])


def _general_rule(region: Ellipse, cfg: Config, rule: Optional[ContourRule]):
    if rule is not None:
        return rule.full()
    return general_contour(region.emid, region.r, cfg[8], cfg[16], cfg[18], cfg[19])


def _check_region(kind: ProblemKind, region):
    want = Interval if kind.is_hermitian else Ellipse
    if not isinstance(region, want):
        raise TypeError(f"{kind.structure.value} {kind.form.value} problems need an "
                        f"{want.__name__} search region")


def _finish(title, kind, region, n, m0, cfg, res, t0, solver, backend=None):
    rows = [("problem", f"{kind.structure.value} {kind.form.value}"
             + (f" (degree {kind.degree})" if kind.form is Form.POLYNOMIAL else "")),
            ("N", n), ("M0", m0)]
    if isinstance(region, Interval):
        rows += [("Emin", f"{region.emin:.16E}"), ("Emax", f"{region.emax:.16E}")]
    else:
        rows += [("Emid", f"{complex(region.emid)}"), ("r", f"{region.r:.16E}")]
    rows += [("#contour nodes", cfg[2] if kind.is_hermitian else cfg[8]),
             ("quadrature", "Gauss" if cfg[16] == 0 else "trapezoidal"),
             ("ellipse ratio", cfg[18] / 100.0),
             ("stopping eps", f"1E-{cfg[3]:02d}"),
             ("criterion", "residual" if cfg[6] == 1 else "trace"),
             ("inner solver", solver),
             ("precision", "single" if cfg[42] == 1 else "double")]
    if solver == "bicgstab":
        rows += [("BiCGStab eps", f"1E-{cfg[45]}"), ("BiCGStab maxit", cfg[46])]
        if cfg[41] == 1:
            rows.append(("matrix scaling fpm(41)", "not implemented, ignored"))
    if backend is not None:
        rows.append(("factorizations", backend.factorizations))
    _log.emit(cfg[1], _log.format_run(title, rows, res, time.perf_counter() - t0))
    return res


def _config_for(kind, config, inexact=False):
    if config is None:
        return default_config(kind, inexact)
    return config


def _run_linear(kind, title, a, b, region, m0, cfg, *, rule, solver, seed, workers,
                x0, x0_left=None, storage="dense"):
    n = _n_of(a)
    t0 = time.perf_counter()
    m_req = m0
    m0, x0, x0_left = _clamp(m0, n, 1, x0, x0_left)
    code = validate(cfg, region, n, m0, kind)
    two = not kind.is_hermitian and cfg[15] == 0 and cfg[14] != 2
    if code:
        return _finish(title, kind, region, n, m0, cfg,
                       _empty(code, n, m0, cfg, not kind.structure.is_real or not kind.is_hermitian,
                              two), t0, solver)
    _check_region(kind, region)
    precision = "single" if cfg[42] == 1 else "double"
    if kind.is_hermitian:
        rl = _hermitian_rule(region, cfg, rule)
        kern = HermitianKernel(n, m0, cfg, region, rl, real=kind.structure.is_real,
                               has_b=b is not None, adjoint_reuse=True, x0=x0, seed=seed)
    else:
        rl = _general_rule(region, cfg, rule)
        kern = GeneralKernel(n, m0, cfg, region, rl, has_b=b is not None,
                             adjoint_reuse=True, x0=x0, x0_left=x0_left, seed=seed)
    backend = Backend(a, b, solver=solver, precision=precision, store=cfg[10] == 1,
                      tol=10.0 ** (-cfg[45]), maxit=cfg[46], workers=workers,
                      nodes=rl.nodes, seed=0 if seed is None else seed)
    res = _pad(drive(kern, backend), m_req)
    return _finish(title, kind, region, n, m_req, cfg, res, t0, solver, backend)


def _seed_arg(seed):
    return None if seed is None else int(seed)


# -- public drivers --------------------------------------------------------------

def solve_dense_hermitian(uplo: str, a, b=None, region: Interval = None, m0: int = 0,
                          config: Optional[Config] = None, *, rule: Optional[ContourRule] = None,
                          seed=None, workers: int = 1, x0=None) -> EigResult:
    """Eigenpairs of a dense Hermitian problem inside ``[Emin, Emax]``.

    Parameters
    ----------
    uplo : {'F', 'L', 'U'}
        Triangle of ``a`` (and ``b``) that is referenced.
    a, b : array_like or DenseMatrix
        ``A`` Hermitian, ``B`` Hermitian positive definite (None for ``B = I``).
    region : Interval
    m0 : int
        Search subspace size, larger than the expected count.
    config : Config, optional
        ``fpm`` block; defaults for the problem kind if None.
    rule : ContourRule, optional
        Expert mode: custom quadrature (a conjugation-symmetric full rule
        or a half rule) replaces the one built from ``fpm``.
    seed : int, optional
        Seed of the random initial subspace.
    workers : int
        Threads used to solve contour nodes concurrently.
    x0 : array, optional
        Initial subspace when ``fpm(5)=1``.
    """
    structure = Structure.COMPLEX_HERMITIAN if _is_complex(a, b) else Structure.REAL_SYMMETRIC
    form = Form.STANDARD if b is None else Form.GENERALIZED
    kind = ProblemKind(structure, form)
    cfg = _config_for(kind, config)
    if cfg[43] == 1:
        warnings.warn("fpm(43)=1 has no effect on dense drivers", stacklevel=2)
    n = _n_of(a)
    if n <= 0:
        return _empty(Info.BAD_N, 0, m0, cfg)
    af = _dense_full(a, uplo, kind)
    bf = _dense_full(b, uplo, kind)
    return _run_linear(kind, "dense Hermitian", af, bf, region, m0, cfg, rule=rule,
                       solver="lu", seed=_seed_arg(seed), workers=workers, x0=x0)


def solve_dense_general(a, b=None, region: Ellipse = None, m0: int = 0,
                        config: Optional[Config] = None, *, symmetric: bool = False,
                        rule: Optional[ContourRule] = None, seed=None, workers: int = 1,
                        x0=None, x0_left=None) -> EigResult:
    """Eigenpairs of a dense non-Hermitian problem inside an ellipse.

    ``symmetric=True`` declares complex-symmetric data (``A = A^T``), which
    selects the one-sided ``left = conj(right)`` default ``fpm(15)=2``.
    Right vectors are in ``X``; left vectors in ``X_left`` unless
    ``fpm(15)=1``.
    """
    cplx = _is_complex(a, b)
    if symmetric:
        structure = Structure.COMPLEX_SYMMETRIC
    else:
        structure = Structure.COMPLEX_GENERAL if cplx else Structure.REAL_GENERAL
    kind = ProblemKind(structure, Form.STANDARD if b is None else Form.GENERALIZED)
    cfg = _config_for(kind, config)
    if cfg[43] == 1:
        warnings.warn("fpm(43)=1 has no effect on dense drivers", stacklevel=2)
    n = _n_of(a)
    if n <= 0:
        return _empty(Info.BAD_N, 0, m0, cfg)
    af = np.asarray(a.values if isinstance(a, DenseMatrix) else a)
    bf = None if b is None else np.asarray(b.values if isinstance(b, DenseMatrix) else b)
    return _run_linear(kind, "dense general", af, bf, region, m0, cfg, rule=rule,
                       solver="lu", seed=_seed_arg(seed), workers=workers, x0=x0,
                       x0_left=x0_left)


def solve_sparse(kind: ProblemKind, uplo: str, a, b=None, region=None, m0: int = 0,
                 config: Optional[Config] = None, *, dense_fallback: bool = False,
                 rule: Optional[ContourRule] = None, seed=None, workers: int = 1,
                 x0=None, x0_left=None) -> EigResult:
    """Sparse (CSR) driver; inner systems by BiCGStab.

    Polynomial kinds take the coefficient list ``[A_0, ..., A_p]`` as ``a``
    (``b`` unused).  ``dense_fallback=True`` routes problems with
    ``n <= 64`` through dense LU instead of BiCGStab; an integer sets the
    size cap.  ``fpm(60)`` of the
    returned configuration holds the total BiCGStab iteration count.
    """
    if kind.form is Form.POLYNOMIAL:
        return solve_polynomial(kind, a, region, m0, config, uplo=uplo,
                                dense_fallback=dense_fallback, rule=rule, seed=seed,
                                workers=workers, x0=x0, x0_left=x0_left)
    inexact = config[43] == 1 if config is not None else True
    cfg = _config_for(kind, config, inexact)
    n = _n_of(a)
    if n <= 0:
        return _empty(Info.BAD_N, 0, m0, cfg)
    af = _csr_full(a, uplo, kind)
    bf = _csr_full(b, uplo, kind)
    use_dense = n <= _fallback_limit(dense_fallback)
    solver = "lu" if use_dense else "bicgstab"
    title = "sparse " + ("Hermitian" if kind.is_hermitian else "general")
    return _run_linear(kind, title, af, bf, region, m0, cfg, rule=rule, solver=solver,
                       seed=_seed_arg(seed), workers=workers, x0=x0, x0_left=x0_left)


def solve_polynomial(kind: ProblemKind, coeffs: Sequence, region: Ellipse, m0: int,
                     config: Optional[Config] = None, *, uplo: str = "F",
                     dense_fallback: bool = True, rule: Optional[ContourRule] = None,
                     seed=None, workers: int = 1, x0=None, x0_left=None) -> EigResult:
    """Eigenpairs of ``sum_k lam^k A_k`` inside an ellipse.

    Dense coefficients use LU; CSR coefficients use BiCGStab unless
    ``dense_fallback`` and ``n <= 64``.  The residual is
    ``||P(lam) x|| / (||x|| sum_k (|Emid|+r)^k ||A_k||_F)``.
    """
    coeffs = list(coeffs)
    p = len(coeffs) - 1
    if p < 1:
        raise ValueError("need at least two coefficient matrices")
    if kind.form is not Form.POLYNOMIAL or kind.degree != p:
        kind = ProblemKind(kind.structure, Form.POLYNOMIAL, p)
    sparse = any(isinstance(c, CsrMatrix) for c in coeffs)
    inexact = config[43] == 1 if config is not None else False
    cfg = _config_for(kind, config, inexact)
    n = _n_of(coeffs[0])
    t0 = time.perf_counter()
    m_req = m0
    m0, x0, x0_left = _clamp(m0, n, p, x0, x0_left)
    code = validate(cfg, region, n, m0, kind)
    two = cfg[15] == 0 and cfg[14] != 2
    if code:
        return _finish("polynomial", kind, region, n, m0, cfg,
                       _empty(code, n, m0, cfg, True, two), t0, "lu")
    _check_region(kind, region)
    sym = kind.structure.is_symmetric or kind.structure is Structure.COMPLEX_HERMITIAN
    full = []
    for c in coeffs:
        if isinstance(c, CsrMatrix):
            full.append(_csr_full(c, uplo if sym else "F", kind) if sym else c)
        else:
            full.append(_dense_full(c, uplo, kind) if sym and uplo != "F" else np.asarray(
                c.values if isinstance(c, DenseMatrix) else c))
    use_lu = (not sparse) or n <= _fallback_limit(dense_fallback)
    solver = "lu" if use_lu else "bicgstab"
    norms = [np.linalg.norm(c.data) if isinstance(c, CsrMatrix) else np.linalg.norm(c)
             for c in full]
    rl = _general_rule(region, cfg, rule)
    kern = PolynomialKernel(n, m0, cfg, region, rl, p, coef_norms=norms,
                            adjoint_reuse=True, x0=x0, x0_left=x0_left, seed=_seed_arg(seed))
    backend = Backend(coeffs=full, solver=solver,
                      precision="single" if cfg[42] == 1 else "double",
                      store=cfg[10] == 1, tol=10.0 ** (-cfg[45]), maxit=cfg[46],
                      workers=workers, nodes=rl.nodes, seed=0 if seed is None else seed)
    res = _pad(drive(kern, backend), m_req)
    return _finish("polynomial", kind, region, n, m_req, cfg, res, t0, solver, backend)


# -- generic dispatch and special modes -------------------------------------------

def _infer_kind(a, b, region, kind):
    if kind is not None:
        return kind
    if isinstance(a, (list, tuple)):
        cplx = _is_complex(*a)
        return ProblemKind(Structure.COMPLEX_GENERAL if cplx else Structure.REAL_GENERAL,
                           Form.POLYNOMIAL, len(a) - 1)
    form = Form.STANDARD if b is None else Form.GENERALIZED
    cplx = _is_complex(a, b)
    if isinstance(region, Interval):
        return ProblemKind(Structure.COMPLEX_HERMITIAN if cplx else Structure.REAL_SYMMETRIC, form)
    return ProblemKind(Structure.COMPLEX_GENERAL if cplx else Structure.REAL_GENERAL, form)


def solve(a, b=None, *, region, m0: int, kind: Optional[ProblemKind] = None,
          config: Optional[Config] = None, uplo: str = "F", **kw) -> EigResult:
    """Dispatch on storage and kind.

    ``a`` may be a dense array / :class:`DenseMatrix`, a :class:`CsrMatrix`,
    or a list of polynomial coefficients.
    """
    kind = _infer_kind(a, b, region, kind)
    if isinstance(a, (list, tuple)) or kind.form is Form.POLYNOMIAL:
        return solve_polynomial(kind, a, region, m0, config, uplo=uplo, **kw)
    if isinstance(a, CsrMatrix):
        return solve_sparse(kind, uplo, a, b, region, m0, config, **kw)
    if kind.is_hermitian:
        return solve_dense_hermitian(uplo, a, b, region, m0, config, **kw)
    return solve_dense_general(a, b, region, m0, config,
                               symmetric=kind.structure is Structure.COMPLEX_SYMMETRIC, **kw)


def stochastic_count(a, b=None, *, region, m0: int, kind: Optional[ProblemKind] = None,
                     config: Optional[Config] = None, uplo: str = "F", **kw):
    """Stochastic estimate of the eigenvalue count inside the region.

    One contour pass is applied to ``m0`` Rademacher vectors ``V``; the
    estimate is ``round(mean_i Re(v_i^H Q_i))`` with ``Q`` the filtered
    image of ``B V``, a Hutchinson estimate of ``trace rho(B^-1 A)``.

    Returns ``(estimate, info)``; ``info`` is 5 on success.
    """
    kind = _infer_kind(a, b, region, kind)
    if config is None:
        config = default_config(kind, stochastic=True)
    else:
        config = config.updated({14: 2})
    res = solve(a, b, region=region, m0=m0, kind=kind, config=config, uplo=uplo, **kw)
    return res.M, res.info


def subspace_only(a, b=None, *, region, m0: int, kind: Optional[ProblemKind] = None,
                  config: Optional[Config] = None, uplo: str = "F", **kw):
    """Filtered block after one contour pass (``fpm(14)=1``).

    Returns ``(Q, info)`` with ``Q = rho(B^-1 A) X0`` as an ``n x m0``
    block, not orthonormalized; ``info`` is 4 on success.
    """
    kind = _infer_kind(a, b, region, kind)
    base = default_config(kind) if config is None else config
    res = solve(a, b, region=region, m0=m0, kind=kind, config=base.updated({14: 1}),
                uplo=uplo, **kw)
    return res.X[:, :m0], res.info
