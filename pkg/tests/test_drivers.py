import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectral_slice.contour import hermitian_contour
from spectral_slice.core import (CsrMatrix, Ellipse, Form, Info, Interval, ProblemKind, Structure,
                                 default_config)
from spectral_slice.drivers import (Backend, drive, solve, solve_dense_general,
                                    solve_dense_hermitian, solve_polynomial, solve_sparse,
                                    stochastic_count, subspace_only)
from spectral_slice.kernel import HermitianKernel, Job, rci_hermitian_step

from conftest import HELLO, HELLO_EIGS, laplacian_csr, subspace_angle

RS = ProblemKind(Structure.REAL_SYMMETRIC)
RG = ProblemKind(Structure.REAL_GENERAL)


def _inside(w, region):
    if isinstance(region, Interval):
        return np.sort(w[(w >= region.emin) & (w <= region.emax)].real)
    return w[np.abs(w - region.emid) < region.r]


def _same_set(a, b, tol):
    a, b = list(a), list(b)
    if len(a) != len(b):
        return False
    for x in a:
        k = int(np.argmin([abs(x - y) for y in b]))
        if abs(x - b[k]) > tol:
            return False
        b.pop(k)
    return True


# -- dense Hermitian ------------------------------------------------------------

def test_helloworld_dense(hello):
    res = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, seed=1)
    assert res.info == 0 and res.M == 2
    assert np.abs(res.E[:2] - 4.0).max() < 1e-10
    assert res.res[:2].max() < 1e-12
    assert res.loop <= 5


def test_helloworld_full_spectrum(hello):
    res = solve_dense_hermitian("F", hello, None, Interval(-1, 5), 5, seed=1)
    assert res.info == 0 and res.M == 4
    assert np.abs(np.sort(res.E[:4]) - HELLO_EIGS).max() < 1e-10
    assert res.E.size == 5 and np.isnan(res.E[4])


def test_helloworld_empty(hello):
    res = solve_dense_hermitian("F", hello, None, Interval(5, 6), 3, seed=1)
    assert res.info == Info.NO_EIGENVALUE and res.M == 0


@pytest.mark.parametrize("uplo", ["L", "U"])
def test_triangle_storage(hello, uplo):
    tri = np.tril(hello) if uplo == "L" else np.triu(hello)
    res = solve_dense_hermitian(uplo, tri, None, Interval(3, 5), 3, seed=1)
    assert res.M == 2 and np.abs(res.E[:2] - 4).max() < 1e-10


def test_invalid_inputs(hello):
    assert solve_dense_hermitian("F", hello, None, Interval(5, 3), 3).info == Info.BAD_REGION
    assert solve_dense_hermitian("F", hello, None, Interval(3, 5), 0).info == Info.BAD_M0
    cfg = default_config(RS).updated({3: 20})
    assert solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg).info == 103
    assert solve_dense_hermitian("F", np.zeros((0, 0)), None, Interval(3, 5), 3).info == Info.BAD_N


def test_wrong_region_type(hello):
    with pytest.raises(TypeError):
        solve_dense_hermitian("F", hello, None, Ellipse(4, 1), 3)


def test_generalized_hermitian_vs_oracle():
    rng = np.random.default_rng(11)
    n = 15
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = g + g.conj().T
    h = rng.standard_normal((n, n))
    b = np.eye(n) + 0.05 * h @ h.T
    w, v = np.linalg.eigh(np.linalg.inv(np.linalg.cholesky(b)) @ a
                          @ np.linalg.inv(np.linalg.cholesky(b)).conj().T)
    region = Interval((w[4] + w[5]) / 2, (w[8] + w[9]) / 2)
    res = solve_dense_hermitian("F", a, b, region, 7, seed=3)
    assert res.info == 0 and res.M == 4
    assert np.abs(np.sort(res.E[:4]) - w[5:9]).max() < 1e-8
    x = res.X[:, :4]
    # oracle eigenvectors of the pencil
    lw, lv = np.linalg.eig(np.linalg.solve(b, a))
    idx = np.argsort(lw.real)[5:9]
    assert subspace_angle(x, lv[:, idx]) < 1e-6
    assert np.abs(x.conj().T @ b @ x - np.eye(4)).max() < 1e-10


def test_mixed_precision_equivalence(hello):
    cfg = default_config(RS)
    r1 = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg.updated({42: 1}), seed=2)
    r0 = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg.updated({42: 0}), seed=2)
    assert np.abs(np.sort(r1.E[:2]) - np.sort(r0.E[:2])).max() < 1e-10


def test_factorization_cache_same_result(hello):
    cfg = default_config(RS)
    r1 = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg.updated({10: 1}), seed=4)
    r0 = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg.updated({10: 0}), seed=4)
    assert np.array_equal(r1.E, r0.E) and np.array_equal(r1.X, r0.X)


def test_dense_inexact_flag_warns(hello):
    cfg = default_config(RS).updated({43: 1})
    with pytest.warns(UserWarning, match="fpm\\(43\\)"):
        res = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg, seed=1)
    assert res.M == 2


def test_log_file(tmp_path, monkeypatch, hello):
    monkeypatch.chdir(tmp_path)
    cfg = default_config(RS).updated({1: -3})
    solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg, seed=1)
    solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg, seed=1)
    text = (tmp_path / "feast3.log").read_text()
    assert text.count("dense Hermitian") == 2


def test_log_stdout(capsys, hello):
    cfg = default_config(RS).updated({1: 1})
    solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg, seed=1)
    assert "dense Hermitian" in capsys.readouterr().out


def test_silent_by_default(capsys, hello):
    solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, seed=1)
    assert capsys.readouterr().out == ""


def test_initial_guess(hello):
    w, v = np.linalg.eigh(hello)
    cfg = default_config(RS).updated({5: 1})
    res = solve_dense_hermitian("F", hello, None, Interval(3, 5), 2, cfg, x0=v[:, 2:])
    assert res.M == 2 and res.loop <= 1


def test_driver_matches_hand_driven_loop(hello):
    cfg = default_config(RS)
    region = Interval(3, 5)
    res = solve_dense_hermitian("F", hello, None, region, 3, cfg, seed=5)
    rule = hermitian_contour(3, 5, cfg[2], cfg[16], cfg[18])
    k = HermitianKernel(4, 3, cfg, region, rule, real=True, has_b=False, seed=5)
    be = Backend(hello, None, precision="single", store=True, nodes=rule.nodes)
    while True:
        act = rci_hermitian_step(k)
        if act.job == Job.DONE:
            break
        if act.job == Job.FACTORIZE:
            be.factorize(act.node, act.ze)
        elif act.job == Job.SOLVE:
            k.work2[:, act.columns] = be.solve(act.node, act.ze, k.work2[:, act.columns])
        else:
            k.work1[:, act.columns] = be.multiply(act.job, k.X[:, act.columns]).real
    hand = k.result()
    assert np.array_equal(hand.E, res.E) and np.array_equal(hand.X, res.X)
    assert np.array_equal(hand.res, res.res) and hand.loop == res.loop


@pytest.mark.parametrize("store", [0, 1])
def test_workers_bitwise(hello, store):
    cfg = default_config(RS).updated({10: store})
    r1 = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg, seed=7, workers=1)
    r4 = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg, seed=7, workers=4)
    assert np.array_equal(r1.E, r4.E) and np.array_equal(r1.X, r4.X)


def test_trace_criterion(hello):
    cfg = default_config(RS).updated({6: 0})
    res = solve_dense_hermitian("F", hello, None, Interval(3, 5), 3, cfg, seed=1)
    assert res.info == 0 and res.M == 2 and res.epsout < 1e-12


# -- dense general --------------------------------------------------------------

def test_general_diagonal():
    a = np.diag([1, 2, 3 + 4j])
    res = solve_dense_general(a, None, Ellipse(3 + 4j, 1), 2, seed=1)
    assert res.info == 0 and res.M == 1
    assert abs(res.E[0] - (3 + 4j)) < 1e-10


def test_general_rotation_splits_pair():
    th = 0.7
    a = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    res = solve_dense_general(a, None, Ellipse(np.exp(1j * th), 0.5), 2, seed=1)
    assert res.M == 1 and abs(res.E[0] - np.exp(1j * th)) < 1e-10


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("side", [0, 1, 2])
def test_general_random_vs_oracle(seed, side):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((12, 12))
    w = np.linalg.eigvals(a)
    region = Ellipse(0.3, 1.6)
    inside = _inside(w, region)
    cfg = default_config(RG).updated({15: side})
    res = solve_dense_general(a, None, region, max(inside.size + 4, 6), cfg, seed=seed)
    assert res.info in (0, 6)
    assert _same_set(res.E[:res.M], inside, 1e-8)
    if side == 0 and res.info == 0:
        x, y = res.X[:, :res.M], res.X_left[:, :res.M]
        assert np.abs(y.conj().T @ x - np.eye(res.M)).max() < 1e-8
    if side == 1:
        assert res.X_left is None


def test_general_generalized():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    b = np.eye(10) + 0.1 * rng.standard_normal((10, 10))
    w = np.linalg.eigvals(np.linalg.solve(b, a))
    region = Ellipse(0.5j, 2.0)
    inside = _inside(w, region)
    res = solve_dense_general(a, b, region, inside.size + 4, seed=3)
    assert res.info == 0 and _same_set(res.E[:res.M], inside, 1e-8)


def test_complex_symmetric():
    rng = np.random.default_rng(5)
    g = rng.standard_normal((10, 10)) + 1j * rng.standard_normal((10, 10))
    a = g + g.T
    w = np.linalg.eigvals(a)
    region = Ellipse(0, 3.0)
    inside = _inside(w, region)
    res = solve_dense_general(a, None, region, inside.size + 4, symmetric=True, seed=5)
    assert res.info == 0 and _same_set(res.E[:res.M], inside, 1e-8)
    assert res.fpm[15] == 2


# -- sparse ---------------------------------------------------------------------

def test_sparse_helloworld_inexact(hello_csr):
    res = solve_sparse(RS, "F", hello_csr, None, Interval(3, 5), 3, seed=1)
    assert res.info == 0 and res.M == 2
    assert np.abs(res.E[:2] - 4).max() < 1e-10
    assert res.res[:2].max() < 1e-12
    assert res.loop <= 10 and res.fpm[60] > 0


def test_sparse_lower_triangle(hello):
    low = CsrMatrix.from_dense(np.tril(hello), uplo="L")
    res = solve_sparse(RS, "L", low, None, Interval(3, 5), 3, seed=1)
    assert res.M == 2 and np.abs(res.E[:2] - 4).max() < 1e-10


def test_sparse_dense_fallback(hello_csr):
    cfg = default_config(RS)
    res = solve_sparse(RS, "F", hello_csr, None, Interval(3, 5), 3, cfg, dense_fallback=True,
                       seed=1)
    assert res.M == 2 and res.fpm[60] == 0


def test_laplacian_five(tmp_path):
    n = 100
    lap = laplacian_csr(n)
    exact = 2 - 2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
    region = Interval((exact[9] + exact[10]) / 2, (exact[14] + exact[15]) / 2)
    res = solve_sparse(RS, "F", lap, None, region, 8, default_config(RS), dense_fallback=200,
                       seed=1)
    assert res.info == 0 and res.M == 5
    assert np.abs(np.sort(res.E[:5]) - exact[10:15]).max() < 1e-10


def test_laplacian_inexact_mixed_precision():
    n = 100
    lap = laplacian_csr(n)
    exact = 2 - 2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))
    region = Interval((exact[9] + exact[10]) / 2, (exact[14] + exact[15]) / 2)
    cfg = default_config(RS, inexact=True)
    r1 = solve_sparse(RS, "F", lap, None, region, 8, cfg, seed=1)
    r0 = solve_sparse(RS, "F", lap, None, region, 8, cfg.updated({42: 0}), seed=1)
    assert r1.M == r0.M == 5
    assert np.abs(np.sort(r1.E[:5]) - np.sort(r0.E[:5])).max() < 1e-10
    assert np.abs(np.sort(r1.E[:5]) - exact[10:15]).max() < 1e-10


def test_sparse_general():
    rng = np.random.default_rng(8)
    d = rng.standard_normal((20, 20)) * (rng.random((20, 20)) < 0.2) + np.diag(np.arange(20.0))
    w = np.linalg.eigvals(d)
    region = Ellipse(5.0, 1.5)
    inside = _inside(w, region)
    res = solve_sparse(RG, "F", CsrMatrix.from_dense(d), None, region, inside.size + 3,
                       default_config(RG), dense_fallback=True, seed=1)
    assert res.info == 0 and _same_set(res.E[:res.M], inside, 1e-8)


# -- polynomial -----------------------------------------------------------------

def test_scalar_quadratic_both_roots():
    coeffs = [np.array([[2.0]]), np.array([[-3.0]]), np.array([[1.0]])]
    res = solve_polynomial(RG, coeffs, Ellipse(1.5, 1.0), 2, seed=1)
    assert res.M == 2 and res.info == 0
    assert np.allclose(np.sort(res.E[:2].real), [1, 2], atol=1e-10)


def _mass_spring():
    m = np.array([1.0, 2.0, 1.5, 0.5])
    c = np.array([0.2, 0.1, 0.3, 0.05])
    k = np.array([1.0, 3.0, 2.0, 4.0])
    roots = []
    for mi, ci, ki in zip(m, c, k):
        disc = np.sqrt(complex(ci * ci - 4 * mi * ki))
        roots += [(-ci + disc) / (2 * mi), (-ci - disc) / (2 * mi)]
    return [np.diag(k), np.diag(c), np.diag(m)], np.array(roots)


def test_mass_spring_quadratic():
    coeffs, roots = _mass_spring()
    region = Ellipse(-0.1 + 1.2j, 1.0)
    inside = _inside(roots, region)
    res = solve_polynomial(RG, coeffs, region, inside.size + 2, seed=1)
    assert res.info == 0 and _same_set(res.E[:res.M], inside, 1e-10)
    assert res.res[:res.M].max() < 1e-10


def test_polynomial_sparse_coefficients():
    coeffs, roots = _mass_spring()
    region = Ellipse(-0.1 + 1.2j, 1.0)
    inside = _inside(roots, region)
    csr = [CsrMatrix.from_dense(c) for c in coeffs]
    kind = ProblemKind(Structure.REAL_GENERAL, Form.POLYNOMIAL, 2)
    res = solve_sparse(kind, "F", csr, None, region, inside.size + 2, seed=1)
    assert _same_set(res.E[:res.M], inside, 1e-10)


def test_degree_one_matches_generalized():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((8, 8))
    b = np.eye(8) + 0.1 * rng.standard_normal((8, 8))
    region = Ellipse(0, 1.3)
    lin = solve_sparse(RG, "F", CsrMatrix.from_dense(a), CsrMatrix.from_dense(b), region, 6,
                       default_config(RG), dense_fallback=True, seed=4)
    poly = solve_polynomial(RG, [-a, b], region, 6, default_config(RG), seed=4)
    assert lin.M == poly.M > 0
    assert _same_set(lin.E[:lin.M], poly.E[:poly.M], 1e-10)


def test_polynomial_needs_two_coefficients():
    with pytest.raises(ValueError):
        solve_polynomial(RG, [np.eye(2)], Ellipse(0, 1), 2)


# -- stochastic / subspace-only -------------------------------------------------

def test_stochastic_brackets(hello):
    est, info = stochastic_count(hello, region=Interval(3, 5), m0=3, seed=3)
    assert info == Info.STOCHASTIC_ONLY and est in (1, 2, 3)
    est, _ = stochastic_count(hello, region=Interval(-1, 5), m0=4, seed=3)
    assert 3 <= est <= 5
    est, _ = stochastic_count(hello, region=Interval(10, 11), m0=3, seed=3)
    assert est == 0


def test_subspace_only_rank(hello):
    q, info = subspace_only(hello, region=Interval(3, 5), m0=3, seed=1)
    assert info == Info.SUBSPACE_ONLY and q.shape == (4, 3)
    s = np.linalg.svd(q, compute_uv=False)
    assert s[1] > 0.1 and s[2] / s[0] < 1e-5
    cfg = default_config(RS).updated({2: 16})
    q, _ = subspace_only(hello, region=Interval(3, 5), m0=3, config=cfg, seed=1)
    s = np.linalg.svd(q, compute_uv=False)
    assert s[2] / s[0] < 1e-8


def test_subspace_only_full_enclosure(hello):
    q, _ = subspace_only(hello, region=Interval(-1, 5), m0=3, seed=1)
    assert np.linalg.matrix_rank(q, tol=1e-8) == 3


# -- dispatch -------------------------------------------------------------------

def test_solve_dispatch(hello, hello_csr):
    assert solve(hello, region=Interval(3, 5), m0=3, seed=1).M == 2
    assert solve(hello_csr, region=Interval(3, 5), m0=3, seed=1).M == 2
    assert solve(np.diag([1.0, 5.0]), region=Ellipse(1, 0.5), m0=1, seed=1).M == 1
    coeffs = [np.array([[2.0]]), np.array([[-3.0]]), np.array([[1.0]])]
    assert solve(coeffs, region=Ellipse(1, 0.5), m0=1).M == 1


@settings(max_examples=20)
@given(st.integers(0, 2**31 - 1))
def test_random_hermitian_pencils(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 16))
    g = rng.standard_normal((n, n))
    a = g + g.T
    h = rng.standard_normal((n, n))
    b = np.eye(n) + 0.05 * h @ h.T
    w = np.sort(np.linalg.eigvals(np.linalg.solve(b, a)).real)
    i, j = sorted(rng.choice(np.arange(1, n), 2, replace=False))
    region = Interval((w[i - 1] + w[i]) / 2, (w[j - 1] + w[j]) / 2)
    gap = np.min(np.diff(w))
    res = solve_dense_hermitian("F", a, b, region, min(n, j - i + 4), seed=seed)
    if gap < 1e-6:
        return
    assert res.info == 0 and res.M == j - i
    assert np.abs(np.sort(res.E[:res.M]) - w[i:j]).max() < 1e-8
