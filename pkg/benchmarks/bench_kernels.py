"""Compare the numba kernels with their numpy fallbacks.

Both versions are importable in one process: the ``*_loops`` / ``*_jit``
functions are compiled, the ``*_numpy`` / ``*_impl`` ones are plain Python.
Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from spectral_slice.core import CsrMatrix
from spectral_slice.linalg import lu as lu_mod
from spectral_slice.linalg import reduced, sparse


def _best(fn, repeat):
    fn()  # compile / warm caches
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _lu_case(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = rng.standard_normal((n, 8)) + 1j * rng.standard_normal((n, 8))

    def run(factor, solve):
        def go():
            m = a.copy()
            piv = np.zeros(n, np.int64)
            factor(m, piv)
            x = b.copy()
            solve(m, piv, x, False)
        return go
    return (run(lu_mod._factor_loops, lu_mod._solve_loops),
            run(lu_mod._factor_numpy, lu_mod._solve_numpy))


def _matvec_case(n, rng):
    rows = np.r_[np.arange(n), np.arange(n - 1), np.arange(1, n)]
    cols = np.r_[np.arange(n), np.arange(1, n), np.arange(n - 1)]
    vals = np.r_[2.0 * np.ones(n), -np.ones(2 * (n - 1))]
    m = CsrMatrix.from_coo(n, rows, cols, vals)
    data = m.data.astype(np.complex128)
    x = rng.standard_normal((n, 8)) + 1j * rng.standard_normal((n, 8))

    def run(kern):
        def go():
            out = np.zeros((n, 8), np.complex128)
            kern(m.indptr, m.indices, data, x, out)
        return go
    return run(sparse._matvec_loops), run(sparse._matvec_numpy)


def _jacobi_case(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = g + g.conj().T

    def run(kern):
        def go():
            kern(a.copy(), np.eye(n, dtype=complex), 1e-15, 60)
        return go
    return run(reduced._jacobi_jit), run(reduced._jacobi_impl)


def _qr_case(n, rng):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    h, z = reduced.hessenberg(a)

    def run(kern):
        def go():
            kern(h.copy(), z.copy(), 100 * n)
        return go
    return run(reduced._qr_jit), run(reduced._qr_impl)


CASES = [("LU factor+solve", _lu_case, (50, 200)),
         ("CSR matvec", _matvec_case, (10_000, 200_000)),
         ("Jacobi eigh", _jacobi_case, (16, 48)),
         ("Hessenberg QR", _qr_case, (16, 48))]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'n':>8} {'numba (s)':>12} {'numpy (s)':>12} {'speedup':>8}")
    for name, build, sizes in CASES:
        for n in sizes:
            jit, ref = build(n, rng)
            tj, tr = _best(jit, args.repeat), _best(ref, args.repeat)
            print(f"{name:<18} {n:>8d} {tj:>12.2e} {tr:>12.2e} {tr / tj:>8.1f}")


if __name__ == "__main__":
    main()
