import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spectral_slice.core import CsrMatrix

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

HELLO = np.array([[2.0, -1.0, -1.0, 0.0],
                  [-1.0, 3.0, -1.0, -1.0],
                  [-1.0, -1.0, 3.0, -1.0],
                  [0.0, -1.0, -1.0, 2.0]])
HELLO_EIGS = np.array([0.0, 2.0, 4.0, 4.0])


@pytest.fixture
def hello():
    return HELLO.copy()


@pytest.fixture
def hello_csr():
    return CsrMatrix.from_dense(HELLO)


def laplacian_csr(n):
    rows = np.r_[np.arange(n), np.arange(n - 1), np.arange(1, n)]
    cols = np.r_[np.arange(n), np.arange(1, n), np.arange(n - 1)]
    vals = np.r_[2.0 * np.ones(n), -np.ones(2 * (n - 1))]
    return CsrMatrix.from_coo(n, rows, cols, vals)


def subspace_angle(u, v):
    """Largest principal angle between the column spans of u and v."""
    qu, _ = np.linalg.qr(u)
    qv, _ = np.linalg.qr(v)
    s = np.linalg.svd(qu.conj().T @ qv, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


HELLO_IN = """s       ! s: symmetric, h: hermitian, g: general
e       ! e=standard or g=generalized eigenvalue problem
d       ! (d,z) precision i.e (double real, double complex)
F       ! UPLO
3.0d0   ! Emin
5.0d0   ! Emax
3       ! M0 search subspace
{count}       ! How many changes from default fpm(1,64)
{overrides}"""


def write_hello_case(directory, overrides=(), form="e", with_b=False):
    """Write mytest.mtx / mytest.in (/ mytestB.mtx) for the helloworld matrix."""
    rows, cols = np.nonzero(HELLO)
    lines = [f"4 4 {rows.size}"] + [f"{i + 1} {j + 1} {HELLO[i, j]:.1f}" for i, j in zip(rows, cols)]
    (directory / "mytest.mtx").write_text("\n".join(lines) + "\n")
    text = HELLO_IN.replace("e       ! e=", f"{form}       ! e=").format(
        count=len(overrides), overrides="\n".join(f"{i} {v}" for i, v in overrides))
    (directory / "mytest.in").write_text(text + "\n")
    if with_b:
        (directory / "mytestB.mtx").write_text("4 4 4\n1 1 1.0\n2 2 1.0\n3 3 1.0\n4 4 1.0\n")
    return str(directory / "mytest")
