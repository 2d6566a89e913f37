"""JIT switch for the numeric kernels.

Hot loops are written once in a numba-compatible style and compiled with
``numba.njit`` when available.  Setting ``SPECTRAL_SLICE_JIT=0`` in the
environment (read at import time) selects the pure-numpy fallbacks instead.
"""

import os

_FLAG = os.environ.get("SPECTRAL_SLICE_JIT", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a soft dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` with numba (cached, GIL released).

    Always compiles, regardless of the env flag; callers pick between the
    compiled kernel and the numpy fallback with :func:`select`.
    """
    if numba is None:  # pragma: no cover
        return func
    return numba.njit(cache=True, nogil=True)(func)


def select(jitted, fallback):
    """Return the kernel to use under the current backend flag."""
    return jitted if USE_NUMBA else fallback


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
