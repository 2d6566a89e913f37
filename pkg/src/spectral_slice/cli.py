"""``spectral-slice <prefix>``: solve the problem stored in ``<prefix>.mtx``/``.in``.

Exit status is 0 when ``info`` is 0, 1, 4 or 5.  Other non-negative codes
are returned as is; negative codes map to ``256 + info``.  Unreadable or
malformed input files give 66 and 65.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import _log
from .core import Info, describe_info
from .drivers import solve_sparse
from .io import ParseError, read_coordinate_matrix, read_runspec, write_eigout

__all__ = ["main", "run_cli", "exit_code", "EX_DATAERR", "EX_NOINPUT"]

EX_DATAERR = 65
EX_NOINPUT = 66
# direct (factorized) inner solves are used up to this size when fpm(43)=0
DIRECT_MAX_N = 2000

_OK = {Info.SUCCESS, Info.NO_EIGENVALUE, Info.SUBSPACE_ONLY, Info.STOCHASTIC_ONLY}


def exit_code(info: int) -> int:
    info = int(info)
    if info in _OK:
        return 0
    return info if info > 0 else 256 + info


def _parser():
    p = argparse.ArgumentParser(
        prog="spectral-slice",
        description="Contour-integration eigensolver for coordinate-format matrices.")
    p.add_argument("prefix", help="path prefix of <prefix>.mtx, <prefix>.in [, <prefix>B.mtx]")
    p.add_argument("--seed", type=int, default=None,
                   help="seed of the random initial subspace (default: time based)")
    p.add_argument("--workers", type=int, default=1, help="threads for contour nodes")
    p.add_argument("--inexact", action="store_true",
                   help="iterative inner solves (same as fpm(43)=1)")
    p.add_argument("--output", default="eig.out", help="eigenvalue output file")
    return p


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    prefix = args.prefix
    in_path, a_path, b_path = prefix + ".in", prefix + ".mtx", prefix + "B.mtx"
    try:
        run = read_runspec(in_path)
        need = [a_path] + ([b_path] if run.generalized else [])
        for path in need:
            if not os.path.isfile(path):
                print(f"spectral-slice: missing input file {path}", file=sys.stderr)
                return EX_NOINPUT
        a = read_coordinate_matrix(a_path, run.uplo)
        b = read_coordinate_matrix(b_path, run.uplo) if run.generalized else None
        if b is not None and b.n != a.n:
            raise ParseError(b_path, None, f"B is {b.n} x {b.n}, A is {a.n} x {a.n}")
        cfg = run.config(args.inexact)
        region = run.region()
    except FileNotFoundError as exc:
        print(f"spectral-slice: missing input file {exc.filename}", file=sys.stderr)
        return EX_NOINPUT
    except (ParseError, ValueError) as exc:
        print(f"spectral-slice: {exc}", file=sys.stderr)
        return EX_DATAERR

    kind = run.kind()
    if run.precision == "d" and any(np.iscomplexobj(m.data) for m in (a, b) if m is not None):
        print("spectral-slice: complex entries with precision 'd'", file=sys.stderr)
        return EX_DATAERR
    seed = args.seed
    if seed is None:
        seed = time.time_ns() % (2 ** 32)
    _log.emit(cfg[1], f"random seed {seed}")

    # fpm(43)=0 asks for direct inner solves; dense LU stands in up to DIRECT_MAX_N
    direct = cfg[43] == 0 and a.n <= DIRECT_MAX_N
    result = solve_sparse(kind, run.uplo, a, b, region, run.m0, cfg,
                          dense_fallback=DIRECT_MAX_N if direct else False,
                          seed=seed, workers=args.workers)
    write_eigout(result, args.output, complex_values=not kind.is_hermitian)
    if result.info not in _OK:
        print(f"spectral-slice: info {int(result.info)}: {describe_info(result.info)}",
              file=sys.stderr)
    return exit_code(result.info)


def main() -> None:  # pragma: no cover - console entry point
    sys.exit(run_cli())


if __name__ == "__main__":  # pragma: no cover
    main()
