"""Coordinate matrix files, ``.in`` run configurations and ``eig.out`` output."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .core import (Config, CsrMatrix, EigResult, Ellipse, Form, Interval, ProblemKind,
                   Structure, default_config)

__all__ = [
    "ParseError",
    "RunSpec",
    "read_coordinate_matrix",
    "write_coordinate_matrix",
    "read_runspec",
    "write_runspec",
    "write_eigout",
]


class ParseError(ValueError):
    """Malformed input file; ``line`` is 1-based (None if not line specific)."""

    def __init__(self, path, line, msg):
        self.path, self.line = path, line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {msg}")


def _fortran_float(tok: str) -> float:
    # accepts 0.18d0 / 1.0D-3 as well as plain floats
    return float(tok.replace("d", "e").replace("D", "e"))


# -- coordinate matrices ----------------------------------------------------------

def _data_lines(fh):
    for k, raw in enumerate(fh, start=1):
        s = raw.strip()
        if not s or s.startswith("%") or s.startswith("#"):
            continue
        yield k, s.split()


def read_coordinate_matrix(path, uplo: str = "F") -> CsrMatrix:
    """Read ``N N NNZ`` then ``i j re [im]`` lines (1-based) into CSR.

    Entries with three columns are real, four columns complex.  Duplicate
    entries are summed.  ``uplo`` is stored on the result so symmetric
    drivers know which triangle the file holds.
    """
    with open(path, "r", encoding="utf-8") as fh:
        it = _data_lines(fh)
        try:
            ln, head = next(it)
        except StopIteration:
            raise ParseError(path, None, "empty file, expected header 'N N NNZ'") from None
        if len(head) < 3:
            raise ParseError(path, ln, "header must be 'N N NNZ'")
        try:
            nr, nc, nnz = (int(t) for t in head[:3])
        except ValueError:
            raise ParseError(path, ln, f"non-integer header {' '.join(head[:3])!r}") from None
        if nr != nc or nr <= 0 or nnz < 0:
            raise ParseError(path, ln, f"need a square N x N header with NNZ >= 0, got {head[:3]}")
        rows = np.empty(nnz, np.int64)
        cols = np.empty(nnz, np.int64)
        vals = np.empty(nnz, np.complex128)
        cplx = False
        count = 0
        for ln, tok in it:
            if count >= nnz:
                raise ParseError(path, ln, f"more than NNZ={nnz} entries")
            if len(tok) not in (3, 4):
                raise ParseError(path, ln, "entry must be 'i j re' or 'i j re im'")
            try:
                i, j = int(tok[0]), int(tok[1])
                re = _fortran_float(tok[2])
                im = _fortran_float(tok[3]) if len(tok) == 4 else 0.0
            except ValueError:
                raise ParseError(path, ln, f"malformed entry {' '.join(tok)!r}") from None
            if not (1 <= i <= nr and 1 <= j <= nr):
                raise ParseError(path, ln, f"index ({i}, {j}) outside [1, {nr}]")
            cplx |= len(tok) == 4
            rows[count], cols[count], vals[count] = i - 1, j - 1, complex(re, im)
            count += 1
    if count != nnz:
        raise ParseError(path, None, f"header announces {nnz} entries, found {count}")
    data = vals if cplx else vals.real.copy()
    return CsrMatrix.from_coo(nr, rows, cols, data, uplo=uplo)


def write_coordinate_matrix(m: CsrMatrix, path) -> None:
    """Write ``m`` in the coordinate format read by :func:`read_coordinate_matrix`."""
    rows = m.row_indices() + 1
    cols = m.indices + 1
    cplx = np.iscomplexobj(m.data)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{m.n} {m.n} {m.nnz}\n")
        for i, j, v in zip(rows, cols, m.data):
            if cplx:
                fh.write(f"{i} {j} {v.real:.17g} {v.imag:.17g}\n")
            else:
                fh.write(f"{i} {j} {v:.17g}\n")


# -- run configuration --------------------------------------------------------------

_STRUCT = {"s": "symmetric", "h": "hermitian", "g": "general"}
_FORM = {"e": Form.STANDARD, "g": Form.GENERALIZED}
_PREC = {"d": "double real", "z": "double complex"}
_UPLO = {"L", "U", "F"}


@dataclass
class RunSpec:
    """Parsed ``.in`` file.

    Symmetric and Hermitian runs carry ``emin``/``emax``; general runs
    carry ``emid``/``r`` (read from three lines: Emid real part, Emid
    imaginary part, radius).
    """

    structure: str
    form: str
    precision: str
    uplo: str
    m0: int
    emin: Optional[float] = None
    emax: Optional[float] = None
    emid: Optional[complex] = None
    r: Optional[float] = None
    overrides: List[Tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        if self.structure not in _STRUCT:
            raise ValueError(f"unknown structure letter {self.structure!r}")
        if self.form not in _FORM:
            raise ValueError(f"unknown form letter {self.form!r}")
        if self.precision not in _PREC:
            raise ValueError(f"unknown precision letter {self.precision!r}")
        if self.uplo not in _UPLO:
            raise ValueError(f"unknown UPLO letter {self.uplo!r}")
        for i, _ in self.overrides:
            if not 1 <= i <= 64:
                raise ValueError(f"fpm index {i} outside [1, 64]")

    @property
    def generalized(self) -> bool:
        return self.form == "g"

    def kind(self) -> ProblemKind:
        cplx = self.precision == "z"
        if self.structure == "s":
            st = Structure.COMPLEX_SYMMETRIC if cplx else Structure.REAL_SYMMETRIC
        elif self.structure == "h":
            st = Structure.COMPLEX_HERMITIAN
        else:
            st = Structure.COMPLEX_GENERAL if cplx else Structure.REAL_GENERAL
        return ProblemKind(st, _FORM[self.form])

    def region(self):
        if self.structure == "g" or (self.structure == "s" and self.precision == "z"):
            return Ellipse(self.emid, self.r)
        return Interval(self.emin, self.emax)

    def config(self, inexact: bool = False) -> Config:
        changes = dict(self.overrides)
        inexact = inexact or changes.get(43, 0) == 1
        return default_config(self.kind(), inexact).updated(changes)


def _value_lines(fh):
    for k, raw in enumerate(fh, start=1):
        s = raw.split("!", 1)[0].strip()
        if s:
            yield k, s.split()


def read_runspec(path) -> RunSpec:
    """Parse a line-ordered ``.in`` file; text after ``!`` is ignored.

    Line order: structure, form, precision, UPLO, then ``Emin``/``Emax``
    (or ``Emid_re``/``Emid_im``/``r`` for general or complex symmetric
    runs), ``M0``, the override count and one ``index value`` pair per
    override.
    """
    with open(path, "r", encoding="utf-8") as fh:
        lines = list(_value_lines(fh))
    pos = 0

    def take(what):
        nonlocal pos
        if pos >= len(lines):
            raise ParseError(path, None, f"missing {what}")
        ln, tok = lines[pos]
        pos += 1
        return ln, tok

    letters = []
    for what, table in (("structure", _STRUCT), ("form", _FORM), ("precision", _PREC),
                        ("UPLO", _UPLO)):
        ln, tok = take(what)
        if tok[0] not in table:
            raise ParseError(path, ln, f"unknown {what} letter {tok[0]!r}")
        letters.append(tok[0])
    structure, form, precision, uplo = letters
    ellipse = structure == "g" or (structure == "s" and precision == "z")

    def num(what, conv=_fortran_float):
        ln, tok = take(what)
        try:
            return conv(tok[0])
        except ValueError:
            raise ParseError(path, ln, f"bad {what} value {tok[0]!r}") from None

    kw = {}
    if ellipse:
        re_, im_ = num("Emid real part"), num("Emid imaginary part")
        kw["emid"] = complex(re_, im_)
        kw["r"] = num("radius r")
    else:
        kw["emin"], kw["emax"] = num("Emin"), num("Emax")
    m0 = num("M0", int)
    count = num("override count", int)
    if count < 0:
        raise ParseError(path, lines[pos - 1][0], "negative override count")
    overrides = []
    for _ in range(count):
        ln, tok = take("fpm override")
        if len(tok) < 2:
            raise ParseError(path, ln, "override must be 'index value'")
        try:
            i, v = int(tok[0]), int(tok[1])
        except ValueError:
            raise ParseError(path, ln, f"bad override {' '.join(tok[:2])!r}") from None
        if not 1 <= i <= 64:
            raise ParseError(path, ln, f"fpm index {i} outside [1, 64]")
        overrides.append((i, v))
    if pos != len(lines):
        raise ParseError(path, lines[pos][0],
                         f"unexpected line after {count} overrides (count mismatch?)")
    return RunSpec(structure, form, precision, uplo, m0, overrides=overrides, **kw)


def write_runspec(run: RunSpec, path) -> None:
    """Write ``run`` in the ``.in`` layout."""
    out = [f"{run.structure}       ! s: symmetric, h: hermitian, g: general",
           f"{run.form}       ! e=standard or g=generalized eigenvalue problem",
           f"{run.precision}       ! (d,z) precision",
           f"{run.uplo}       ! UPLO (L: lower, U: upper, F: full)"]
    if run.emid is not None:
        out += [f"{run.emid.real!r}  ! Emid real part", f"{run.emid.imag!r}  ! Emid imaginary part",
                f"{run.r!r}  ! r"]
    else:
        out += [f"{run.emin!r}  ! Emin", f"{run.emax!r}  ! Emax"]
    out += [f"{run.m0}      ! M0 search subspace",
            f"{len(run.overrides)}       ! number of fpm changes"]
    out += [f"{i} {v}     ! fpm({i})={v}" for i, v in run.overrides]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(out) + "\n")


# -- results ----------------------------------------------------------------------

def write_eigout(result: EigResult, path, *, complex_values: Optional[bool] = None) -> None:
    """Write the ``M`` eigenpairs found, sorted by real then imaginary part.

    Real results give ``index  eigenvalue  residual`` lines, complex ones
    ``index  re  im  residual``.  Values use 17 significant digits.
    """
    M = int(result.M)
    E = np.asarray(result.E)[:M]
    res = np.asarray(result.res)[:M]
    if complex_values is None:
        complex_values = np.iscomplexobj(E)
    order = np.lexsort((E.imag, E.real)) if M else np.array([], int)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        if complex_values:
            fh.write(f"# {M} eigenvalues found (info {int(result.info)}); "
                     "columns: index, Re(lambda), Im(lambda), relative residual\n")
        else:
            fh.write(f"# {M} eigenvalues found (info {int(result.info)}); "
                     "columns: index, lambda, relative residual\n")
        for k, i in enumerate(order, start=1):
            e = complex(E[i])
            if complex_values:
                fh.write(f"{k:6d} {e.real: .16E} {e.imag: .16E} {res[i]: .16E}\n")
            else:
                fh.write(f"{k:6d} {e.real: .16E} {res[i]: .16E}\n")
    os.replace(tmp, path)
