"""Quadrature rules for the contour integral and the rational filter.

A rule holds nodes ``z_j`` and weights ``w_j`` with the ``1/(2*pi*i)``
factor folded in, so that

    rho(lam) = sum_j w_j / (z_j - lam)

is close to 1 inside the contour and decays outside.  Hermitian problems use
*half-symmetric* rules: only the upper-half nodes are stored and the lower
half is implied by conjugation (nodes and weights).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import FeastError, Info

__all__ = [
    "Closure",
    "ContourRule",
    "CustomGeometry",
    "gauss_legendre",
    "hermitian_contour",
    "general_contour",
    "custom_contour",
    "filter_value",
    "GAUSS",
    "TRAPEZOIDAL",
]

GAUSS = 0
TRAPEZOIDAL = 1

_TWO_PI_I = 2j * np.pi


class Closure(enum.Enum):
    HALF_SYMMETRIC = "half"
    FULL = "full"


def gauss_legendre(n: int):
    """Gauss-Legendre abscissae (ascending) and weights on [-1, 1].

    Roots of P_n are found by Newton's method from the Chebyshev-like
    initial guesses ``cos(pi (k - 1/4) / (n + 1/2))``.
    """
    n = int(n)
    if not 1 <= n <= 64:
        raise ValueError(f"Gauss-Legendre order must be in 1..64, got {n}")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        # three-term recurrence for P_n and P_{n-1}
        p0 = np.ones_like(x)
        p1 = x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        if n == 1:
            p0, p1 = np.ones_like(x), x
        dp = n * (x * p1 - p0) / (x * x - 1.0)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    # derivative at the converged roots
    p0 = np.ones_like(x)
    p1 = x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    if n == 1:
        p0 = np.ones_like(x)
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


def _point_in_polygon(pts, poly):
    """Even-odd test of complex points against a closed complex polygon."""
    pts = np.atleast_1d(np.asarray(pts, dtype=complex))
    x, y = pts.real[:, None], pts.imag[:, None]
    xa, ya = poly.real[None, :], poly.imag[None, :]
    xb, yb = np.roll(poly.real, -1)[None, :], np.roll(poly.imag, -1)[None, :]
    crosses = (ya > y) != (yb > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = xa + (y - ya) * (xb - xa) / (yb - ya)
    inside = np.sum(crosses & (x < xint), axis=1) % 2 == 1
    return inside


@dataclass(frozen=True)
class ContourRule:
    """Quadrature nodes/weights plus the enclosed shape.

    ``shape`` is either ``("ellipse", center, a, b, phi)`` or
    ``("polygon", vertices)`` and backs :meth:`contains`.
    """

    nodes: np.ndarray
    weights: np.ndarray
    closure: Closure
    shape: tuple = None

    def __post_init__(self):
        z = np.asarray(self.nodes, dtype=np.complex128).ravel()
        w = np.asarray(self.weights, dtype=np.complex128).ravel()
        if z.size < 1 or z.shape != w.shape:
            raise ValueError("rule needs matching, non-empty nodes and weights")
        if self.closure is Closure.HALF_SYMMETRIC and np.any(z.imag <= 0):
            raise ValueError("half-symmetric nodes must lie in the upper half-plane")
        object.__setattr__(self, "nodes", z)
        object.__setattr__(self, "weights", w)

    @property
    def nq(self) -> int:
        return self.nodes.size

    def full(self) -> "ContourRule":
        """Equivalent rule listing every node explicitly."""
        if self.closure is Closure.FULL:
            return self
        return ContourRule(np.concatenate([self.nodes, self.nodes.conj()]),
                           np.concatenate([self.weights, self.weights.conj()]),
                           Closure.FULL, self.shape)

    def half(self, tol: float = 1e-12) -> "ContourRule":
        """Upper-half rule of a conjugation-symmetric full rule.

        Raises ``ValueError`` if the rule is not closed under conjugation
        or has nodes on the real axis.
        """
        if self.closure is Closure.HALF_SYMMETRIC:
            return self
        z, w = self.nodes, self.weights
        scale = max(np.max(np.abs(z)), 1.0)
        if np.any(np.abs(z.imag) <= tol * scale):
            raise ValueError("rule has nodes on the real axis")
        up = np.flatnonzero(z.imag > 0)
        lo = np.flatnonzero(z.imag < 0)
        if up.size != lo.size:
            raise ValueError("rule is not symmetric under conjugation")
        wscale = np.max(np.abs(w))
        for j in up:
            d = np.abs(z[lo] - np.conj(z[j]))
            k = lo[np.argmin(d)]
            if d.min() > tol * scale or abs(w[k] - np.conj(w[j])) > 1e-10 * wscale:
                raise ValueError("rule is not symmetric under conjugation")
        return ContourRule(z[up], w[up], Closure.HALF_SYMMETRIC, self.shape)

    def contains(self, lam) -> np.ndarray:
        """Geometric inside test for the enclosed region (boundary inclusive)."""
        lam = np.asarray(lam, dtype=complex)
        if self.shape is None:
            return np.abs(filter_value(self, lam)) > 0.5
        if self.shape[0] == "ellipse":
            _, c, a, b, phi = self.shape
            d = (lam - c) * np.exp(-1j * phi)
            with np.errstate(divide="ignore", invalid="ignore"):
                t = (d.real / a) ** 2 + (d.imag / b) ** 2 if b > 0 else \
                    np.where(d.imag == 0, (d.real / a) ** 2, np.inf)
            return t <= 1.0 + 1e-12
        poly = self.shape[1]
        return _point_in_polygon(lam.ravel(), poly).reshape(lam.shape)


def _check_rule(rule):
    if rule not in (GAUSS, TRAPEZOIDAL):
        raise ValueError("quadrature rule must be 0 (Gauss) or 1 (trapezoidal)")


def _half_angles(nq, rule):
    """Angles in (0, pi) and their measure; upper half swept counterclockwise."""
    if rule == GAUSS:
        x, wx = gauss_legendre(nq)
        return np.pi * (1.0 - x) / 2.0, wx * np.pi / 2.0
    k = np.arange(1, nq + 1)
    return np.pi * (k - 0.5) / nq, np.full(nq, np.pi / nq)


def hermitian_contour(emin: float, emax: float, nq: int, rule: int = GAUSS,
                      ratio_pct: int = 30) -> ContourRule:
    """Half-contour rule for the real interval ``[emin, emax]``.

    The nodes lie on the upper half of the ellipse with center
    ``(emin+emax)/2``, horizontal semi-axis ``a = (emax-emin)/2`` and vertical
    semi-axis ``a*ratio_pct/100``.
    """
    _check_rule(rule)
    if not emin < emax:
        raise FeastError(Info.BAD_REGION, "Emin must be smaller than Emax")
    if nq < 1:
        raise ValueError("need at least one node")
    if ratio_pct <= 0:
        raise ValueError("ellipse ratio must be positive")
    c = 0.5 * (emin + emax)
    a = 0.5 * (emax - emin)
    b = a * ratio_pct / 100.0
    theta, dtheta = _half_angles(nq, rule)
    z = c + a * np.cos(theta) + 1j * b * np.sin(theta)
    dz = -a * np.sin(theta) + 1j * b * np.cos(theta)
    w = dz * dtheta / _TWO_PI_I
    return ContourRule(z, w, Closure.HALF_SYMMETRIC, ("ellipse", c, a, b, 0.0))


def general_contour(emid: complex, r: float, nq: int, rule: int = TRAPEZOIDAL,
                    ratio_pct: int = 100, angle_deg: float = 0.0) -> ContourRule:
    """Full elliptic rule with ``nq`` nodes.

    ``angle_deg`` rotates the ellipse counterclockwise about ``emid``
    (0 keeps the horizontal radius ``r`` along the real axis).  The Gauss
    rule is applied separately on the upper and lower halves.
    """
    _check_rule(rule)
    if not r > 0:
        raise FeastError(Info.BAD_REGION, "contour radius must be positive")
    if nq < 2:
        raise ValueError("a full contour needs at least two nodes")
    if ratio_pct <= 0:
        raise ValueError("ellipse ratio must be positive")
    a = float(r)
    b = a * ratio_pct / 100.0
    if rule == GAUSS:
        nup = (nq + 1) // 2
        t1, d1 = _half_angles(nup, GAUSS)
        t2, d2 = _half_angles(nq - nup, GAUSS)
        theta = np.concatenate([t1, t2 + np.pi])
        dtheta = np.concatenate([d1, d2])
    else:
        k = np.arange(1, nq + 1)
        theta = 2 * np.pi * (k - 0.5) / nq
        dtheta = np.full(nq, 2 * np.pi / nq)
    phi = np.deg2rad(angle_deg)
    rot = np.exp(1j * phi)
    z = emid + rot * (a * np.cos(theta) + 1j * b * np.sin(theta))
    dz = rot * (-a * np.sin(theta) + 1j * b * np.cos(theta))
    w = dz * dtheta / _TWO_PI_I
    return ContourRule(z, w, Closure.FULL, ("ellipse", complex(emid), a, b, phi))


@dataclass(frozen=True)
class CustomGeometry:
    """Piecewise contour: endpoints ``zedge`` in clockwise order.

    ``tedge[k] == 0`` makes piece k a segment; ``tedge[k] > 0`` an outward
    half-ellipse on the chord with ``a/b = tedge[k]/100`` (100 is a
    half-circle).  Piece k runs from ``zedge[k]`` to ``zedge[k+1]``, the
    last one wrapping back to ``zedge[0]``.
    """

    zedge: Sequence[complex]
    tedge: Sequence[int]
    nedge: Sequence[int]

    def __post_init__(self):
        z = np.asarray(self.zedge, dtype=complex).ravel()
        t = np.asarray(self.tedge, dtype=int).ravel()
        nn = np.asarray(self.nedge, dtype=int).ravel()
        if z.size < 1 or not (z.size == t.size == nn.size):
            raise ValueError("zedge, tedge and nedge must have the same length P >= 1")
        if np.any(nn < 1):
            raise ValueError("every piece needs at least one node")
        if np.any(t < 0):
            raise ValueError("tedge entries must be >= 0")
        object.__setattr__(self, "zedge", z)
        object.__setattr__(self, "tedge", t)
        object.__setattr__(self, "nedge", nn)

    @property
    def P(self) -> int:
        return self.zedge.size

    @property
    def nc(self) -> int:
        return int(self.nedge.sum())


def _piece(z0, z1, tedge, n):
    """Nodes, dz, and boundary samples of one piece (orientation z0 -> z1)."""
    if tedge == 0:
        t = (np.arange(1, n + 1) - 0.5) / n
        nodes = z0 + (z1 - z0) * t
        dz = np.full(n, (z1 - z0) / n)
        samples = z0 + (z1 - z0) * np.linspace(0, 1, 2, endpoint=False)
        return nodes, dz, samples
    c = 0.5 * (z0 + z1)
    u = z0 - c
    ba = 100.0 / tedge
    theta = np.pi * (np.arange(1, n + 1) - 0.5) / n
    # bulge to the left of travel, outward for a clockwise chain
    nodes = c + u * np.cos(theta) - 1j * u * ba * np.sin(theta)
    dz = (-u * np.sin(theta) - 1j * u * ba * np.cos(theta)) * (np.pi / n)
    ts = np.linspace(0, np.pi, 64, endpoint=False)
    samples = c + u * np.cos(ts) - 1j * u * ba * np.sin(ts)
    return nodes, dz, samples


def custom_contour(geometry: CustomGeometry) -> ContourRule:
    """Full rule for a clockwise piecewise contour (midpoint rule per piece).

    Weights are negated relative to the clockwise path so the filter is
    +1 inside, the same convention as the elliptic rules.
    """
    g = geometry
    zs, ws, samples = [], [], []
    for k in range(g.P):
        z0, z1 = g.zedge[k], g.zedge[(k + 1) % g.P]
        if z0 == z1:
            raise ValueError(f"contour piece {k + 1} has zero length")
        nodes, dz, smp = _piece(z0, z1, g.tedge[k], g.nedge[k])
        zs.append(nodes)
        ws.append(-dz / _TWO_PI_I)
        samples.append(smp)
    return ContourRule(np.concatenate(zs), np.concatenate(ws), Closure.FULL,
                       ("polygon", np.concatenate(samples)))


def filter_value(rule: ContourRule, lam):
    """Rational filter ``sum_j w_j / (z_j - lam)`` over the full node set.

    Accepts scalars or arrays.  Raises ``ZeroDivisionError`` at a node.
    """
    full = rule.full()
    lam_arr = np.asarray(lam, dtype=complex)
    diff = full.nodes[:, None] - lam_arr.ravel()[None, :]
    if np.any(diff == 0):
        raise ZeroDivisionError("filter evaluated at a quadrature node")
    val = (full.weights[:, None] / diff).sum(axis=0).reshape(lam_arr.shape)
    if val.ndim == 0:
        return complex(val)
    return val
