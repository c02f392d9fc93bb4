"""Floating-point kernel and lozenge densities for hexagons beyond the exact budget.

The double integral splits over the orthogonal polynomials,

    I_N(x, y; H) = sum_n A_n(x, y) B_n(x, y) / kappa_n,

where A_n and B_n are single contour integrals of p_n against the w- and
z-side factors.  Each of them is a Laurent coefficient, computed with the
trapezoidal rule on circles |w| = r.  For every (n, y) the radius is picked
from a grid to minimise the roundoff bound eps * max|integrand| * r^e, and
that bound is propagated into an error estimate for the sum.

p_n is evaluated on the nodes with its three-term recurrence carried out in
extended precision (gmpy2), because the recurrence is unstable in doubles.
Faces whose error estimate exceeds the tolerance can be recomputed from the
exact separable form (``density_table(..., fallback=True)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import gmpy2
import numpy as np

from .exact import FactoredH, SeparableKernel, _check_column, _col_exponents, h_function, kernel_single, ortho_basis
from .lattice import AlphaLike, LozengeType, column_span, exact_alpha

EPS = np.finfo(float).eps
DEFAULT_TOL = 1e-8


def _check_nodes(m: int) -> None:
    if m < 64 or m & (m - 1):
        raise ValueError(f"quad_nodes must be a power of two >= 64, got {m}")


def default_radii(alpha: float) -> np.ndarray:
    return np.geomspace(min(alpha, 0.25) / 16, 16.0, 49)


@lru_cache(maxsize=16)
def _poly_values(N: int, alpha: Fraction, m: int, radii: tuple[float, ...]) -> np.ndarray:
    """p_n(r e^(2 pi i k / m)) for n < N, every radius and node: shape (R, N, m)."""
    a, b = ortho_basis(N, alpha).recurrence()
    with gmpy2.context(gmpy2.get_context(), precision=128 + 4 * N):
        am = [gmpy2.mpq(v.numerator, v.denominator) for v in a]
        bm = [gmpy2.mpq(v.numerator, v.denominator) for v in b]
        two_pi = 2 * gmpy2.const_pi()
        roots = [gmpy2.mpc(gmpy2.cos(two_pi * k / m), gmpy2.sin(two_pi * k / m)) for k in range(m)]
        z = np.array([gmpy2.mpfr(repr(r)) * u for r in radii for u in roots], dtype=object)
        out = np.empty((N, z.size), dtype=complex)
        p0 = np.array([gmpy2.mpc(1)] * z.size, dtype=object)
        out[0] = 1.0
        if N > 1:
            p1 = z - am[0]
            out[1] = [complex(v) for v in p1]
            for n in range(1, N - 1):
                p0, p1 = p1, (z - am[n]) * p1 - bm[n] * p0
                out[n + 1] = [complex(v) for v in p1]
    return out.reshape(N, len(radii), m).transpose(1, 0, 2).copy()


@dataclass(frozen=True)
class FloatResult:
    value: float
    error_estimate: float
    doubled_difference: float
    tol: float = DEFAULT_TOL

    @property
    def flagged(self) -> bool:
        return not (self.doubled_difference < self.tol and self.error_estimate < self.tol)

    def __float__(self) -> float:
        return self.value


class QuadratureKernel:
    """Trapezoidal evaluation of the separable double integrals for one (N, alpha, m)."""

    def __init__(self, N: int, alpha: AlphaLike, quad_nodes: int = 256, radii: np.ndarray | None = None) -> None:
        _check_nodes(quad_nodes)
        if quad_nodes <= 3 * N + 4:
            raise ValueError(f"quad_nodes={quad_nodes} too small for N={N}; need > {3 * N + 4}")
        self.N = N
        self.alpha = exact_alpha(alpha)
        self.af = float(self.alpha)
        self.m = quad_nodes
        basis = ortho_basis(N, self.alpha)
        self.kappa = np.array([float(k) for k in basis.kappas])
        self.radii = tuple(float(r) for r in (default_radii(self.af) if radii is None else radii))
        self.values = _poly_values(N, self.alpha, quad_nodes, self.radii)
        self.nodes = np.exp(2j * np.pi * np.arange(quad_nodes) / quad_nodes)
        self.ys = np.arange(-2, 2 * N + 2)

    def _side(self, q: int, r: int, shift: int, sign: int) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient matrices C[n, i] and roundoff bounds for exponents e = sign*y + shift.

        C[n, i] = mean_k p_n(w_k) (w_k+1)^q (w_k+a)^r w_k^e with e taken at y = ys[i].
        """
        e = sign * self.ys + shift
        best = np.full((self.N, len(e)), np.inf)
        out = np.zeros((self.N, len(e)), dtype=complex)
        for ri, rad in enumerate(self.radii):
            w = rad * self.nodes
            F = self.values[ri] * ((w + 1) ** q * (w + self.af) ** r)
            fourier = np.fft.ifft(F, axis=1)
            scale = rad ** e.astype(float)
            coef = fourier[:, np.mod(e, self.m)] * scale
            bound = np.abs(F).max(axis=1)[:, None] * scale
            sel = bound < best
            best[sel] = bound[sel]
            out[sel] = coef[sel]
        return out, best * EPS * 4

    @lru_cache(maxsize=4096)
    def w_side(self, x: int, qw: int = 0, rw: int = 0, pw: int = 0):
        ax, bx = _col_exponents(x)
        return self._side(self.N - ax + qw, self.N - bx + rw, pw + 1 - 2 * self.N, 1)

    @lru_cache(maxsize=4096)
    def z_side(self, x: int, qz: int = 0, rz: int = 0, pz: int = 0):
        ax, bx = _col_exponents(x)
        return self._side(ax + qz, bx + rz, pz + 1, -1)

    def _combine(self, A, eA, B, eB) -> tuple[np.ndarray, np.ndarray]:
        k = self.kappa[:, None] if A.ndim == 2 else self.kappa
        val = (A * B / k).real.sum(axis=0)
        err = ((eA * np.abs(B) + np.abs(A) * eB + eA * eB) / np.abs(k)).sum(axis=0)
        return val, err

    def _index(self, y: int) -> int:
        i = y - int(self.ys[0])
        if not 0 <= i < len(self.ys):
            raise ValueError(f"height {y} outside {self.ys[0]}..{self.ys[-1]}")
        return i

    def integral(self, x: int, H: FactoredH) -> tuple[np.ndarray, np.ndarray]:
        """Double integral and error bound for every y in ``self.ys`` at column x."""
        ax, bx = _col_exponents(x)
        if min(self.N - ax + H.qw, self.N - bx + H.rw, ax + H.qz, bx + H.rz) < 0:
            raise ValueError("integrand is not a Laurent polynomial for this H")
        A, eA = self.w_side(x, H.qw, H.rw, H.pw)
        B, eB = self.z_side(x, H.qz, H.rz, H.pz)
        val, err = self._combine(A, eA, B, eB)
        c = float(H.c)
        return c * val, abs(c) * err

    def kernel(self, x1: int, y1: int, x2: int, y2: int) -> tuple[float, float]:
        _check_column(self.N, x1)
        _check_column(self.N, x2)
        A, eA = self.w_side(x2)
        B, eB = self.z_side(x1, pz=-1)
        i, j = self._index(y2), self._index(y1)
        val, err = self._combine(A[:, i], eA[:, i], B[:, j], eB[:, j])
        return float(kernel_single(self.N, self.alpha, x1, y1, x2, y2)) + float(val), float(err)


@lru_cache(maxsize=8)
def quadrature_kernel(N: int, alpha: Fraction, quad_nodes: int) -> QuadratureKernel:
    return QuadratureKernel(N, alpha, quad_nodes)


def kernel_K_float(
    N: int, alpha: AlphaLike, x1: int, y1: int, x2: int, y2: int, quad_nodes: int = 256, tol: float = DEFAULT_TOL
) -> FloatResult:
    """K_N by quadrature, checked against a run with twice as many nodes."""
    a = exact_alpha(alpha)
    v1, e1 = quadrature_kernel(N, a, quad_nodes).kernel(x1, y1, x2, y2)
    v2, e2 = quadrature_kernel(N, a, 2 * quad_nodes).kernel(x1, y1, x2, y2)
    return FloatResult(v2, max(e1, e2), abs(v1 - v2), tol)


@dataclass
class DensityTable:
    """Per-face densities p[t, x, y] with per-face provenance ('float' or 'exact')."""

    N: int
    alpha: Fraction
    p: np.ndarray
    error: np.ndarray
    doubled: np.ndarray
    source: np.ndarray

    def faces(self):
        for x in range(1, 2 * self.N):
            for y in range(*column_span(self.N, x)):
                yield x, y


def density_table(
    N: int,
    alpha: AlphaLike,
    quad_nodes: int = 256,
    tol: float = DEFAULT_TOL,
    fallback: bool = True,
    columns: list[int] | None = None,
) -> DensityTable:
    """Lozenge densities at every interior face, by quadrature with node doubling.

    Faces whose roundoff bound or doubling difference exceeds ``tol`` are
    recomputed from the exact separable form when ``fallback`` is set, and
    marked 'exact'; otherwise they stay 'float' and keep their error fields.
    """
    a = exact_alpha(alpha)
    q1 = quadrature_kernel(N, a, quad_nodes)
    q2 = quadrature_kernel(N, a, 2 * quad_nodes)
    shape = (3, 2 * N, 2 * N)
    p = np.full(shape, np.nan)
    err = np.full(shape, np.nan)
    dbl = np.full(shape, np.nan)
    src = np.full((2 * N, 2 * N), "", dtype=object)
    sep: SeparableKernel | None = None
    cols = range(1, 2 * N) if columns is None else columns
    for x in cols:
        lo, hi = column_span(N, x)
        sl = slice(lo - int(q1.ys[0]), hi - int(q1.ys[0]))
        bad = np.zeros(hi - lo, dtype=bool)
        for t in LozengeType:
            H = h_function(t, x, a)
            v1, e1 = q1.integral(x, H)
            v2, e2 = q2.integral(x, H)
            v = v2[sl]
            if t == LozengeType.TypeIII:
                v = 1 - v
            p[t, x, lo:hi] = v
            err[t, x, lo:hi] = np.maximum(e1, e2)[sl]
            dbl[t, x, lo:hi] = np.abs(v1 - v2)[sl]
            bad |= (err[t, x, lo:hi] >= tol) | (dbl[t, x, lo:hi] >= tol)
        src[x, lo:hi] = "float"
        if fallback and bad.any():
            sep = sep or SeparableKernel(N, a)
            ys = np.arange(lo, hi)[bad]
            for t in LozengeType:
                exact_col = sep.integral_float(x, h_function(t, x, a))
                vals = exact_col[ys - int(sep.ys[0])]
                p[t, x, ys] = 1 - vals if t == LozengeType.TypeIII else vals
            src[x, ys] = "exact"
    return DensityTable(N, a, p, err, dbl, src)
