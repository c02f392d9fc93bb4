"""Exact finite-N engine: moments, orthogonal polynomials, kernel, probabilities.

Every contour integral around 0 is read off as a Laurent coefficient, so all
results are exact rationals.  The weight of the bilinear form is
(z+1)^N (z+a)^N / z^(2N) with a = alpha.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import lcm
from typing import Sequence

import numpy as np

from .lattice import AlphaLike, LozengeType, column_span, exact_alpha
from .laurent import binom_product, coeff_of


def exact_limit() -> int:
    """Largest N handled with exact arithmetic (env HEXATILE_EXACT_N, default 12)."""
    return int(os.environ.get("HEXATILE_EXACT_N", "12"))


class SingularMomentMatrix(ArithmeticError):
    pass


def _col_exponents(x: int) -> tuple[int, int]:
    """Exponents of (z+1) and (z+a) in the symbol product over columns 0..x-1."""
    return x // 2, (x + 1) // 2


def lgv_weight(N: int, alpha: AlphaLike, cols_remaining_even: int, cols_remaining_odd: int, dy: int) -> Fraction:
    """Weighted number of single paths rising ``dy`` over the remaining columns."""
    if min(cols_remaining_even, cols_remaining_odd) < 0:
        raise ValueError("column counts must be non-negative")
    return coeff_of(cols_remaining_odd, cols_remaining_even, exact_alpha(alpha), dy)


@dataclass(frozen=True)
class MomentTable:
    n_max: int
    m: tuple[Fraction, ...]

    def __getitem__(self, k: int) -> Fraction:
        if 0 <= k < len(self.m):
            return self.m[k]
        return Fraction(0)

    def hankel(self, n: int) -> list[list[Fraction]]:
        return [[self[j + k] for k in range(n)] for j in range(n)]


def moments(N: int, alpha: AlphaLike) -> MomentTable:
    """m_k = <z^0, z^k>, the coefficient of z^(2N-1-k) in (z+1)^N (z+a)^N."""
    a = exact_alpha(alpha)
    c = binom_product(N, N, a)
    return MomentTable(N, tuple(c[2 * N - 1 - k] for k in range(2 * N)))


def _integer_moments(N: int, a: Fraction) -> tuple[list[int], int]:
    """Moments scaled by den(a)^N so that they are integers."""
    scale = a.denominator**N
    mt = moments(N, a)
    ints = [int(v * scale) for v in mt.m]
    return ints, scale


def _bareiss(rows: list[list[int]], n: int) -> list[list[int]]:
    """Fraction-free elimination on the first n columns of an integer matrix.

    After the call, entry (k, k) is the leading k+1 minor, and every other
    entry is an integer minor of the input.
    """
    A = [list(r) for r in rows]
    prev = 1
    for k in range(n - 1):
        piv = A[k][k]
        if piv == 0:
            raise SingularMomentMatrix(f"leading minor of order {k + 1} vanishes")
        rk = A[k]
        for i in range(k + 1, n):
            ri = A[i]
            aik = ri[k]
            for j in range(k + 1, len(ri)):
                ri[j] = (piv * ri[j] - aik * rk[j]) // prev
            ri[k] = 0
        prev = piv
    return A


@lru_cache(maxsize=64)
def hankel_minors(N: int, alpha: AlphaLike, n_max: int | None = None) -> tuple[Fraction, ...]:
    """det M_n for n = 0..n_max (default 2N), M_n = [m_(j+k)]."""
    a = exact_alpha(alpha)
    n_max = 2 * N if n_max is None else n_max
    ints, scale = _integer_moments(N, a)
    get = lambda k: ints[k] if 0 <= k < len(ints) else 0  # noqa: E731
    rows = [[get(j + k) for k in range(n_max)] for j in range(n_max)]
    dets = [Fraction(1)]
    A = rows
    prev = 1
    for k in range(n_max):
        piv = A[k][k]
        dets.append(Fraction(piv, scale ** (k + 1)))
        if piv == 0:
            # later minors would need pivoting; record and stop
            dets.extend(Fraction(0) for _ in range(n_max - k - 1))
            break
        for i in range(k + 1, n_max):
            ri = A[i]
            aik = ri[k]
            for j in range(k + 1, n_max):
                ri[j] = (piv * ri[j] - aik * A[k][j]) // prev
            ri[k] = 0
        prev = piv
    return tuple(dets)


def lgv_minors(N: int, alpha: AlphaLike, n_max: int | None = None) -> tuple[Fraction, ...]:
    """det W_n: the Hankel minors with columns reversed (weighted path counts)."""
    return tuple((-1) ** (n * (n - 1) // 2) * d for n, d in enumerate(hankel_minors(N, alpha, n_max)))


@dataclass(frozen=True)
class OrthoBasis:
    N: int
    alpha: Fraction
    polys: tuple[tuple[Fraction, ...], ...]
    kappas: tuple[Fraction, ...]

    @cached_property
    def integer_rows(self) -> tuple[np.ndarray, list[int]]:
        """(P, d) with p_n = P[n] / d[n] and P an integer object array (N x N)."""
        N = self.N
        P = np.zeros((N, N), dtype=object)
        dens = []
        for n in range(N):
            d = lcm(*(c.denominator for c in self.polys[n]))
            dens.append(d)
            for j, c in enumerate(self.polys[n]):
                P[n, j] = c.numerator * (d // c.denominator)
        return P, dens

    @cached_property
    def weights(self) -> tuple[np.ndarray, int]:
        """(C, D) with 1 / (d_n^2 kappa_n) = C[n] / D, C an integer object array."""
        _, dens = self.integer_rows
        ws = [1 / (d * d * k) for d, k in zip(dens, self.kappas)]
        D = lcm(*(w.denominator for w in ws))
        C = np.array([w.numerator * (D // w.denominator) for w in ws], dtype=object)
        return C, D

    @cached_property
    def cd(self) -> tuple[tuple[Fraction, ...], ...]:
        """R_N as R[j][k] = coefficient of w^j z^k, from the sum over p_n p_n / kappa_n."""
        P, _ = self.integer_rows
        C, D = self.weights
        M = P.T.dot(P * C[:, None])
        return tuple(tuple(Fraction(int(v), D) for v in row) for row in M)

    def recurrence(self) -> tuple[list[Fraction], list[Fraction]]:
        """(a_n, b_n) with p_(n+1) = (z - a_n) p_n - b_n p_(n-1), n = 0..N-1."""
        sub = [p[-2] if len(p) > 1 else Fraction(0) for p in self.polys]
        a = [sub[n] - sub[n + 1] for n in range(self.N)]
        b = [Fraction(0)] + [self.kappas[n] / self.kappas[n - 1] for n in range(1, self.N)]
        return a, b


def pairing(N: int, alpha: Fraction, f: Sequence, g: Sequence) -> Fraction:
    """<f, g> for polynomial coefficient lists f, g."""
    w = binom_product(N, N, alpha)
    total = Fraction(0)
    for i, fi in enumerate(f):
        if not fi:
            continue
        for j, gj in enumerate(g):
            k = 2 * N - 1 - i - j
            if gj and 0 <= k < len(w):
                total += fi * gj * w[k]
    return total


@lru_cache(maxsize=64)
def ortho_basis(N: int, alpha: AlphaLike) -> OrthoBasis:
    """Monic p_0..p_N, norms kappa_0..kappa_(N-1) and the CD kernel R_N."""
    if N < 1:
        raise ValueError("N must be >= 1")
    a = exact_alpha(alpha)
    ints, scale = _integer_moments(N, a)
    size = N + 1
    get = lambda k: ints[k] if 0 <= k < len(ints) else 0  # noqa: E731
    rows = [[get(j + k) for k in range(size)] + [int(i == j) for i in range(size)] for j in range(size)]
    A = _bareiss(rows, size)
    polys = []
    for n in range(size):
        aug = A[n][size : size + n + 1]
        lead = aug[n]
        if lead == 0:
            raise SingularMomentMatrix(f"moment matrix of order {n} is singular")
        polys.append(tuple(Fraction(c, lead) for c in aug))
    # kappa_n = det M_(n+1) / det M_n
    minors = [1] + [A[k][k] for k in range(size)]
    kappas = tuple(Fraction(minors[n + 1], minors[n] * scale) for n in range(N))
    if any(k == 0 for k in kappas):
        raise SingularMomentMatrix("vanishing norm")
    return OrthoBasis(N, a, tuple(polys), kappas)


def kappa(N: int, alpha: AlphaLike, n: int) -> Fraction:
    """kappa_n = <p_n, p_n> = det M_(n+1) / det M_n, defined for n <= 2N-1."""
    if not 0 <= n <= 2 * N - 1:
        raise ValueError(f"kappa_{n} undefined for N={N}")
    d = hankel_minors(N, exact_alpha(alpha))
    if d[n] == 0:
        raise SingularMomentMatrix(f"moment matrix of order {n} is singular")
    return d[n + 1] / d[n]


def cd_divided_difference(basis: OrthoBasis) -> tuple[tuple[Fraction, ...], ...]:
    """R_N from (p_N(z) p_(N-1)(w) - p_N(w) p_(N-1)(z)) / (kappa_(N-1) (z - w)).

    Returned as R[j][k] = coefficient of w^j z^k.  Raises if the division
    leaves a remainder.
    """
    N = basis.N
    pN, pM = basis.polys[N], basis.polys[N - 1]
    size = N + 1
    C = [[Fraction(0)] * size for _ in range(size)]
    for j in range(size):
        for k in range(size):
            u = pM[j] * pN[k] if j < N else Fraction(0)
            v = pN[j] * pM[k] if k < N else Fraction(0)
            C[j][k] = u - v
    # (z - w) Q = C  <=>  Q[j][k-1] - Q[j-1][k] = C[j][k]
    Q = [[Fraction(0)] * size for _ in range(size)]
    for j in range(size):
        for k in range(1, size):
            Q[j][k - 1] = C[j][k] + (Q[j - 1][k] if j > 0 else 0)
    for j in range(size):
        rem = C[j][0] + (Q[j - 1][0] if j > 0 else 0)
        if rem != 0:
            raise ArithmeticError("CD numerator is not divisible by z - w")
    if any(Q[j][k] for j in range(size) for k in range(size) if j >= N or k >= N):
        raise ArithmeticError("CD quotient exceeds bidegree N-1")
    kinv = 1 / basis.kappas[N - 1]
    return tuple(tuple(Q[j][k] * kinv for k in range(N)) for j in range(N))


def _check_column(N: int, x: int) -> None:
    if not 1 <= x <= 2 * N - 1:
        raise ValueError(f"column {x} outside 1..{2 * N - 1}")


def kernel_single(N: int, alpha: AlphaLike, x1: int, y1: int, x2: int, y2: int) -> Fraction:
    """The term -[x1 > x2] (1/2 pi i) \\oint A_(x2,x1)(z) z^-(y1-y2+1) dz."""
    if x1 <= x2:
        return Fraction(0)
    a1, b1 = _col_exponents(x1)
    a2, b2 = _col_exponents(x2)
    return -coeff_of(a1 - a2, b1 - b2, exact_alpha(alpha), y1 - y2)


def _w_vector(N: int, a: Fraction, x: int, y: int, q: int = 0, r: int = 0, p: int = 0) -> list[Fraction]:
    """j -> coefficient of w^(2N-1-j-y-p) in (w+1)^(N-ax+q) (w+a)^(N-bx+r)."""
    ax, bx = _col_exponents(x)
    return [coeff_of(N - ax + q, N - bx + r, a, 2 * N - 1 - j - y - p) for j in range(N)]


def _z_vector(N: int, a: Fraction, x: int, y: int, q: int = 0, r: int = 0, p: int = 0) -> list[Fraction]:
    """k -> coefficient of z^(y-p-1-k) in (z+1)^(ax+q) (z+a)^(bx+r)."""
    ax, bx = _col_exponents(x)
    return [coeff_of(ax + q, bx + r, a, y - p - 1 - k) for k in range(N)]


def _bilinear(R, u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    total = Fraction(0)
    for j, uj in enumerate(u):
        if uj:
            row = R[j]
            s = sum((row[k] * vk for k, vk in enumerate(v) if vk), Fraction(0))
            total += uj * s
    return total


def kernel_K(N: int, alpha: AlphaLike, x1: int, y1: int, x2: int, y2: int) -> Fraction:
    """Correlation kernel K_N(x1, y1, x2, y2) for columns in 1..2N-1."""
    _check_column(N, x1)
    _check_column(N, x2)
    a = exact_alpha(alpha)
    basis = ortho_basis(N, a)
    u = _w_vector(N, a, x2, y2)
    v = _z_vector(N, a, x1, y1 + 1)
    return kernel_single(N, a, x1, y1, x2, y2) + _bilinear(basis.cd, u, v)


def kernel_diagonal(N: int, alpha: AlphaLike, x: int) -> list[Fraction]:
    """K_N(x, y, x, y) for y = 0..2N-1."""
    return [kernel_K(N, alpha, x, y, x, y) for y in range(2 * N)]


@dataclass(frozen=True)
class FactoredH:
    """H(w, z) = c w^pw (w+1)^qw (w+a)^rw z^pz (z+1)^qz (z+a)^rz."""

    c: Fraction = Fraction(1)
    pw: int = 0
    qw: int = 0
    rw: int = 0
    pz: int = 0
    qz: int = 0
    rz: int = 0

    def __mul__(self, other: "FactoredH") -> "FactoredH":
        return FactoredH(
            self.c * other.c,
            self.pw + other.pw, self.qw + other.qw, self.rw + other.rw,
            self.pz + other.pz, self.qz + other.qz, self.rz + other.rz,
        )

    def parity_factor(self, x: int) -> "FactoredH":
        # (w+a)/(w+1) * (z+1)/(z+a) for odd x
        if x % 2 == 0:
            return self
        return self * FactoredH(Fraction(1), 0, -1, 1, 0, 1, -1)

    def hat(self, x: int) -> "FactoredH":
        """H(z, w) times the parity factor."""
        swapped = FactoredH(self.c, self.pz, self.qz, self.rz, self.pw, self.qw, self.rw)
        return swapped.parity_factor(x)

    def tilde(self, x: int, alpha: Fraction) -> "FactoredH":
        """(a / (w z)) H(a/w, a/z) times the parity factor."""
        # (a/w)^p (a/w + 1)^q (a/w + a)^r = a^(p+r) w^-(p+q+r) (w+a)^q (w+1)^r
        c = self.c * alpha * alpha ** (self.pw + self.rw + self.pz + self.rz)
        out = FactoredH(
            c,
            -(self.pw + self.qw + self.rw) - 1, self.rw, self.qw,
            -(self.pz + self.qz + self.rz) - 1, self.rz, self.qz,
        )
        return out.parity_factor(x)

    def evaluate(self, w, z, alpha):
        return (
            self.c * w**self.pw * (w + 1) ** self.qw * (w + alpha) ** self.rw
            * z**self.pz * (z + 1) ** self.qz * (z + alpha) ** self.rz
        )


def h_function(t: LozengeType, x: int, alpha: AlphaLike) -> FactoredH:
    """The H function whose double integral gives the type-t probability at column x.

    For TypeIII this is 1/z, and the probability is 1 minus the integral.
    """
    a = exact_alpha(alpha)
    even = x % 2 == 0
    if t == LozengeType.TypeI:
        return FactoredH(Fraction(1), 1, 0, -1, -1) if even else FactoredH(Fraction(1), 1, -1, 0, -1)
    if t == LozengeType.TypeII:
        return FactoredH(a, 0, 0, -1, -1) if even else FactoredH(Fraction(1), 0, -1, 0, -1)
    return FactoredH(Fraction(1), 0, 0, 0, -1)


def double_integral(N: int, alpha: AlphaLike, x: int, y: int, H: FactoredH) -> Fraction:
    """(2 pi i)^-2 double integral of R_N(w,z) weight(w) F(z;x,y)/F(w;x,y) H(w,z)."""
    a = exact_alpha(alpha)
    ax, bx = _col_exponents(x)
    exps = (N - ax + H.qw, N - bx + H.rw, ax + H.qz, bx + H.rz)
    if min(exps) < 0:
        raise ValueError(f"face ({x}, {y}): integrand is not a Laurent polynomial for this H")
    basis = ortho_basis(N, a)
    u = _w_vector(N, a, x, y, H.qw, H.rw, H.pw)
    v = _z_vector(N, a, x, y, H.qz, H.rz, H.pz)
    return H.c * _bilinear(basis.cd, u, v)


def _check_face(N: int, x: int, y: int) -> None:
    _check_column(N, x)
    lo, hi = column_span(N, x)
    if not lo <= y < hi:
        raise ValueError(f"face ({x}, {y}) outside the hexagon")


def lozenge_probability(N: int, alpha: AlphaLike, x: int, y: int, t: LozengeType) -> Fraction:
    """Exact probability of a type-t lozenge at the interior face (x, y)."""
    _check_face(N, x, y)
    t = LozengeType(t)
    val = double_integral(N, alpha, x, y, h_function(t, x, alpha))
    return 1 - val if t == LozengeType.TypeIII else val


def lozenge_probabilities(N: int, alpha: AlphaLike, x: int, y: int) -> tuple[Fraction, Fraction, Fraction]:
    return tuple(lozenge_probability(N, alpha, x, y, t) for t in LozengeType)  # type: ignore[return-value]


def expected_height(N: int, alpha: AlphaLike, x: int, y: int) -> Fraction:
    """E[h(x, y)] = sum over k < y of K_N(x, k, x, k)."""
    _check_column(N, x)
    if not 0 <= y <= 2 * N:
        raise ValueError(f"height {y} outside 0..{2 * N}")
    return sum((kernel_K(N, alpha, x, k, x, k) for k in range(y)), Fraction(0))


def reproduce(basis: OrthoBasis, q: Sequence) -> tuple[Fraction, ...]:
    """Coefficients in w of (1/2 pi i) \\oint R_N(w, z) weight(z) q(z) dz."""
    N = basis.N
    out = []
    for j in range(N):
        out.append(pairing(N, basis.alpha, basis.cd[j], q))
    return tuple(out)


def rn_symmetry_defect(basis: OrthoBasis) -> dict[tuple[int, int], Fraction]:
    """Coefficients of R_N(a/w, a/z) - a^(N-1) (wz)^-(N-1) R_N(w, z), keyed (i, k).

    Exponents are of w and z; an empty dict means the identity holds exactly.
    """
    N, a = basis.N, basis.alpha
    lhs: dict[tuple[int, int], Fraction] = {}
    for j, row in enumerate(basis.cd):
        for k, c in enumerate(row):
            if c:
                key = (-j, -k)
                lhs[key] = lhs.get(key, 0) + c * a ** (j + k)
    rhs: dict[tuple[int, int], Fraction] = {}
    for j, row in enumerate(basis.cd):
        for k, c in enumerate(row):
            if c:
                key = (j - (N - 1), k - (N - 1))
                rhs[key] = rhs.get(key, 0) + c * a ** (N - 1)
    keys = set(lhs) | set(rhs)
    diff = {key: lhs.get(key, 0) - rhs.get(key, 0) for key in keys}
    return {k: v for k, v in diff.items() if v != 0}


class SeparableKernel:
    """Bulk exact kernel through K = single + sum_n A_n(x2, y2) B_n(x1, y1) / kappa_n.

    A_n and B_n are the w- and z-side contour functionals of p_n; for a fixed
    column they are integer matrix products, which makes whole columns cheap.
    Values agree exactly with ``kernel_K``.
    """

    def __init__(self, N: int, alpha: AlphaLike) -> None:
        self.N = N
        self.alpha = exact_alpha(alpha)
        self.basis = ortho_basis(N, self.alpha)
        self.ys = np.arange(-2, 2 * N + 2)
        self._w: dict = {}
        self._z: dict = {}

    def _scaled(self, q: int, r: int) -> tuple[list[int], int]:
        s = self.alpha.denominator**r
        return [int(c * s) for c in binom_product(q, r, self.alpha)], s

    def w_side(self, x: int, qw: int = 0, rw: int = 0, pw: int = 0) -> tuple[np.ndarray, int]:
        """Integer matrix A[n, i] for y = self.ys[i], true value A / (d_n * scale)."""
        key = (x, qw, rw, pw)
        if key not in self._w:
            N = self.N
            ax, bx = _col_exponents(x)
            c, scale = self._scaled(N - ax + qw, N - bx + rw)
            H = np.zeros((N, len(self.ys)), dtype=object)
            for j in range(N):
                for i, y in enumerate(self.ys):
                    k = 2 * N - 1 - j - int(y) - pw
                    H[j, i] = c[k] if 0 <= k < len(c) else 0
            P, _ = self.basis.integer_rows
            self._w[key] = (P.dot(H), scale)
        return self._w[key]

    def z_side(self, x: int, qz: int = 0, rz: int = 0, pz: int = 0) -> tuple[np.ndarray, int]:
        """Integer matrix B[n, i]: coefficient of z^(y - pz - 1 - k) paired with p_n."""
        key = (x, qz, rz, pz)
        if key not in self._z:
            N = self.N
            ax, bx = _col_exponents(x)
            c, scale = self._scaled(ax + qz, bx + rz)
            H = np.zeros((N, len(self.ys)), dtype=object)
            for k in range(N):
                for i, y in enumerate(self.ys):
                    t = int(y) - pz - 1 - k
                    H[k, i] = c[t] if 0 <= t < len(c) else 0
            P, _ = self.basis.integer_rows
            self._z[key] = (P.dot(H), scale)
        return self._z[key]

    def _index(self, y: int) -> int:
        i = y - int(self.ys[0])
        if not 0 <= i < len(self.ys):
            raise ValueError(f"height {y} outside the precomputed range")
        return i

    def double_term(self, x1: int, y1: int, x2: int, y2: int) -> Fraction:
        A, sa = self.w_side(x2)
        B, sb = self.z_side(x1, pz=-1)
        C, D = self.basis.weights
        v = (A[:, self._index(y2)] * B[:, self._index(y1)] * C).sum()
        return Fraction(int(v), D * sa * sb)

    def kernel(self, x1: int, y1: int, x2: int, y2: int) -> Fraction:
        _check_column(self.N, x1)
        _check_column(self.N, x2)
        return kernel_single(self.N, self.alpha, x1, y1, x2, y2) + self.double_term(x1, y1, x2, y2)

    def integral(self, x: int, y: int, H: FactoredH) -> Fraction:
        """Exact double integral of the lozenge formula for a factored H."""
        A, sa = self.w_side(x, H.qw, H.rw, H.pw)
        B, sb = self.z_side(x, H.qz, H.rz, H.pz)
        C, D = self.basis.weights
        i = self._index(y)
        v = (A[:, i] * B[:, i] * C).sum()
        return H.c * Fraction(int(v), D * sa * sb)

    def diagonal(self, x: int) -> list[Fraction]:
        """K_N(x, y, x, y) for y = 0..2N-1."""
        _check_column(self.N, x)
        A, sa = self.w_side(x)
        B, sb = self.z_side(x, pz=-1)
        C, D = self.basis.weights
        lo = self._index(0)
        vals = (A[:, lo : lo + 2 * self.N] * B[:, lo : lo + 2 * self.N] * C[:, None]).sum(axis=0)
        den = D * sa * sb
        return [Fraction(int(v), den) for v in vals]

    def probabilities(self, x: int, y: int) -> tuple[Fraction, Fraction, Fraction]:
        _check_face(self.N, x, y)
        out = []
        for t in LozengeType:
            v = self.integral(x, y, h_function(t, x, self.alpha))
            out.append(1 - v if t == LozengeType.TypeIII else v)
        return tuple(out)  # type: ignore[return-value]

    def _rounded(self, A: np.ndarray, B: np.ndarray, den: int) -> np.ndarray:
        """Correctly rounded sum_n A[n] B[n] / (d_n^2 kappa_n den) per column of A, B."""
        ws = [1 / (d * d * k) for d, k in zip(self.basis.integer_rows[1], self.basis.kappas)]
        out = np.zeros(A.shape[1])
        for n, w in enumerate(ws):
            num, dd = w.numerator, w.denominator * den
            prod = A[n] * B[n]
            out += np.array([int(v) * num / dd for v in prod], dtype=float)
        return out

    def integral_float(self, x: int, H: FactoredH) -> np.ndarray:
        """Double integral for every y in ``self.ys`` as rounded floats."""
        A, sa = self.w_side(x, H.qw, H.rw, H.pw)
        B, sb = self.z_side(x, H.qz, H.rz, H.pz)
        return float(H.c) * self._rounded(A, B, sa * sb)
