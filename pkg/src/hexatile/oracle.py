"""Brute-force ground truth for small hexagons.

``enumerate_tilings`` lists every path system and keeps weights as energy
histograms, so partition functions and marginals are exact polynomials in
alpha.  ``eynard_mehta_kernel`` builds the correlation kernel from products
of the transfer matrices and an inverted Gram matrix; it never touches the
orthogonal polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .lattice import AlphaLike, LozengeType, PathSystem, exact_alpha

MAX_ORACLE_N = 4


def _transitions(n: int, m: int, state: tuple[int, ...]) -> list[tuple[tuple[int, ...], int]]:
    """Next positions from column m with the number of flat steps at even m."""
    out = []
    last = m + 1

    def rec(j: int, prev: int, acc: list[int], flats: int) -> None:
        if j == n:
            out.append((tuple(acc), flats if m % 2 == 0 else 0))
            return
        for step in (0, 1):
            y = state[j] + step
            # stay co-reachable: path j must still be able to rise to n + j
            if y <= prev or y > n + j or n + j - y > 2 * n - last:
                continue
            acc.append(y)
            rec(j + 1, y, acc, flats + (step == 0))
            acc.pop()

    rec(0, -1, [], 0)
    return out


@dataclass(frozen=True)
class EnumerationResult:
    n: int
    alpha: Fraction
    heights: np.ndarray = field(repr=False)
    energies: np.ndarray = field(repr=False)

    @cached_property
    def histogram(self) -> np.ndarray:
        return np.bincount(self.energies, minlength=self.n * self.n + 1)

    @cached_property
    def partition_function(self) -> Fraction:
        return sum((int(c) * self.alpha**e for e, c in enumerate(self.histogram)), Fraction(0))

    @property
    def count(self) -> int:
        return len(self.energies)

    def weights(self) -> list[Fraction]:
        return [self.alpha ** int(e) for e in self.energies]

    @property
    def tilings(self) -> list[tuple[PathSystem, Fraction]]:
        return [(PathSystem(self.n, h), w) for h, w in zip(self.heights, self.weights())]

    def probabilities(self) -> dict[bytes, Fraction]:
        """Gibbs probability of every tiling keyed by ``PathSystem.key()``."""
        Z = self.partition_function
        return {
            np.ascontiguousarray(h, dtype=np.int64).tobytes(): self.alpha ** int(e) / Z
            for h, e in zip(self.heights, self.energies)
        }

    def _weighted(self, counts: np.ndarray) -> np.ndarray:
        """Sum over energy levels of alpha^e * counts[e], divided by Z (object array)."""
        Z = self.partition_function
        out = np.empty(counts.shape[1:], dtype=object)
        flat = counts.reshape(counts.shape[0], -1)
        res = [
            sum((int(flat[e, i]) * self.alpha**e for e in range(flat.shape[0]) if flat[e, i]), Fraction(0)) / Z
            for i in range(flat.shape[1])
        ]
        out.reshape(-1)[:] = res
        return out

    @cached_property
    def face_types(self) -> np.ndarray:
        """Lozenge type of every face for every tiling, shape (T, 2n, 2n)."""
        n, T = self.n, self.count
        faces = np.full((T, 2 * n, 2 * n), LozengeType.TypeIII, dtype=np.int8)
        steps = np.diff(self.heights, axis=2)
        t_idx = np.arange(T)[:, None]
        for x in range(2 * n):
            ys = self.heights[:, :, x]
            faces[t_idx, x, ys] = np.where(steps[:, :, x] == 1, LozengeType.TypeI, LozengeType.TypeII)
        return faces

    def face_marginals(self) -> np.ndarray:
        """Exact P(type t at face (x, y)) as an object array indexed [t, x, y]."""
        levels = self.n * self.n + 1
        counts = np.zeros((levels, 3, 2 * self.n, 2 * self.n), dtype=np.int64)
        for t in LozengeType:
            hit = (self.face_types == t).astype(np.int64)
            np.add.at(counts[:, int(t)], self.energies, hit)
        return self._weighted(counts)

    def occupancy(self, points: list[tuple[int, int]]) -> np.ndarray:
        """Indicator (T, P) that some path passes through (x, y + 1/2)."""
        cols = np.array([p[0] for p in points])
        ys = np.array([p[1] for p in points])
        return (self.heights[:, :, cols] == ys[None, None, :]).any(axis=1)

    def pair_marginals(self, points: list[tuple[int, int]]) -> np.ndarray:
        """Exact P(paths through both points), object array (P, P)."""
        occ = self.occupancy(points).astype(np.int64)
        levels = self.n * self.n + 1
        counts = np.zeros((levels, len(points), len(points)), dtype=np.int64)
        for e in np.unique(self.energies):
            sel = occ[self.energies == e]
            counts[e] = sel.T @ sel
        return self._weighted(counts)


def enumerate_tilings(N: int, alpha: AlphaLike) -> EnumerationResult:
    """Every tiling of the N x N x N hexagon, by depth-first search over columns."""
    if N > MAX_ORACLE_N:
        raise ValueError(f"enumeration is limited to N <= {MAX_ORACLE_N}")
    if N < 1:
        raise ValueError("N must be >= 1")
    a = exact_alpha(alpha)
    memo: dict[tuple[int, tuple[int, ...]], list] = {}
    rows: list[list[tuple[int, ...]]] = []
    energies: list[int] = []
    start = tuple(range(N))
    path: list[tuple[int, ...]] = [start]

    def dfs(m: int, state: tuple[int, ...], e: int) -> None:
        if m == 2 * N:
            rows.append(list(path))
            energies.append(e)
            return
        key = (m, state)
        nxt = memo.get(key)
        if nxt is None:
            nxt = memo[key] = _transitions(N, m, state)
        for y, flats in nxt:
            path.append(y)
            dfs(m + 1, y, e + flats)
            path.pop()

    dfs(0, start, 0)
    heights = np.array(rows, dtype=np.int64).transpose(0, 2, 1)
    return EnumerationResult(N, a, heights, np.array(energies, dtype=np.int64))


def transfer_matrix(m: int, size: int, alpha: Fraction) -> list[list[Fraction]]:
    diag = alpha if m % 2 == 0 else Fraction(1)
    T = [[Fraction(0)] * size for _ in range(size)]
    for x in range(size):
        T[x][x] = diag
        if x + 1 < size:
            T[x][x + 1] = Fraction(1)
    return T


def _matmul(A, B):
    Bt = list(zip(*B))
    return [[sum((a * b for a, b in zip(row, col) if a and b), Fraction(0)) for col in Bt] for row in A]


def _identity(size: int):
    return [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]


def _inverse(A):
    n = len(A)
    M = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            raise ArithmeticError("singular Gram matrix")
        M[c], M[piv] = M[piv], M[c]
        inv = 1 / M[c][c]
        M[c] = [v * inv for v in M[c]]
        for r in range(n):
            if r != c and M[r][c]:
                f = M[r][c]
                M[r] = [u - f * v for u, v in zip(M[r], M[c])]
    return [row[n:] for row in M]


@dataclass(frozen=True)
class KernelTable:
    n: int
    alpha: Fraction
    values: dict[tuple[int, int, int, int], Fraction] = field(repr=False)

    def __call__(self, x1: int, y1: int, x2: int, y2: int) -> Fraction:
        return self.values[(x1, y1, x2, y2)]


def eynard_mehta_kernel(N: int, alpha: AlphaLike) -> KernelTable:
    """K_N(x1, y1, x2, y2) for x in 1..2N-1 and y in 0..2N-1 from transfer matrices.

    The extended kernel is
        K(r, u; s, v) = -[r < s] phi_(r,s)(u, v)
                        + sum_(i,j) phi_(r,2N)(u, b_i) (G^-1)_(ij) phi_(0,s)(a_j, v)
    with G_(ji) = phi_(0,2N)(a_j, b_i), and K_N(x1, y1, x2, y2) = K(x2, y2; x1, y1).
    """
    if N > MAX_ORACLE_N:
        raise ValueError(f"Eynard-Mehta oracle is limited to N <= {MAX_ORACLE_N}")
    a = exact_alpha(alpha)
    L = 2 * N
    T = [transfer_matrix(m, L, a) for m in range(L)]
    phi: dict[tuple[int, int], list] = {}
    for r in range(L + 1):
        acc = _identity(L)
        phi[(r, r)] = acc
        for s in range(r + 1, L + 1):
            acc = _matmul(acc, T[s - 1])
            phi[(r, s)] = acc
    starts = list(range(N))
    ends = [N + j for j in range(N)]
    full = phi[(0, L)]
    G = [[full[aj][bi] for bi in ends] for aj in starts]
    Ginv = _inverse(G)
    cols = range(1, L)
    # left[r][u][j] = sum_i phi_(r,2N)(u, b_i) Ginv[i][j]
    left = {
        r: [[sum((phi[(r, L)][u][bi] * Ginv[i][j] for i, bi in enumerate(ends)), Fraction(0)) for j in range(N)] for u in range(L)]
        for r in cols
    }
    values: dict[tuple[int, int, int, int], Fraction] = {}
    for r in cols:
        for s in cols:
            ps = phi[(0, s)]
            prs = phi[(r, s)] if r < s else None
            for u in range(L):
                lu = left[r][u]
                for v in range(L):
                    val = sum((lu[j] * ps[aj][v] for j, aj in enumerate(starts)), Fraction(0))
                    if prs is not None:
                        val -= prs[u][v]
                    values[(s, v, r, u)] = val
    return KernelTable(N, a, values)
