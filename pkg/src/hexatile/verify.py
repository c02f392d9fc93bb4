"""Exact cross-checks between the kernel formulas, the transfer-matrix kernel and enumeration."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .exact import SeparableKernel, kernel_K, lozenge_probabilities
from .lattice import AlphaLike, exact_alpha, format_rational, interior_faces
from .oracle import MAX_ORACLE_N, enumerate_tilings, eynard_mehta_kernel
from .sampler import sequential_probability

DEFAULT_ALPHAS = (Fraction(1, 16), Fraction(1, 9), Fraction(1, 4), Fraction(1))


@dataclass(frozen=True)
class Check:
    name: str
    n: int
    alpha: Fraction
    passed: bool
    detail: str = ""

    def row(self) -> str:
        return f"{self.name:<22} N={self.n} alpha={format_rational(self.alpha):<5} {'PASS' if self.passed else 'FAIL'} {self.detail}".rstrip()


def _det2(a, b, c, d):
    return a * d - b * c


def check_case(n: int, alpha: AlphaLike, pairs: bool = True) -> list[Check]:
    a = exact_alpha(alpha)
    res = enumerate_tilings(n, a)
    marg = res.face_marginals()
    em = eynard_mehta_kernel(n, a)
    sep = SeparableKernel(n, a)
    out = []

    bad = [f for f in interior_faces(n) if tuple(marg[:, f[0], f[1]]) != lozenge_probabilities(n, a, *f)]
    out.append(Check("face marginals", n, a, not bad, f"{len(bad)} mismatches" if bad else ""))

    pts = [(x, y) for x in range(1, 2 * n) for y in range(2 * n)]
    bad_k = 0
    for p in pts:
        for q in pts:
            k = kernel_K(n, a, *p, *q)
            if k != em(*p, *q) or k != sep.kernel(*p, *q):
                bad_k += 1
    out.append(Check("kernel vs transfer", n, a, bad_k == 0, f"{bad_k} mismatches" if bad_k else ""))

    occ = [p for p in pts if p[1] < 2 * n]
    one = res.pair_marginals(occ)
    bad_p = 0
    for i, p in enumerate(occ):
        if one[i, i] != kernel_K(n, a, *p, *p):
            bad_p += 1
    if pairs:
        for i, j in combinations(range(len(occ)), 2):
            p, q = occ[i], occ[j]
            d = _det2(kernel_K(n, a, *p, *p), kernel_K(n, a, *p, *q), kernel_K(n, a, *q, *p), kernel_K(n, a, *q, *q))
            if d != one[i, j]:
                bad_p += 1
    out.append(Check("pair correlations", n, a, bad_p == 0, f"{bad_p} mismatches" if bad_p else ""))

    probs = res.probabilities()
    bad_s = sum(1 for p, _ in res.tilings if sequential_probability(p, a) != probs[p.key()])
    out.append(Check("sampler law", n, a, bad_s == 0, f"{bad_s} mismatches" if bad_s else ""))
    return out


def oracle_suite(max_n: int = 3, alphas=DEFAULT_ALPHAS) -> list[Check]:
    if not 1 <= max_n <= MAX_ORACLE_N:
        raise ValueError(f"max_n must lie in 1..{MAX_ORACLE_N}")
    out = []
    for n in range(1, max_n + 1):
        for a in alphas:
            out.extend(check_case(n, a))
    return out
