"""Exact Laurent polynomials over the rationals.

A contour integral (1/2 pi i) \\oint f(z) dz around 0 of a Laurent polynomial
is its coefficient of z^-1; ``LaurentSeries.residue`` implements exactly that.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Iterable, Sequence


class LaurentSeries:
    __slots__ = ("lo", "coeffs")

    def __init__(self, lo: int, coeffs: Iterable) -> None:
        c = [Fraction(v) for v in coeffs]
        while c and c[-1] == 0:
            c.pop()
        start = 0
        while start < len(c) and c[start] == 0:
            start += 1
        self.coeffs: tuple[Fraction, ...] = tuple(c[start:])
        self.lo = int(lo) + start if self.coeffs else 0

    @classmethod
    def monomial(cls, k: int, c=1) -> "LaurentSeries":
        return cls(k, [c])

    @classmethod
    def linear(cls, a) -> "LaurentSeries":
        """The polynomial z + a."""
        return cls(0, [a, 1])

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff(self, k: int) -> Fraction:
        i = k - self.lo
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return Fraction(0)

    def residue(self) -> Fraction:
        return self.coeff(-1)

    def __add__(self, other: "LaurentSeries") -> "LaurentSeries":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        lo = min(self.lo, other.lo)
        hi = max(self.hi, other.hi)
        return LaurentSeries(lo, [self.coeff(k) + other.coeff(k) for k in range(lo, hi + 1)])

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(self.lo, [-c for c in self.coeffs])

    def __sub__(self, other: "LaurentSeries") -> "LaurentSeries":
        return self + (-other)

    def __mul__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            return LaurentSeries(self.lo, [c * other for c in self.coeffs])
        if self.is_zero() or other.is_zero():
            return LaurentSeries(0, [])
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return LaurentSeries(self.lo + other.lo, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentSeries":
        if k < 0:
            if len(self.coeffs) != 1:
                raise ValueError("only monomials have Laurent inverses")
            return LaurentSeries(self.lo * k, [self.coeffs[0] ** k])
        out = LaurentSeries(0, [1])
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, LaurentSeries)
            and self.coeffs == other.coeffs
            and (self.lo == other.lo or not self.coeffs)
        )

    def __hash__(self) -> int:
        return hash((self.lo, self.coeffs))

    def __call__(self, z):
        return sum((c * z ** (self.lo + i) for i, c in enumerate(self.coeffs)), 0 * z)

    def __repr__(self) -> str:
        return f"LaurentSeries(lo={self.lo}, coeffs={[str(c) for c in self.coeffs]})"


@lru_cache(maxsize=4096)
def binom_product(q: int, r: int, alpha: Fraction) -> tuple[Fraction, ...]:
    """Coefficients of (z+1)^q (z+alpha)^r, lowest degree first."""
    if q < 0 or r < 0:
        raise ValueError(f"negative exponent in (z+1)^{q} (z+a)^{r}")
    a = [comb(q, i) for i in range(q + 1)]
    b = [comb(r, i) * alpha ** (r - i) for i in range(r + 1)]
    out = [Fraction(0)] * (q + r + 1)
    for i, u in enumerate(a):
        for j, v in enumerate(b):
            out[i + j] += u * v
    return tuple(out)


def coeff_of(q: int, r: int, alpha: Fraction, k: int) -> Fraction:
    """Coefficient of z^k in (z+1)^q (z+alpha)^r (zero outside the support)."""
    c = binom_product(q, r, alpha)
    return c[k] if 0 <= k < len(c) else Fraction(0)


def poly_eval(coeffs: Sequence, z):
    acc = 0 * z
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc
