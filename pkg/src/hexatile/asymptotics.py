"""Large-N layer: equilibrium measure, phase functions, saddle points and limit shapes.

Regimes are split at alpha = 1/9.  The critical value uses the low-regime
formulas, where Q_alpha is the square of a rational function and the
equilibrium measure lives on the full circle |z| = sqrt(alpha).

Square-root branches in the high regime are built from

    w_seg(z) = (z - z+) * sqrt((z - z-) / (z - z+))

which behaves like z at infinity and has its cut on the chord [z-, z+].
Flipping its sign on one side of the chord moves the cut onto the circle:
inside the right lens it moves onto Sigma_0 (the arc |t| <= theta), inside
the left lens onto the complementary arc C.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .lattice import AlphaLike, LozengeType, parse_alpha

QUAD_TOL = 1e-10
QUAD_MAX_NODES = 2**16
BOUNDARY_BAND = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(20)


class Regime(str, Enum):
    LOW = "low"
    CRITICAL = "critical"
    HIGH = "high"


def regime(alpha: AlphaLike) -> Regime:
    """Exact comparison with 1/9 for rational input, float comparison otherwise."""
    a = parse_alpha(alpha)
    ninth = Fraction(1, 9) if isinstance(a, Fraction) else 1 / 9
    if a < ninth:
        return Regime.LOW
    if a == ninth:
        return Regime.CRITICAL
    return Regime.HIGH


def integrate(f, lo: float, hi: float, tol: float = QUAD_TOL, max_nodes: int = QUAD_MAX_NODES) -> complex:
    """Adaptive composite Gauss-Legendre quadrature of a vectorised integrand.

    Intervals are bisected until the two-halves estimate agrees with the
    whole-interval estimate to ``tol`` scaled by the interval's share of
    [lo, hi].  Bisection stops once ``max_nodes`` evaluations are spent.
    """
    if hi == lo:
        return 0.0
    span = hi - lo

    def rule(a: float, b: float) -> complex:
        h = 0.5 * (b - a)
        return h * np.dot(_GL_W, f(0.5 * (a + b) + h * _GL_X))

    used = len(_GL_X)
    stack = [(lo, hi, rule(lo, hi))]
    total = 0.0
    while stack:
        a, b, whole = stack.pop()
        m = 0.5 * (a + b)
        left, right = rule(a, m), rule(m, b)
        used += 2 * len(_GL_X)
        if abs(left + right - whole) <= tol * abs(b - a) / abs(span) or abs(b - a) < 1e-13 * abs(span) or used >= max_nodes:
            total += left + right
        else:
            stack.append((a, m, left))
            stack.append((m, b, right))
    return total


def _as_float(alpha: AlphaLike) -> float:
    return float(parse_alpha(alpha))


@dataclass(frozen=True)
class EquilibriumData:
    """Branch points and support of the equilibrium measure for one alpha.

    ``theta`` is arg z+ in the high regime and pi otherwise, so the support
    is always {sqrt(alpha) e^(it) : |t| <= theta}.
    """

    alpha: float
    regime: Regime
    z_plus: complex
    z_minus: complex
    theta: float

    @property
    def r(self) -> float:
        return math.sqrt(self.alpha)

    @cached_property
    def ell(self) -> complex:
        a, r = self.alpha, self.r
        if self.regime is Regime.HIGH:
            return -2 * g_function(self.z_plus, a) + potential(self.z_plus, a)
        return -2 * g_function(complex(r, 0.0), a) + potential(complex(r, 0.0), a) - math.pi * 1j


@lru_cache(maxsize=64)
def _equilibrium(a: float, reg: Regime) -> EquilibriumData:
    r = math.sqrt(a)
    if reg is Regime.HIGH:
        re = -(3 - 2 * r + 3 * a) / 8
        im = 3 * (1 + r) / 8 * math.sqrt((1 - r / 3) * (3 * r - 1))
        zp = complex(re, im)
        return EquilibriumData(a, reg, zp, zp.conjugate(), math.atan2(im, re))
    d = 0.25 * math.sqrt(max((1 - a) * (1 - 9 * a), 0.0))
    c = -(1 + 3 * a) / 4
    return EquilibriumData(a, reg, complex(c + d, 0.0), complex(c - d, 0.0), math.pi)


def equilibrium_data(alpha: AlphaLike) -> EquilibriumData:
    return _equilibrium(_as_float(alpha), regime(alpha))


def _check_poles(z, a: float) -> None:
    z = np.asarray(z)
    if np.any((z == 0) | (z == -1) | (z == -a)):
        raise ValueError("z is a pole (0, -1 or -alpha)")


def q_alpha(z, alpha: AlphaLike):
    """Q_alpha(z) as a rational function."""
    eq = equilibrium_data(alpha)
    a = eq.alpha
    _check_poles(z, a)
    z = np.asarray(z, dtype=complex)
    den = z**2 * (z + 1) ** 2 * (z + a) ** 2
    if eq.regime is Regime.HIGH:
        num = (z + eq.r) ** 2 * (z - eq.z_plus) * (z - eq.z_minus)
    else:
        num = ((z - eq.z_plus) * (z - eq.z_minus)) ** 2
    out = num / den
    return out[()] if out.ndim == 0 else out


def _w_seg(z: np.ndarray, eq: EquilibriumData) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        w = (z - eq.z_plus) * np.sqrt((z - eq.z_minus) / (z - eq.z_plus))
    return np.where(z == eq.z_plus, 0.0, w)


def _w(z: np.ndarray, eq: EquilibriumData, cut: str) -> np.ndarray:
    """sqrt((z - z+)(z - z-)) ~ z at infinity with its cut on Sigma_0 or on C."""
    w = _w_seg(z, eq)
    inside = np.abs(z) < eq.r
    right = z.real > eq.z_plus.real
    lens = inside & right if cut == "sigma0" else inside & ~right
    return np.where(lens, -w, w)


def q_sqrt(z, alpha: AlphaLike, sheet: str | None = None):
    """Q_alpha(z)^(1/2) with Q^(1/2) ~ 1/z at infinity.

    Low and critical regimes: the rational square root.  High regime: cut on
    Sigma_0 when ``sheet`` is None; with ``sheet`` in {'plus', 'minus'} the
    cut is the left arc C and the value is taken on that sheet of the
    saddle-point Riemann surface.
    """
    eq = equilibrium_data(alpha)
    a = eq.alpha
    _check_poles(z, a)
    z = np.asarray(z, dtype=complex)
    den = z * (z + 1) * (z + a)
    if eq.regime is Regime.HIGH:
        if sheet is None:
            num = (z + eq.r) * _w(z, eq, "sigma0")
        else:
            num = _sheet_sign(sheet) * (z + eq.r) * _w(z, eq, "C")
    else:
        num = (z - eq.z_plus) * (z - eq.z_minus)
        if sheet is not None:
            num = _sheet_sign(sheet) * num
    out = num / den
    return out[()] if out.ndim == 0 else out


def _sheet_sign(sheet: str) -> int:
    if sheet not in ("plus", "minus"):
        raise ValueError(f"sheet must be 'plus' or 'minus', got {sheet!r}")
    return 1 if sheet == "plus" else -1


def residues(alpha: AlphaLike, radius: float = 1e-3, nodes: int = 256) -> dict[str, complex]:
    """Residues of q_sqrt at 0, -1 and -alpha by trapezoidal circles.

    At alpha = 1 the poles -1 and -alpha coincide and both keys carry half
    of the combined residue.
    """
    a = _as_float(alpha)
    u = np.exp(2j * np.pi * np.arange(nodes) / nodes)

    def res(p: float) -> complex:
        z = p + radius * u
        return complex(np.mean(q_sqrt(z, alpha) * radius * u))

    out = {"0": res(0.0), "-1": res(-1.0)}
    if a == 1.0:
        out["-1"] = out["-alpha"] = out["-1"] / 2
    else:
        out["-alpha"] = res(-a)
    return out


def potential(z, alpha: AlphaLike):
    """V_alpha(z) = 2 log z - log(z+1) - log(z+alpha), principal logarithms."""
    a = _as_float(alpha)
    z = np.asarray(z, dtype=complex)
    out = 2 * np.log(z) - np.log(z + 1) - np.log(z + a)
    return out[()] if out.ndim == 0 else out


def mu0_density(t, alpha: AlphaLike):
    """Density of the equilibrium measure in the angle t, s = sqrt(alpha) e^(it)."""
    eq = equilibrium_data(alpha)
    t = np.asarray(t, dtype=float)
    if eq.regime is Regime.HIGH and np.any(np.abs(t) > eq.theta * (1 + 1e-15)):
        raise ValueError("t outside the support |t| <= theta_alpha")
    out = _mu0(t, eq)
    return out[()] if out.ndim == 0 else out


def _mu0(t: np.ndarray, eq: EquilibriumData) -> np.ndarray:
    s = eq.r * np.exp(1j * t)
    a = eq.alpha
    if eq.regime is Regime.HIGH:
        # exterior boundary value: w_seg is analytic across the open arc
        q = (s + eq.r) * _w_seg(s, eq) / (s * (s + 1) * (s + a))
    else:
        q = (s - eq.z_plus) * (s - eq.z_minus) / (s * (s + 1) * (s + a))
    return np.real(s * q) / np.pi


def mu0_integral(h, alpha: AlphaLike, breaks: tuple[float, ...] = (), tol: float = QUAD_TOL) -> complex:
    """Integral of h(s, t) against mu_0, vectorised in t.

    In the high regime t = theta sin(u) removes the square-root endpoints.
    ``breaks`` lists angles where h is singular; they become subinterval ends.
    """
    eq = equilibrium_data(alpha)
    th = eq.theta
    if eq.regime is Regime.HIGH:

        def f(u):
            t = th * np.sin(u)
            return h(eq.r * np.exp(1j * t), t) * _mu0(t, eq) * th * np.cos(u)

        ends = [-np.pi / 2, np.pi / 2]
        ends += [math.asin(b / th) for b in breaks if -th < b < th]
    else:

        def f(t):
            return h(eq.r * np.exp(1j * t), t) * _mu0(t, eq)

        ends = [-np.pi, np.pi] + [b for b in breaks if -np.pi < b < np.pi]
    ends = sorted(set(ends))
    sub_tol = tol / (len(ends) - 1)
    return sum(integrate(f, lo, hi, sub_tol) for lo, hi in zip(ends[:-1], ends[1:]))


def g_function(z: complex, alpha: AlphaLike) -> complex:
    """g(z) = int log(z - s) dmu_0(s).

    Outside the circle this is Log z + int Log(1 - s/z); inside it is
    log(-s) + int Log(1 - z/s) with arg(-s) = arg(s) + pi.  Points on the
    circle get the exterior boundary value.
    """
    eq = equilibrium_data(alpha)
    z = complex(z)
    if z == 0:
        raise ValueError("g is evaluated away from 0")
    br = (cmath.phase(z),) if abs(abs(z) - eq.r) < 0.25 * eq.r else ()
    if abs(z) >= eq.r:
        return cmath.log(z) + mu0_integral(lambda s, t: np.log(1 - s / z), alpha, br)
    rest = mu0_integral(lambda s, t: np.log(1 - z / s) + 1j * t, alpha, br)
    return math.log(eq.r) + 1j * math.pi + rest


def _segment(f, p0: complex, p1: complex, branch_start: bool = False) -> complex:
    """Integral of f along the straight segment p0 -> p1."""
    d = p1 - p0
    if branch_start:
        return integrate(lambda u: f(p0 + d * u * u) * d * 2 * u, 0.0, 1.0)
    return integrate(lambda u: f(p0 + d * u) * d, 0.0, 1.0)


def _arc(f, radius: float, t0: float, t1: float) -> complex:
    """Integral of f along radius * e^(it), t from t0 to t1."""

    def g(t):
        z = radius * np.exp(1j * t)
        return f(z) * 1j * z

    return integrate(g, t0, t1)


def phi_function(z: complex, alpha: AlphaLike) -> complex:
    """Primitive of q_sqrt, normalised at z+ (high) or at sqrt(alpha) (low)."""
    eq = equilibrium_data(alpha)
    z = complex(z)
    if z.imag == 0 and z.real <= 0:
        raise ValueError("phi is not defined on (-inf, 0]")
    q = lambda w: q_sqrt(w, alpha)  # noqa: E731
    rz, tz = abs(z), cmath.phase(z)
    if eq.regime is Regime.HIGH:
        th = eq.theta
        if abs(rz - eq.r) < 1e-14 and -np.pi < tz <= th:
            raise ValueError("z lies on the cut of phi")
        if rz >= eq.r:
            v = _segment(q, eq.z_plus, rz * cmath.exp(1j * th), branch_start=True)
            return v + _arc(q, rz, th, tz)
        mid = 0.5 * (th + np.pi)
        v = _arc(q, eq.r, th, mid)
        v += _segment(q, eq.r * cmath.exp(1j * mid), rz * cmath.exp(1j * mid))
        return v + _arc(q, rz, mid, tz)
    if abs(rz - eq.r) < 1e-14:
        raise ValueError("z lies on the cut of phi")
    v = _segment(q, complex(eq.r, 0.0), complex(rz, 0.0)) + _arc(q, rz, 0.0, tz)
    return -0.5j * np.pi + v if rz > eq.r else 0.5j * np.pi - v


def g_phi_eval(z: complex, alpha: AlphaLike) -> tuple[complex, complex]:
    return g_function(z, alpha), phi_function(z, alpha)


def _log_terms(z: complex, xi: float, eta: float, a: float) -> complex:
    return 0.5 * xi * (cmath.log(z + 1) + cmath.log(z + a)) - eta * cmath.log(z)


def phase_Phi(z: complex, xi: float, eta: float, alpha: AlphaLike) -> complex:
    return phi_function(z, alpha) + _log_terms(complex(z), xi, eta, _as_float(alpha))


def phase_Psi(z: complex, xi: float, eta: float, alpha: AlphaLike) -> complex:
    return -phi_function(z, alpha) + _log_terms(complex(z), xi, eta, _as_float(alpha))


def phi_prime(z: complex, alpha: AlphaLike) -> complex:
    """Derivative of phi; in the low regime phi is minus a primitive inside the circle."""
    eq = equilibrium_data(alpha)
    q = complex(q_sqrt(z, alpha))
    if eq.regime is not Regime.HIGH and abs(z) < eq.r:
        return -q
    return q


def phase_Phi_prime(z: complex, xi: float, eta: float, alpha: AlphaLike) -> complex:
    a = _as_float(alpha)
    return phi_prime(z, alpha) + 0.5 * xi * (1 / (z + 1) + 1 / (z + a)) - eta / z


def phase_Psi_prime(z: complex, xi: float, eta: float, alpha: AlphaLike) -> complex:
    a = _as_float(alpha)
    return -phi_prime(z, alpha) + 0.5 * xi * (1 / (z + 1) + 1 / (z + a)) - eta / z


# saddle points


@dataclass(frozen=True)
class ScaledPoint:
    xi: float
    eta: float

    def __post_init__(self) -> None:
        x, y, e = self.xi, self.eta, 1e-12
        if not (-1 - e <= x <= 1 + e and -1 - e <= y <= 1 + e and -1 - e <= y - x <= 1 + e):
            raise ValueError(f"({x}, {y}) is outside the hexagon")

    @classmethod
    def from_face(cls, N: int, x: float, y: float) -> "ScaledPoint":
        return cls(x / N - 1, y / N - 1)


class Classification(str, Enum):
    LIQUID = "liquid"
    FROZEN_CORNER = "frozen_corner"
    FROZEN_STAIRCASE = "frozen_staircase"
    BOUNDARY = "boundary"


Triple = tuple[float, float, float]


@dataclass(frozen=True)
class SaddleReport:
    point: ScaledPoint
    alpha: float
    classification: Classification
    s: complex | None = None
    sheet: str | None = None
    angles: tuple[float, ...] | None = None
    densities_even: Triple | None = None
    densities_odd: Triple | None = None
    corner_type: LozengeType | None = None
    real_roots: tuple[float, ...] = field(default=(), repr=False)

    @property
    def liquid(self) -> bool:
        return self.classification is Classification.LIQUID


def angles_from_s(s: complex, alpha: float) -> tuple[float, float, float, float, float, float]:
    """(phi1, phi2, phi3, psi1, psi2, psi3) of the triangles {-1, 0, s} and {-alpha, 0, s}."""
    s = complex(s.real, max(s.imag, 0.0))
    p1 = cmath.phase(s + 1)
    q1 = cmath.phase(s + alpha)
    p3 = math.pi - cmath.phase(s)
    return p1, math.pi - p1 - p3, p3, q1, math.pi - q1 - p3, p3


def _interval(v: float, a: float) -> str:
    if v < -1:
        return "I"
    if v < -a:
        return "staircase"
    if v < 0:
        return "II"
    return "III"


_PATTERN = {"I": LozengeType.TypeI, "II": LozengeType.TypeII, "III": LozengeType.TypeIII}


def _low_quadratic(xi, eta, a: float, sign: int):
    """Coefficients of (s-z+)(s-z-) - sign*[eta(s+1)(s+a) - xi s(s+(1+a)/2)]."""
    c2 = 1 - sign * (eta - xi)
    c1 = (1 + 3 * a) / 2 - sign * (1 + a) * (eta - xi / 2)
    c0 = a * (1 - sign * eta)
    return c2, c1, c0


def discriminants(xi, eta, alpha: AlphaLike):
    """(D+, D-) of the two low-regime quadratics."""
    a = _as_float(alpha)
    out = []
    for sign in (1, -1):
        c2, c1, c0 = _low_quadratic(xi, eta, a, sign)
        out.append(c1 * c1 - 4 * c2 * c0)
    return tuple(out)


def _pi_coeffs(xi, eta, a: float):
    """Coefficients (degree 4 .. 0) of Pi_alpha(s), vectorised over (xi, eta)."""
    r = math.sqrt(a)
    c = -(3 - 2 * r + 3 * a) / 8
    A = np.polymul(np.polymul([1, r], [1, r]), [1, -2 * c, a])
    b2 = eta - xi
    b1 = (1 + a) * (eta - xi / 2)
    b0 = eta * a
    B2 = [b2 * b2, 2 * b2 * b1, b1 * b1 + 2 * b2 * b0, 2 * b1 * b0, b0 * b0]
    return [A[k] - B2[k] for k in range(5)]


def _polyval(coeffs, s):
    out = coeffs[0] * np.ones_like(s)
    for c in coeffs[1:]:
        out = out * s + c
    return out


def _bisect(coeffs, lo: float, hi: float, iters: int = 80):
    """Sign-change root of the quartic on [lo, hi] (f(lo) > 0 >= f(hi)), vectorised."""
    shape = np.shape(coeffs[0])
    a = np.full(shape, lo, dtype=float)
    b = np.full(shape, hi, dtype=float)
    for _ in range(iters):
        m = 0.5 * (a + b)
        pos = _polyval(coeffs, m) > 0
        a = np.where(pos, m, a)
        b = np.where(pos, b, m)
    return 0.5 * (a + b)


def high_reduced_quadratic(xi, eta, alpha: AlphaLike):
    """Split Pi_alpha into the two guaranteed real roots and a quadratic factor.

    Returns (r1, r2, q2, q1, q0): r1 in [-1, -sqrt(a)], r2 in [-sqrt(a), -a]
    and q2 s^2 + q1 s + q0 = Pi_alpha(s) / ((s - r1)(s - r2)).
    """
    a = _as_float(alpha)
    r = math.sqrt(a)
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    co = [np.broadcast_to(np.asarray(c, dtype=float), np.broadcast(xi, eta).shape) for c in _pi_coeffs(xi, eta, a)]
    r1 = _bisect(co, -1.0, -r)
    # Pi > 0 at -a, Pi <= 0 at -sqrt(a): search from the right
    neg = [-c for c in co]
    r2 = _bisect(neg, -r, -a) if a < 1 else np.full_like(r1, -1.0)
    p = -(r1 + r2)
    q = r1 * r2
    q2 = co[0]
    q1 = co[1] - p * q2
    q0 = co[2] - p * q1 - q * q2
    return r1, r2, q2, q1, q0


def arctic_field(xi, eta, alpha: AlphaLike):
    """Negative exactly on the liquid region (vectorised)."""
    reg = regime(alpha)
    if reg is Regime.HIGH:
        _, _, q2, q1, q0 = high_reduced_quadratic(xi, eta, alpha)
        return q1 * q1 - 4 * q2 * q0
    dp, dm = discriminants(np.asarray(xi, dtype=float), np.asarray(eta, dtype=float), alpha)
    return np.minimum(dp, dm)


def _quadratic_roots(c2: float, c1: float, c0: float) -> tuple[complex, complex]:
    if abs(c2) < 1e-14:
        root = -c0 / c1 if c1 else -math.inf
        return complex(root), complex(math.inf)
    d = c1 * c1 - 4 * c2 * c0
    sq = cmath.sqrt(d)
    return (-c1 + sq) / (2 * c2), (-c1 - sq) / (2 * c2)


def _newton_quartic(coeffs, s: complex, steps: int = 2) -> complex:
    dco = [4 * coeffs[0], 3 * coeffs[1], 2 * coeffs[2], coeffs[3]]
    for _ in range(steps):
        d = _polyval(dco, s)
        if d == 0:
            break
        step = _polyval(coeffs, s) / d
        if not np.isfinite(step) or abs(step) > 1e-3 * (1 + abs(s)):
            break
        s = s - step
    return complex(s)


def xi_equation_residual(s: complex, p: ScaledPoint, alpha: AlphaLike, sheet: str) -> complex:
    a = _as_float(alpha)
    return complex(q_sqrt(s, alpha, sheet)) + 0.5 * p.xi * (1 / (s + 1) + 1 / (s + a)) - p.eta / s


def saddle(p: ScaledPoint, alpha: AlphaLike, band: float = BOUNDARY_BAND) -> SaddleReport:
    """Saddle point s(xi, eta; alpha) and the phase it implies."""
    if not isinstance(p, ScaledPoint):
        p = ScaledPoint(*p)
    a = _as_float(alpha)
    reg = regime(alpha)
    xi, eta = p.xi, p.eta
    candidates: list[tuple[complex, str]] = []
    real_pairs: list[tuple[complex, complex, float]] = []
    if reg is Regime.HIGH:
        r1, r2, q2, q1, q0 = (float(v) for v in high_reduced_quadratic(xi, eta, alpha))
        u, v = _quadratic_roots(q2, q1, q0)
        co = _pi_coeffs(xi, eta, a)
        if u.imag or v.imag:
            s = u if u.imag > 0 else v
            s = _newton_quartic(co, s)
            s = complex(s.real, abs(s.imag))
            sheet = min(("plus", "minus"), key=lambda sh: abs(xi_equation_residual(s, p, alpha, sh)))
            candidates.append((s, sheet))
        else:
            real_pairs.append((u, v, abs(u - v) / 2))
        fixed = (r1, r2)
    else:
        fixed = ()
        for sign, sheet in ((1, "plus"), (-1, "minus")):
            u, v = _quadratic_roots(*_low_quadratic(xi, eta, a, sign))
            if u.imag or v.imag:
                candidates.append((u if u.imag > 0 else v, sheet))
            else:
                real_pairs.append((u, v, abs(u - v) / 2))
    if candidates:
        s, sheet = candidates[0]
        if s.imag >= band:
            ang = angles_from_s(s, a)
            return SaddleReport(
                p, a, Classification.LIQUID, s, sheet, ang,
                (ang[3] / np.pi, ang[4] / np.pi, ang[5] / np.pi),
                (ang[0] / np.pi, ang[1] / np.pi, ang[2] / np.pi),
                real_roots=fixed,
            )
        return _boundary(p, a, complex(s.real, 0.0), sheet, fixed)
    near = min(real_pairs, key=lambda t: t[2])
    if near[2] < band:
        return _boundary(p, a, complex(0.5 * (near[0] + near[1]).real, 0.0), None, fixed)
    kinds = [_interval(min(u.real, v.real) if math.isfinite(u.real) else v.real, a) for u, v, _ in real_pairs]
    corners = [k for k in kinds if k != "staircase"]
    roots = fixed + tuple(x.real for u, v, _ in real_pairs for x in (u, v))
    if not corners:
        return SaddleReport(
            p, a, Classification.FROZEN_STAIRCASE, densities_even=(1.0, 0.0, 0.0), densities_odd=(0.0, 1.0, 0.0), real_roots=roots
        )
    if len(set(corners)) > 1:
        # both quadratics off the staircase interval: trust the closer collision
        idx = min((i for i, k in enumerate(kinds) if k != "staircase"), key=lambda i: real_pairs[i][2])
        corners = [kinds[idx]]
    t = _PATTERN[corners[0]]
    e = tuple(float(i == t) for i in range(3))
    return SaddleReport(p, a, Classification.FROZEN_CORNER, densities_even=e, densities_odd=e, corner_type=t, real_roots=roots)


def _boundary(p: ScaledPoint, a: float, s: complex, sheet: str | None, roots) -> SaddleReport:
    ang = angles_from_s(s, a)
    return SaddleReport(
        p, a, Classification.BOUNDARY, s, sheet, ang,
        (ang[3] / np.pi, ang[4] / np.pi, ang[5] / np.pi),
        (ang[0] / np.pi, ang[1] / np.pi, ang[2] / np.pi),
        real_roots=tuple(roots),
    )


def limiting_densities(report: SaddleReport) -> tuple[Triple, Triple]:
    """(even-column, odd-column) limiting densities of types I, II, III."""
    if not report.liquid:
        raise ValueError(f"limiting densities need a liquid point, got {report.classification.value}")
    return report.densities_even, report.densities_odd


def phase_densities(report: SaddleReport) -> tuple[Triple, Triple]:
    """Like ``limiting_densities`` but also returns the frozen and boundary patterns."""
    return report.densities_even, report.densities_odd


def inverse_map(s: complex, alpha: AlphaLike, sheet: str) -> tuple[float, float]:
    """(xi, eta) whose saddle is s on the given sheet, from the 2x2 real system."""
    a = _as_float(alpha)
    m = -s / (2 * (s + 1)) - s / (2 * (s + a))
    rhs = s * complex(q_sqrt(s, alpha, sheet))
    # [[Re m, 1], [Im m, 0]] (xi, eta)^T = (Re rhs, Im rhs)^T
    xi = rhs.imag / m.imag
    eta = rhs.real - m.real * xi
    return xi, eta


# arctic curve


def xi_cusp(alpha: AlphaLike) -> float:
    """Horizontal coordinate of the cusp E1, for 1/9 <= alpha <= 1."""
    if regime(alpha) is Regime.LOW:
        raise ValueError("cusps exist only for alpha >= 1/9")
    a = parse_alpha(alpha)
    if isinstance(a, Fraction):
        rn, rd = math.isqrt(a.numerator), math.isqrt(a.denominator)
        if rn * rn == a.numerator and rd * rd == a.denominator:
            r = Fraction(rn, rd)
            return math.sqrt(Fraction(5, 2) - Fraction(3, 4) * (r + 1 / r))
    r = math.sqrt(float(a))
    return math.sqrt(max(0.0, 2.5 - 0.75 * (r + 1 / r)))


def tangency_points(alpha: AlphaLike) -> dict[str, tuple[float, float]]:
    a = _as_float(alpha)
    if regime(alpha) is Regime.HIGH:
        r = math.sqrt(a)
        k = 3 * (1 - r) / (4 * (1 + r))
        m = 3 * r / (2 * (1 + a))
        base = {"A": (-1.0, -0.5 + k), "B": (1.0, 0.5 + k), "C": (1.25 - m, 1.0), "D": (-1.25 + m, -0.25 + m)}
    else:
        base = {
            "A": (-1.0, -a / (1 - a)),
            "B": (1.0, (1 - 2 * a) / (1 - a)),
            "C": ((1 - a) / (1 + a), 1.0),
            "D": (-(1 - a) / (1 + a), 2 * a / (1 + a)),
        }
    out = {}
    for k, (x, y) in base.items():
        out[f"{k}1"] = (x, y)
        out[f"{k}2"] = (-x, -y)
    return out


def in_hexagon(xi, eta, eps: float = 0.0):
    xi = np.asarray(xi)
    eta = np.asarray(eta)
    lim = 1 + eps
    return (np.abs(xi) <= lim) & (np.abs(eta) <= lim) & (np.abs(eta - xi) <= lim)


@dataclass
class ArcticGeometry:
    alpha: float
    regime: Regime
    boundary: list[np.ndarray]
    tangency: dict[str, tuple[float, float]]
    cusps: list[tuple[float, float]]
    grid: np.ndarray = field(repr=False)
    field: np.ndarray = field(repr=False)

    @property
    def liquid_mask(self) -> np.ndarray:
        return self.field < 0

    def components(self) -> int:
        from scipy import ndimage

        return int(ndimage.label(self.liquid_mask)[1])

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "regime": self.regime.value,
            "boundary": [[[float(x), float(y)] for x, y in line] for line in self.boundary],
            "tangency": {k: [float(v[0]), float(v[1])] for k, v in self.tangency.items()},
            "cusps": [[float(x), float(y)] for x, y in self.cusps],
        }


def _project_to_zero(pts: np.ndarray, alpha: AlphaLike, h: float, steps: int = 4) -> np.ndarray:
    """Newton steps along the field gradient, moving each vertex at most h."""
    p = pts.copy()
    d = 1e-7
    for _ in range(steps):
        x, y = p[:, 0], p[:, 1]
        f = arctic_field(x, y, alpha)
        gx = (arctic_field(x + d, y, alpha) - arctic_field(x - d, y, alpha)) / (2 * d)
        gy = (arctic_field(x, y + d, alpha) - arctic_field(x, y - d, alpha)) / (2 * d)
        n2 = gx * gx + gy * gy
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.column_stack([gx, gy]) * (f / n2)[:, None]
        step = np.nan_to_num(step)
        todo = n2 > 0
        for _ in range(8):
            q = p - step
            ok = todo & (np.linalg.norm(q - pts, axis=1) <= h) & in_hexagon(q[:, 0], q[:, 1], 1e-12)
            p = np.where(ok[:, None], q, p)
            todo &= ~ok
            step = 0.5 * step
    return p


def arctic_geometry(alpha: AlphaLike, resolution: int = 200) -> ArcticGeometry:
    """Liquid-region boundary traced as the zero level of ``arctic_field``.

    The field is sampled on a resolution x resolution grid over [-1, 1]^2
    and set positive outside the hexagon; polylines come from marching
    squares.
    """
    from skimage import measure

    if resolution < 3:
        raise ValueError("resolution must be >= 3")
    a = _as_float(alpha)
    ax = np.linspace(-1.0, 1.0, resolution)
    XI, ETA = np.meshgrid(ax, ax, indexing="ij")
    F = np.asarray(arctic_field(XI, ETA, alpha), dtype=float)
    F = np.where(in_hexagon(XI, ETA), F, 1.0)
    h = ax[1] - ax[0]
    lines = [np.column_stack([-1 + c[:, 0] * h, -1 + c[:, 1] * h]) for c in measure.find_contours(F, 0.0)]
    lines = [_project_to_zero(line, alpha, h) for line in lines]
    reg = regime(alpha)
    cusps = []
    if reg is Regime.HIGH and a < 1:
        xc = xi_cusp(alpha)
        cusps = [(xc, xc / 2), (-xc, -xc / 2)]
    return ArcticGeometry(a, reg, lines, tangency_points(alpha), cusps, np.stack([XI, ETA]), F)


# bulk kernel


def local_kernel(u1: int, v1: int, u2: int, v2: int, s: complex, alpha: AlphaLike) -> complex:
    """Limiting bulk kernel at saddle s, integrating from conj(s) to s.

    The path runs through |s| when u1 <= u2 and through -|s| otherwise.
    """
    s = complex(s)
    if s.imag <= 0:
        raise ValueError("s must lie in the open upper half-plane")
    a = _as_float(alpha)
    A = u1 // 2 - u2 // 2
    B = (u1 + 1) // 2 - (u2 + 1) // 2
    e = v1 - v2 + 1

    def f(z):
        return (z + 1) ** A * (z + a) ** B / z**e

    mid = complex(abs(s) if u1 <= u2 else -abs(s), 0.0)
    total = _segment(f, s.conjugate(), mid) + _segment(f, mid, s)
    return total / (2j * np.pi)
