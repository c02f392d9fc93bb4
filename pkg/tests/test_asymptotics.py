import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hexatile import asymptotics as A
from hexatile.asymptotics import Classification, Regime, ScaledPoint
from hexatile.lattice import LozengeType

W = cmath.exp(2j * math.pi / 3)


def liquid_points(alpha, count, seed=0, cond=None):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        xi, eta = rng.uniform(-1, 1, 2)
        if not A.in_hexagon(xi, eta) or (cond and not cond(xi, eta)):
            continue
        rep = A.saddle(ScaledPoint(xi, eta), alpha)
        if rep.liquid and rep.s.imag > 1e-3:
            out.append(rep)
    return out


def test_regimes_exact():
    assert A.regime(Fraction(1, 9)) is Regime.CRITICAL
    assert A.regime(Fraction(1, 10)) is Regime.LOW
    assert A.regime(Fraction(1, 8)) is Regime.HIGH
    assert A.regime(1) is Regime.HIGH


def test_equilibrium_anchors():
    e = A.equilibrium_data(1)
    assert abs(e.z_plus - W) < 1e-15 and abs(e.z_minus - W.conjugate()) < 1e-15
    assert e.theta == pytest.approx(2 * math.pi / 3, abs=1e-15)
    c = A.equilibrium_data(Fraction(1, 9))
    assert c.z_plus == c.z_minus == pytest.approx(-1 / 3, abs=1e-15)
    low = A.equilibrium_data(Fraction(1, 16))
    assert low.z_plus.real == pytest.approx((-19 + math.sqrt(105)) / 64, abs=1e-15)
    assert low.z_minus.real == pytest.approx((-19 - math.sqrt(105)) / 64, abs=1e-15)
    assert (low.z_plus * low.z_minus).real == pytest.approx(1 / 16, abs=1e-15)


@given(st.floats(1 / 9 + 1e-6, 1.0))
def test_high_branch_points_on_circle(a):
    e = A.equilibrium_data(a)
    assert abs(e.z_plus) == pytest.approx(math.sqrt(a), rel=1e-12)
    assert 2 * math.pi / 3 - 1e-12 <= e.theta <= math.pi


@given(st.floats(1e-3, 1 / 9 - 1e-6))
def test_low_branch_points_ordering(a):
    e = A.equilibrium_data(a)
    zp, zm = e.z_plus.real, e.z_minus.real
    assert zp * zm == pytest.approx(a, rel=1e-12)
    assert -0.5 < zm < -math.sqrt(a) < zp < -a


def test_regime_continuity():
    lo = A._equilibrium(1 / 9, Regime.LOW)
    hi = A._equilibrium(1 / 9, Regime.HIGH)
    assert abs(lo.z_plus - hi.z_plus) < 1e-7


def test_q_alpha_values():
    assert A.q_alpha(1.0, 1) == pytest.approx(0.75, abs=1e-15)
    assert abs(A.q_alpha(-1 / 3, Fraction(1, 9))) < 1e-15
    with pytest.raises(ValueError):
        A.q_alpha(0.0, Fraction(1, 2))


@pytest.mark.parametrize("a", [0.2, Fraction(1, 4), 0.5, 1])
def test_residues_high(a):
    r = A.residues(a)
    assert abs(r["0"] + 1) < 1e-8 and abs(r["-1"] - 0.5) < 1e-8 and abs(r["-alpha"] - 0.5) < 1e-8


@pytest.mark.parametrize("a", [Fraction(1, 16), 0.05])
def test_residues_low(a):
    r = A.residues(a)
    assert abs(r["0"] - 1) < 1e-8 and abs(r["-1"] - 0.5) < 1e-8 and abs(r["-alpha"] + 0.5) < 1e-8
    # rational here and ~ 1/z at infinity, so the finite residues add up to 1
    assert abs(sum(r.values()) - 1) < 1e-8


def test_q_sqrt_at_infinity():
    for a in (Fraction(1, 16), 0.5):
        z = 1e6 + 1e6j
        assert abs(z * A.q_sqrt(z, a) - 1) < 1e-5


@pytest.mark.parametrize("a", [0.05, Fraction(1, 9), 0.3, 1])
def test_mu0_total_mass(a):
    assert abs(A.mu0_integral(lambda s, t: np.ones_like(t), a) - 1) < 1e-10


@pytest.mark.parametrize("a", [0.05, 0.3, 1])
def test_mu0_nonnegative(a):
    th = A.equilibrium_data(a).theta
    t = np.linspace(-th, th, 401)
    assert np.all(A.mu0_density(t, a) >= -1e-14)


def test_mu0_square_root_edge():
    a = 0.3
    th = A.equilibrium_data(a).theta
    d = np.array([1e-4, 4e-4])
    v = A.mu0_density(th - d, a)
    assert v[1] / v[0] == pytest.approx(2.0, rel=1e-2)
    with pytest.raises(ValueError):
        A.mu0_density(th + 0.01, a)


@pytest.mark.parametrize("a", [0.05, Fraction(1, 9), 0.3, 1])
def test_phi_g_identity(a):
    rng = np.random.default_rng(7)
    ell = A.equilibrium_data(a).ell
    done = 0
    while done < 20:
        z = complex(*rng.uniform(-2, 2, 2))
        if abs(z.imag) < 0.05 or abs(abs(z) - math.sqrt(float(a))) < 0.05:
            continue
        g, phi = A.g_phi_eval(z, a)
        assert abs(phi - (g - A.potential(z, a) / 2 + ell / 2)) < 1e-8
        done += 1


def test_g_log_asymptotics():
    for a in (0.05, 0.5):
        z = 1e6 * cmath.exp(0.7j)
        assert abs(A.g_function(z, a) - cmath.log(z)) < 1e-5


@pytest.mark.parametrize("z", [1.5 + 0.5j, -0.3 + 1.2j, 2.0 - 1.0j])
def test_g_prime_high(z):
    a = 0.5
    h = 1e-3
    d = five_point(lambda u: A.g_function(u, a), z, h)
    vp = 2 / z - 1 / (z + 1) - 1 / (z + a)
    assert abs(d - (vp / 2 + A.q_sqrt(z, a))) < 1e-6


def test_phi_rejects_cut():
    with pytest.raises(ValueError):
        A.phi_function(-0.5, 0.5)


def five_point(f, z, h=1e-3):
    return (-f(z + 2 * h) + 8 * f(z + h) - 8 * f(z - h) + f(z - 2 * h)) / (12 * h)


@pytest.mark.parametrize("a", [Fraction(1, 16), 0.5])
def test_phase_saddle_stationary(a):
    for rep in liquid_points(a, 20, seed=3, cond=lambda x, y: y <= x / 2 < 0):
        assert abs(A.phase_Phi_prime(rep.s, rep.point.xi, rep.point.eta, a)) < 1e-8


@pytest.mark.parametrize("a", [Fraction(1, 16), 0.5])
def test_phase_derivative_matches_difference(a):
    # quadrature tolerance 1e-10 over h = 1e-3 limits the difference quotient to about 1e-7
    checked = 0
    for rep in liquid_points(a, 8, seed=6, cond=lambda x, y: y <= x / 2 < 0):
        xi, eta, s = rep.point.xi, rep.point.eta, rep.s
        if min(s.imag, abs(abs(s) - math.sqrt(float(a)))) < 0.01:
            continue
        for z in (s, s + 0.003 + 0.002j):
            d = five_point(lambda u: A.phase_Phi(u, xi, eta, a), z)
            assert abs(d - A.phase_Phi_prime(z, xi, eta, a)) < 1e-6
            checked += 1
    assert checked >= 6


def test_phi_psi_relation():
    a = 0.4
    for z in (1.2 + 0.3j, -0.2 + 0.9j):
        for xi, eta in ((0.3, 0.1), (-0.5, -0.2)):
            assert abs(A.phase_Phi(z, xi, eta, a) + A.phase_Psi(z, -xi, -eta, a)) < 1e-12


def test_phase_blows_up_at_zero():
    vals = [A.phase_Phi(x, 0.2, -0.3, 0.5).real for x in (1e-2, 1e-4, 1e-6)]
    assert vals[0] < vals[1] < vals[2] and vals[2] > 5


def test_uniform_center():
    rep = A.saddle(ScaledPoint(0, 0), 1)
    assert rep.liquid and abs(rep.s - W) < 1e-12
    for tri in A.limiting_densities(rep):
        assert np.allclose(tri, [1 / 3] * 3, atol=1e-12)
    assert np.allclose(rep.angles, [math.pi / 3] * 6, atol=1e-12)


def test_low_center_frozen():
    a = 1 / 16
    dp, dm = A.discriminants(0.0, 0.0, a)
    assert dp == pytest.approx((9 * a - 1) * (a - 1) / 4, abs=1e-15) and dp > 0 and dm > 0
    rep = A.saddle(ScaledPoint(0, 0), a)
    assert rep.classification is Classification.FROZEN_STAIRCASE
    even, odd = A.phase_densities(rep)
    assert even == (1.0, 0.0, 0.0) and odd == (0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        A.limiting_densities(rep)


def test_corner_frozen():
    rep = A.saddle(ScaledPoint(-0.95, 0.0), 0.5)
    assert rep.classification is Classification.FROZEN_CORNER
    assert rep.corner_type in LozengeType


@pytest.mark.parametrize("a", [Fraction(1, 16), Fraction(1, 9), 0.25, 0.7, 1])
def test_angles_and_densities(a):
    for rep in liquid_points(a, 15, seed=1):
        p1, p2, p3, q1, q2, q3 = rep.angles
        assert p1 + p2 + p3 == pytest.approx(math.pi, abs=1e-12)
        assert q1 + q2 + q3 == pytest.approx(math.pi, abs=1e-12)
        assert p3 == q3
        for tri in A.limiting_densities(rep):
            assert sum(tri) == pytest.approx(1, abs=1e-12)
            assert all(-1e-15 <= v <= 1 + 1e-15 for v in tri)


@pytest.mark.parametrize("a", [Fraction(1, 16), 0.25, 1])
def test_saddle_symmetries(a):
    a_f = float(a)
    for rep in liquid_points(a, 50, seed=2):
        xi, eta = rep.point.xi, rep.point.eta
        r1 = A.saddle(ScaledPoint(-xi, -eta), a)
        assert r1.liquid and abs(r1.s - rep.s) < 1e-8
        assert np.allclose(r1.densities_even, rep.densities_even, atol=1e-8)
        r2 = A.saddle(ScaledPoint(xi, xi - eta), a)
        assert r2.liquid and abs(r2.s - a_f / rep.s.conjugate()) < 1e-8


@pytest.mark.parametrize("a", [Fraction(1, 16), 0.25, 0.6, 1])
def test_inverse_maps(a):
    for rep in liquid_points(a, 30, seed=4):
        xi, eta = A.inverse_map(rep.s, a, rep.sheet)
        assert abs(xi - rep.point.xi) < 1e-8 and abs(eta - rep.point.eta) < 1e-8


@pytest.mark.parametrize("a", [0.2, 0.25, 0.6, 0.95])
def test_quartic_structure(a):
    r = math.sqrt(a)
    rng = np.random.default_rng(5)
    for _ in range(100):
        xi, eta = rng.uniform(-1, 1, 2)
        if not A.in_hexagon(xi, eta):
            continue
        co = A._pi_coeffs(xi, eta, a)
        assert A._polyval(co, -r) == pytest.approx(-a * (1 - r) ** 4 * (xi / 2 - eta) ** 2, abs=1e-12)
        roots = np.roots(co)
        upper = [z for z in roots if z.imag > 1e-10 * (1 + abs(z))]
        assert len(upper) <= 1
        rep = A.saddle(ScaledPoint(xi, eta), a)
        if rep.liquid:
            assert len(upper) == 1
        real = [z.real for z in roots if abs(z.imag) <= 1e-10 * (1 + abs(z))]
        assert sum(1 for v in real if -1 - 1e-12 <= v <= -a + 1e-12) >= 2


def test_uniform_quartic_double_root():
    for xi, eta in ((0.1, 0.3), (-0.4, 0.2)):
        co = A._pi_coeffs(xi, eta, 1.0)
        d = np.polyder(np.array(co))
        assert abs(A._polyval(co, -1.0)) < 1e-14 and abs(np.polyval(d, -1.0)) < 1e-14


def test_uniform_field_is_ellipse():
    xi, eta = np.meshgrid(np.linspace(-1, 1, 21), np.linspace(-1, 1, 21))
    f = A.arctic_field(xi, eta, 1)
    assert np.allclose(f, 4 * xi**2 - 4 * xi * eta + 4 * eta**2 - 3, atol=1e-12)


def test_uniform_ellipse_points_are_boundary():
    for t in np.linspace(0, 2 * math.pi, 12, endpoint=False):
        # 4 xi^2 - 4 xi eta + 4 eta^2 = 3 parametrised along its axes
        u, v = math.sqrt(3 / 2) * math.cos(t), math.sqrt(1 / 2) * math.sin(t)
        xi, eta = (u + v) / math.sqrt(2), (u - v) / math.sqrt(2)
        if not A.in_hexagon(xi, eta):
            continue
        rep = A.saddle(ScaledPoint(xi, eta), 1)
        assert not rep.liquid or rep.s.imag < 1e-6


def test_cusps():
    assert A.xi_cusp(Fraction(1, 9)) == 0
    assert A.xi_cusp(1) == 1
    assert A.xi_cusp(Fraction(1, 4)) == pytest.approx(math.sqrt(5 / 8), abs=1e-15)
    with pytest.raises(ValueError):
        A.xi_cusp(0.05)


def test_tangency_points():
    t = A.tangency_points(Fraction(1, 16))
    assert t["C1"] == pytest.approx((15 / 17, 1.0))
    for a in (0.05, 0.3, 1):
        t = A.tangency_points(a)
        for k in "ABCD":
            p, q = t[k + "1"], t[k + "2"]
            assert p == pytest.approx((-q[0], -q[1]))
            xi, eta = p
            on_edge = min(abs(abs(xi) - 1), abs(abs(eta) - 1), abs(abs(eta - xi) - 1))
            assert on_edge < 1e-12


def test_uniform_tangency_on_ellipse():
    for xi, eta in A.tangency_points(1).values():
        assert 4 * xi * xi - 4 * xi * eta + 4 * eta * eta == pytest.approx(3, abs=1e-12)


@pytest.mark.parametrize("a,count", [(Fraction(1, 16), 2), (Fraction(1, 4), 1), (1, 1)])
def test_component_counts(a, count):
    assert A.arctic_geometry(a, 200).components() == count


def test_geometry_json_and_symmetry():
    g = A.arctic_geometry(0.3, 120)
    obj = g.to_json()
    assert set(obj) == {"alpha", "regime", "boundary", "tangency", "cusps"}
    pts = np.concatenate(g.boundary)
    flipped = -pts
    d = np.min(np.linalg.norm(pts[:, None, :] - flipped[None, ::7, :], axis=2), axis=0)
    assert d.max() < 0.03
    for xc, yc in g.cusps:
        assert yc == pytest.approx(xc / 2)


def test_uniform_contour_hausdorff():
    g = A.arctic_geometry(1, 400)
    pts = np.concatenate(g.boundary)
    r = 4 * pts[:, 0] ** 2 - 4 * pts[:, 0] * pts[:, 1] + 4 * pts[:, 1] ** 2
    assert np.abs(np.sqrt(r / 3) - 1).max() < 1e-3


def test_local_kernel_diagonal():
    for a in (0.25, 1.0):
        for s in (W, 0.3 + 0.4j, -0.6 + 0.2j):
            for u in (0, 1):
                v = A.local_kernel(u, 2, u, 2, s, a)
                assert abs(v - cmath.phase(s) / math.pi) < 1e-12


def test_local_kernel_translation():
    s, a = -0.2 + 0.5j, 0.5
    assert abs(A.local_kernel(1, 3, 1, 1, s, a) - A.local_kernel(1, 5, 1, 3, s, a)) < 1e-13
    with pytest.raises(ValueError):
        A.local_kernel(0, 0, 0, 0, 0.5, a)
