import math

import numpy as np
import pytest
from scipy import integrate, special

from levygof import asym
from levygof.asym import (
    QuadratureConfig,
    cov_kernel,
    kl_curvature,
    kl_integrals,
    levy_expectation,
    mean_power_m52,
    phi_I,
    proj_psi,
    proj_zeta,
    sigma_0ab,
    sigma_R2,
    sigma_T2,
    sup_A,
    sup_sigma2,
)
from levygof.dist import Alternative, levy_cdf, levy_pdf, parse_alternative
from levygof.errors import DomainError, QuadratureError
from levygof.stats import StatisticSpec, kernel_Z

G2 = Alternative("g2")


def _log_erfc(z):
    # log erfc(z) without underflow: erfc(z) = 2 Phi(-sqrt(2) z)
    return math.log(2.0) + float(special.log_ndtr(-math.sqrt(2.0) * z))


def _gauss_rule(panels, order, zmax):
    gx, gw = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, zmax, panels + 1)
    z = np.concatenate([0.5 * (b - a) * gx + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    w = np.concatenate([0.5 * (b - a) * gw for a, b in zip(edges[:-1], edges[1:])])
    return z, w


# -- expectations -------------------------------------------------------------------


def test_levy_expectation_examples():
    assert levy_expectation(lambda x: 1.0 / x) == pytest.approx(1.0, abs=1e-10)
    assert levy_expectation(lambda x: float(x <= 1.0)) == pytest.approx(math.erfc(1 / math.sqrt(2)), abs=1e-8)
    assert levy_expectation(lambda x: float(levy_cdf(x))) == pytest.approx(0.5, abs=1e-10)


def test_levy_expectation_reports_failure():
    with pytest.raises(QuadratureError) as info:
        levy_expectation(lambda x: math.sin(1e4 * x), QuadratureConfig(1e-14, 1e-14, 5))
    assert math.isfinite(info.value.abserr)


def test_quadrature_config_validation():
    with pytest.raises(DomainError):
        QuadratureConfig(abs_tol=0.0)


@pytest.mark.parametrize("c", [1e-3, 0.01, 0.049, 0.05, 0.3, 1.0, 17.0, 9999.0, 1e4 + 1, 1e7])
def test_mean_power_m52(c):
    ref = integrate.quad(lambda x: (c + x) ** -2.5 * float(levy_pdf(x)), 0, np.inf, epsabs=0, epsrel=1e-12, limit=500)[0]
    assert mean_power_m52(c) == pytest.approx(ref, rel=1e-9)


# -- J --------------------------------------------------------------------------------


@pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
def test_psi_is_centred(t):
    assert abs(levy_expectation(lambda x: proj_psi(x, t, 1.0))) < 1e-8


def test_psi_vanishes_at_one():
    assert abs(proj_psi(2.0, 1 - 1e-12, 1.0)) < 1e-15


def test_K_is_four_psi_squared():
    t = 0.5
    assert 4 * levy_expectation(lambda x: proj_psi(x, t, 1.0) ** 2) == pytest.approx(cov_kernel(t, t), abs=1e-6)
    s = 0.2
    assert 4 * levy_expectation(lambda x: proj_psi(x, s, 2.0) * proj_psi(x, t, 2.0)) == pytest.approx(
        cov_kernel(s, t, 2.0), rel=1e-8
    )


def test_K_symmetric_nonnegative_psd():
    rng = np.random.default_rng(0)
    s, t = rng.uniform(0.01, 0.99, (2, 50))
    assert np.array_equal(cov_kernel(s, t), cov_kernel(t, s))
    grid = np.linspace(0.005, 0.995, 100)
    assert np.all(cov_kernel(grid, grid) >= 0)
    for si, ti in zip(s, t):
        m = np.array([[cov_kernel(si, si), cov_kernel(si, ti)], [cov_kernel(ti, si), cov_kernel(ti, ti)]])
        assert np.linalg.eigvalsh(m).min() >= -1e-10


@pytest.mark.parametrize("t", [0.3, 0.7])
def test_K_matches_triple_integral(t):
    # the printed three-fold integral, evaluated on a tensor Gauss rule in
    # u = x^-1/2 for each variable; its prefactor is 1/16 of 4 E[psi^2]
    u, w = _gauss_rule(24, 30, 12.0)
    x = 1.0 / u**2
    wx = w * 2.0 / u**3  # dx = 2 u^-3 du
    f = np.sqrt(1 / (2 * np.pi)) * np.exp(-0.5 * u**2) * u**3  # f0(1/u^2)
    m = wx * f
    L = -math.log(t)
    tx = np.exp(-L * x)
    txq = np.exp(-L * x / 4)
    # Psi(x, y; t) = -2 t^((x+y)/4) + t^y + t^x on the (x, y) grid
    psi = -2.0 * txq[:, None] * txq[None, :] + tx[None, :] + tx[:, None]
    triple = np.einsum("i,j,k,ij,ik->", m, m, m, psi, psi, optimize=True)
    printed = (t**2 / 4) * L**3 * triple / 4.0  # the 8 sqrt2 pi^1.5 denominator is 4 (2 pi)^1.5
    assert 16.0 * printed == pytest.approx(cov_kernel(t, t), rel=1e-4)


def test_sigma2_printed_closed_form():
    # sigma^2(t) for a = 1 as printed next to its supremum
    def printed(t):
        lg = math.log(t)
        e = math.exp
        s = math.sqrt
        return -(t**2) * (
            -4 * e(-(2 * s(-math.log(t**1.25)) + s(-lg)) / s(2))
            + 4 * e(-(s(-math.log(t**2)) + 2 * s(-lg)) / s(2))
            + e(-s(-2 * math.log(t**2)))
            - e(-2 * s(-2 * lg))
        ) * lg**3

    for t in (0.05, 0.325, 0.6, 0.95):
        assert cov_kernel(t, t) == pytest.approx(printed(t), rel=1e-12)


def test_sup_sigma2():
    t, v = sup_sigma2(1.0)
    assert v == pytest.approx(0.00388889, rel=5e-3)
    assert 0.2 < t < 0.45


def test_sup_A_g2():
    t, v = sup_A(1.0, G2)
    assert v == pytest.approx(1.49667e-5, rel=5e-3)


def test_A_printed_integrand():
    t = 0.29
    L = -math.log(t)

    def integrand(y):
        g = (_log_erfc(1 / (math.sqrt(2) * math.sqrt(y))) + 1) * math.exp(-math.sqrt(2 * L) - 1 / (2 * y))
        k = -2 * t ** (y / 4) * math.exp(math.sqrt(L / 2)) + t**y * math.exp(math.sqrt(2 * L)) + 1
        return t * L**1.5 * g * k / (2 * math.sqrt(2 * math.pi) * y**1.5)

    ref = sum(integrate.quad(integrand, lo, hi, limit=400, epsabs=1e-14)[0] for lo, hi in [(0, 1), (1, 100), (100, np.inf)])
    assert asym.J_numerator(t, 1.0, G2) == pytest.approx(ref, rel=1e-6)


# -- R --------------------------------------------------------------------------------


@pytest.mark.parametrize("x,a", [(0.5, 1.0), (2.0, 0.5), (10.0, 2.0)])
def test_zeta_matches_kernel_expectation(x, a):
    brute = levy_expectation(lambda y: float(kernel_Z(x, y, a)), QuadratureConfig(1e-13, 1e-11))
    assert proj_zeta(x, a) == pytest.approx(brute, abs=1e-7)


def test_zeta_centred_and_variance():
    assert abs(levy_expectation(lambda x: proj_zeta(x, 1.0))) < 1e-8
    assert 4 * levy_expectation(lambda x: proj_zeta(x, 1.0) ** 2) == pytest.approx(0.02068868, abs=1e-6)


@pytest.mark.parametrize(
    "a,ref", [(0.2, 4.58804), (0.5, 0.2672024), (1.0, 0.02068868), (2.0, 0.001194688), (5.0, 1.925016e-5)]
)
def test_sigma_R2_table(a, ref):
    assert sigma_R2(a) == pytest.approx(ref, rel=1e-4)


def test_asymptotic_critical_value():
    assert asym.asymptotic_critical_value(1.0) == pytest.approx(1.959964 * math.sqrt(sigma_R2(1.0)), rel=1e-6)
    with pytest.raises(DomainError):
        asym.asymptotic_critical_value(1.0, 1.5)


# -- Ibar ------------------------------------------------------------------------------


def test_sigma_T2():
    assert sigma_T2() == pytest.approx(0.0235051, rel=1e-3)
    assert sigma_0ab(1.0, 1.0) == pytest.approx(sigma_T2(), rel=1e-12)


def test_phi_mean_and_range():
    m = levy_expectation(lambda x: phi_I(x, 1.0, 1.0, QuadratureConfig(1e-12, 1e-10)))
    assert m == pytest.approx(1.5, abs=1e-6)
    for x in (1e-3, 0.3, 2.0, 50.0, 1e5):
        assert 0.0 <= phi_I(x) <= 3.0


def test_phi_fixed_rule_agrees_with_adaptive():
    from levygof.asym import _phi_I_fixed

    xs = np.array([0.05, 0.7, 3.0, 40.0])
    np.testing.assert_allclose(_phi_I_fixed(xs, 2.0, 3.0), [phi_I(x, 2.0, 3.0) for x in xs], atol=1e-9)


@pytest.mark.parametrize(
    "a,b,ref",
    [(1, 2, 0.022621), (1, 10, 0.0158373), (3, 10, 0.0209729), (4, 5, 0.0234113), (2, 7, 0.0207807), (9, 10, 0.0234842)],
)
def test_sigma_0ab_table(a, b, ref):
    assert sigma_0ab(a, b) == pytest.approx(ref, rel=2e-3)


def test_sigma_0ab_symmetry_and_ratio():
    assert sigma_0ab(2.0, 5.0) == pytest.approx(sigma_0ab(5.0, 2.0), abs=1e-8)
    assert sigma_0ab(2.0, 4.0) == pytest.approx(sigma_0ab(5.0, 10.0), abs=1e-8)


# -- KL and efficiencies ------------------------------------------------------------------


def test_kl_g2():
    assert kl_curvature(G2) == pytest.approx(0.0233005, rel=1e-4)


def test_kl_printed_integrals():
    def r(x):
        return _log_erfc(1 / (math.sqrt(2) * math.sqrt(x))) + 1

    def first(x):
        return math.exp(-1 / (2 * x)) * r(x) ** 2 / (math.sqrt(2 * math.pi) * x**1.5)

    def second(x):
        return math.exp(-1 / (2 * x)) * r(x) / (math.sqrt(2 * math.pi) * x**2.5)

    cuts = [0, 0.05, 1, 50, np.inf]
    p1 = sum(integrate.quad(first, a, b, limit=400, epsabs=1e-13)[0] for a, b in zip(cuts[:-1], cuts[1:]))
    p2 = sum(integrate.quad(second, a, b, limit=400, epsabs=1e-13)[0] for a, b in zip(cuts[:-1], cuts[1:]))
    i1, i2 = kl_integrals(G2)
    assert i1 == pytest.approx(p1, abs=1e-6)
    assert i2 == pytest.approx(p2, abs=1e-6)
    # the curvature uses the square of the second integral
    assert kl_curvature(G2) == pytest.approx(p1 - 0.5 * p2**2, rel=1e-6)


def test_kl_zero_for_trivial_mixture():
    assert abs(kl_curvature(Alternative("g1", (1.0,)))) < 1e-14


@pytest.mark.parametrize(
    "stat,alt,ref",
    [("J1", "g2", 0.66), ("R1", "g1[10]", 0.94), ("I[1,1]", "g3[3]", 0.73), ("R0.5", "g5", 0.97)],
)
def test_efficiency_cells(stat, alt, ref):
    res = asym.efficiency(StatisticSpec.parse(stat), parse_alternative(alt))
    assert res.efficiency == pytest.approx(ref, abs=0.01)
    assert res.efficiency == res.slope_coefficient / res.kl_curvature


def test_efficiency_bounds_and_generalised_rows():
    specs = [StatisticSpec.parse(s) for s in ("I[1,1]", "I[2,3]", "J2", "R2")]
    table = asym.efficiency_table(specs, list(asym_alts()))
    for row in table:
        for cell in row:
            assert 0 < cell.efficiency < 1.02
            assert cell.kl_curvature * 1.02 >= cell.slope_coefficient
    for c11, c23 in zip(table[0], table[1]):
        assert abs(c11.efficiency - c23.efficiency) < 0.01


def asym_alts():
    from levygof.dist import BAHADUR_ALTERNATIVES

    return BAHADUR_ALTERNATIVES


def test_efficiency_table_captures_errors():
    table = asym.efficiency_table([StatisticSpec("KS")], [G2])
    assert isinstance(table[0][0], Exception)
    table = asym.efficiency_table([StatisticSpec("J")], [parse_alternative("W(2,1)")])
    assert isinstance(table[0][0], Exception)


def test_sigma2_curve_and_dump():
    t, v = asym.curve_sigma2(1.0, points=99)
    assert t.size == 99 and np.all(v >= 0)
    t, v = asym.curve_A(1.0, G2, points=99)
    assert v.max() == pytest.approx(1.49667e-5, rel=2e-2)
