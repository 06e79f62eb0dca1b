import math

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate

from svi_epp import gauss
from svi_epp.model import validate_params

P2 = validate_params(1.3, 0.9, 0.7)


# ---------------------------------------------------------------- oracles

def _mp_funcs(p, dps=40):
    mp.mp.dps = dps
    c, k = mp.mpf(p.c0), mp.mpf(p.k)
    w = mp.sqrt(4 * k - c**2) / 2
    f = lambda t: mp.e ** (-c * t / 2) * (mp.cos(w * t) + c / (2 * w) * mp.sin(w * t))  # noqa: E731
    g = lambda t: k / w * mp.e ** (-c * t / 2) * mp.sin(w * t)  # noqa: E731
    gz = lambda s: mp.e ** (-c * s / 2) * mp.sin(w * s) / w  # noqa: E731
    gy = lambda s: mp.e ** (-c * s / 2) * (mp.cos(w * s) - c / (2 * w) * mp.sin(w * s))  # noqa: E731
    var_z = lambda t: mp.quad(lambda s: gz(s) ** 2, [0, t])  # noqa: E731
    var_y = lambda t: mp.quad(lambda s: gy(s) ** 2, [0, t])  # noqa: E731
    cov = lambda t: mp.quad(lambda s: gy(s) * gz(s), [0, t])  # noqa: E731
    return f, g, var_y, var_z, cov


def _mp_h(t, p):
    f, g, var_y, var_z, cov = _mp_funcs(p)
    t = mp.mpf(t)
    sy, sz = mp.sqrt(var_y(t)), mp.sqrt(var_z(t))
    rho = cov(t) / (sy * sz)
    r = g(t) * sz / sy + rho * f(t)
    s = f(t) * sy / sz + rho * g(t)
    return -g(t) * r + (1 - f(t)) * s


# ---------------------------------------------------------------- moments

@pytest.mark.parametrize("p", [validate_params(1, 1, 1), P2])
@pytest.mark.parametrize("t", [1e-4, 1e-2, 0.3, 0.5, 1.0, 4.0])
def test_variances_against_quadrature(p, t):
    _, _, var_y, var_z, cov = _mp_funcs(p)
    vy, vz, c = gauss.variances(np.array([t]), p)
    assert vy[0] == pytest.approx(float(var_y(t)), rel=1e-12)
    assert vz[0] == pytest.approx(float(var_z(t)), rel=1e-11)
    assert c[0] == pytest.approx(float(cov(t)), rel=1e-11)


def test_covariance_closed_form(params):
    t = np.linspace(0.01, 2.0, 9)
    _, _, _, _, cov = _mp_funcs(params)
    closed = np.exp(-params.c0 * t) * np.sin(params.omega * t) ** 2 / (2 * params.omega**2)
    quad = np.array([float(cov(x)) for x in t])
    np.testing.assert_allclose(closed, quad, rtol=1e-10, atol=0)


def test_f_g_against_mpmath():
    f, g, *_ = _mp_funcs(P2)
    for t in (1e-6, 1e-3, 0.7, 3.0):
        assert gauss.f_func(t, P2) == pytest.approx(float(f(t)), rel=1e-14)
        assert gauss.g_func(t, P2) == pytest.approx(float(g(t)), rel=1e-13)
        assert gauss.one_minus_f(t, P2) == pytest.approx(float(1 - f(mp.mpf(t))), rel=1e-11)


def test_mean_shift_identities(params):
    t = np.linspace(0.0, 3.0, 31)
    for eps in (0.05, 0.2):
        m0, me = gauss.moments(t, 0.0, params), gauss.moments(t, eps, params)
        np.testing.assert_allclose(me.m, m0.m - eps * gauss.f_func(t, params), rtol=0, atol=1e-12)
        np.testing.assert_allclose(me.q, m0.q + eps * gauss.g_func(t, params), rtol=0, atol=1e-12)


def test_moments_at_zero(params):
    mo = gauss.moments(np.array([0.0]), 0.1, params)
    assert mo.m[0] == pytest.approx(0.9) and mo.q[0] == 0.0
    assert mo.var_y[0] == 0.0 and mo.var_z[0] == 0.0


def test_rejects_bad_arguments(params):
    with pytest.raises(ValueError):
        gauss.moments(-1.0, 0.1, params)
    with pytest.raises(ValueError):
        gauss.moments(1.0, 1.0, params)
    with pytest.raises(ValueError):
        gauss.density_p(0.0, 0.0, 0.0, 0.1, params)


# ---------------------------------------------------------------- density

def test_density_normalised_and_centred(params):
    t, eps = 0.4, 0.1
    mo = gauss.moments(t, eps, params)
    sy, sz = float(mo.sigma_y), float(mo.sigma_z)
    qm, mm = float(mo.q), float(mo.m)
    f = lambda z, y: float(gauss.density_p(y, z, t, eps, params))  # noqa: E731
    mass, _ = integrate.dblquad(f, qm - 9 * sy, qm + 9 * sy, mm - 9 * sz, mm + 9 * sz, epsabs=1e-11)
    assert mass == pytest.approx(1.0, abs=1e-8)
    mean_z, _ = integrate.dblquad(lambda z, y: z * f(z, y), qm - 9 * sy, qm + 9 * sy, mm - 9 * sz, mm + 9 * sz, epsabs=1e-11)
    assert mean_z == pytest.approx(mm, abs=1e-8)


def test_ratio_identity(params):
    for eps in (0.05, 0.2):
        assert gauss.ratio_identity_error(eps, params) < 1e-10


def test_ratio_factor_is_one_at_zero(params):
    y = np.linspace(-2, 2, 7)
    assert np.all(gauss.log_density_ratio_factor(y, 0.3, 0.5, 0.0, params) == 0.0)


def test_forward_equation(params):
    y, z, t = np.meshgrid(np.linspace(-2, 2, 5), np.linspace(-0.9, 0.9, 5), [0.05, 0.3, 1.0], indexing="ij")
    for eps in (0.0, 0.1):
        r = gauss.forward_residual(y, z, t, eps, params, h_t=1e-5, relative=True)
        assert np.max(np.abs(r)) < 1e-8


def test_strip_mass_against_quadrature(params):
    t, eps = 0.8, 0.1
    mo = gauss.moments(t, eps, params)
    sz = float(mo.sigma_z)
    dens = lambda z: math.exp(-0.5 * ((z - float(mo.m)) / sz) ** 2) / (math.sqrt(2 * math.pi) * sz)  # noqa: E731
    mass, _ = integrate.quad(dens, -params.Y, params.Y, epsabs=1e-13)
    assert float(gauss.strip_mass(t, eps, params)) == pytest.approx(mass, abs=1e-12)


# ---------------------------------------------------------------- auxiliary functions and expansions

def test_aux_h_against_mpmath(params):
    for t in (1e-3, 1e-2, 0.2):
        assert float(gauss.aux(np.array([t]), params).h[0]) == pytest.approx(float(_mp_h(t, params)), rel=1e-7)


def test_h_limit_is_sqrt3_c0_k_over_12():
    for p in (validate_params(1, 1, 1), P2):
        val = _mp_h(mp.mpf("1e-6"), p) / mp.mpf("1e-12")
        assert float(val) == pytest.approx(gauss.h_leading_coefficient(p), rel=1e-4)


def test_printed_f_cubic_coefficient_is_not_the_taylor_one():
    f, *_ = _mp_funcs(P2)
    coeffs = mp.taylor(f, 0, 3)
    assert float(coeffs[2]) == pytest.approx(-P2.k / 2, rel=1e-20)
    assert float(coeffs[3]) == pytest.approx(P2.c0 * P2.k / 6, rel=1e-20)
    printed = P2.c0 / 12 * (P2.c0**2 + 2 * P2.omega**2)
    assert abs(printed - float(coeffs[3])) > 1e-2


def test_p_poly_root_is_x_plus():
    from svi_epp.model import x_plus

    for c0 in (0.5, 1.0, 2.0):
        assert gauss.p_poly(c0, x_plus(c0)) == pytest.approx(0.0, abs=1e-13)


def test_expansion_verdicts(params):
    rep = gauss.expansions_check(np.logspace(-4, -2, 9), params)
    failing = {n for n, ok in rep.passed.items() if not ok}
    assert failing == {"f", "h"}
    assert rep.growth["f"] > 50 and rep.growth["h"] > 50
    assert not rep.all_printed_pass


def test_rho_limit(params):
    rho = gauss.moments(np.array([1e-4]), 0.0, params).rho[0]
    assert rho == pytest.approx(math.sqrt(3) / 2, abs=1e-3)


# ---------------------------------------------------------------- boundary y^3 moment

@pytest.mark.parametrize("t", [1e-2, 1e-3, 0.3])
def test_boundary_moment_against_quadrature(params, t):
    for eta in (0.5, 1.0):
        val, _ = integrate.quad(lambda y: y**3 * float(gauss.density_p(y, params.Y, t, 0.0, params)), -eta, 0.0, epsabs=1e-14, limit=200)
        assert float(gauss.boundary_moment_y3(eta, t, params)) == pytest.approx(val, rel=1e-8, abs=1e-14)


def test_boundary_moment_convergence_rate(params):
    lim = gauss.BOUNDARY_Y3_LIMIT
    assert lim == pytest.approx(-0.0689161, abs=1e-7)
    errs = [abs(float(gauss.boundary_moment_y3(1.0, t, params)) / lim - 1) for t in (1e-2, 1e-4, 1e-6)]
    # relative error falls by ~10 per factor 100 in t: square-root convergence
    assert errs[0] / errs[1] == pytest.approx(10, rel=0.15)
    assert errs[1] / errs[2] == pytest.approx(10, rel=0.05)
