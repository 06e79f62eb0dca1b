"""Gaussian analytics of the purely elastic oscillator.

Started from ``(y, z) = (0, Y - eps)`` the unconstrained linear oscillator is a
Gaussian process.  This module evaluates its moments, the joint density of
``(y(t), z(t))``, the exact factorisation of the shifted density against the
``eps = 0`` one, the auxiliary functions built from them, and the small-time
expansions of all of these.

Every function is vectorised over ``t`` (and over ``y, z`` where relevant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .model import OscillatorParams

__all__ = [
    "GaussMoments",
    "AuxFunctions",
    "Expansion",
    "ExpansionReport",
    "f_func",
    "g_func",
    "one_minus_f",
    "variances",
    "moments",
    "log_density_p",
    "density_p",
    "log_density_ratio_factor",
    "density_ratio_factor",
    "aux",
    "p_poly",
    "h_leading_coefficient",
    "expansions",
    "expansions_check",
    "boundary_moment_y3",
    "BOUNDARY_Y3_LIMIT",
    "strip_mass",
    "ratio_identity_error",
    "forward_residual",
]

# lim_{t->0} of the y^3 boundary moment: (1/2pi)(sqrt3/8) * int_{-inf}^0 u^3 e^{-u^2/2} du
BOUNDARY_Y3_LIMIT = -math.sqrt(3.0) / (8.0 * math.pi)

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
# below this value of t*max(c0, omega, 1) the closed antiderivatives lose digits
_SMALL_T = 0.5


def _as_t(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise ValueError("t must be finite and >= 0")
    return t


def _gl(integrand, t: np.ndarray) -> np.ndarray:
    """Gauss-Legendre integral of ``integrand`` over ``[0, t]`` (24 nodes)."""
    s = 0.5 * t[..., None] * (_GL_X + 1.0)
    return 0.5 * t * np.sum(_GL_W * integrand(s), axis=-1)


def _expm1_complex(z: np.ndarray) -> np.ndarray:
    """``exp(z) - 1`` without cancellation for small complex ``z``."""
    x, y = z.real, z.imag
    re = np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2
    im = np.exp(x) * np.sin(y)
    return re + 1j * im


def _small(t: np.ndarray, p: OscillatorParams) -> np.ndarray:
    return t * max(p.c0, p.omega, 1.0) < _SMALL_T


def f_func(t, p: OscillatorParams) -> np.ndarray:
    """``f(t) = exp(-c0 t/2) (cos wt + c0/(2w) sin wt)``, so that ``m0 = Y f``."""
    t = _as_t(t)
    w = p.omega
    return np.exp(-0.5 * p.c0 * t) * (np.cos(w * t) + p.c0 / (2.0 * w) * np.sin(w * t))


def g_func(t, p: OscillatorParams) -> np.ndarray:
    """``g(t) = (k/w) exp(-c0 t/2) sin wt``, so that ``q0 = -Y g``."""
    t = _as_t(t)
    return p.k / p.omega * np.exp(-0.5 * p.c0 * t) * np.sin(p.omega * t)


def one_minus_f(t, p: OscillatorParams) -> np.ndarray:
    """``1 - f(t)``, accurate to full relative precision as ``t -> 0``.

    Uses ``f' = -g`` so that ``1 - f(t)`` is the integral of ``g`` over
    ``[0, t]``; for small ``t`` that integral is evaluated by quadrature.
    """
    t = _as_t(t)
    out = 1.0 - f_func(t, p)
    small = _small(t, p)
    if np.any(small):
        out = np.where(small, _gl(lambda s: g_func(s, p), np.where(small, t, 0.0)), out)
    return out


def variances(t, p: OscillatorParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return ``(var_y, var_z, cov_yz)`` of the elastic process at time ``t``.

    They do not depend on the starting point.  ``cov_yz`` is the closed form
    ``exp(-c0 t) sin^2(wt) / (2 w^2)``.
    """
    t = _as_t(t)
    c, w = p.c0, p.omega
    a = c / (2.0 * w)
    e0 = -np.expm1(-c * t) / c
    lam = complex(-c, 2.0 * w)
    z2 = _expm1_complex(lam * t) / lam
    c2, s2 = z2.real, z2.imag
    var_z = (e0 - c2) / (2.0 * w * w)
    var_y = 0.5 * (1.0 + a * a) * e0 + 0.5 * (1.0 - a * a) * c2 - a * s2
    small = _small(t, p)
    if np.any(small):
        ts = np.where(small, t, 0.0)
        vz = _gl(lambda s: np.exp(-c * s) * np.sin(w * s) ** 2, ts) / (w * w)
        vy = _gl(lambda s: np.exp(-c * s) * (np.cos(w * s) - a * np.sin(w * s)) ** 2, ts)
        var_z = np.where(small, vz, var_z)
        var_y = np.where(small, vy, var_y)
    cov = np.exp(-c * t) * np.sin(w * t) ** 2 / (2.0 * w * w)
    return var_y, var_z, cov


@dataclass(frozen=True)
class GaussMoments:
    """Mean and covariance of ``(y(t), z(t))`` started from ``(0, Y - eps)``.

    ``m`` is the mean of ``z``, ``q`` the mean of ``y``.
    """

    m: np.ndarray
    q: np.ndarray
    var_z: np.ndarray
    var_y: np.ndarray
    cov_yz: np.ndarray
    rho: np.ndarray

    @property
    def sigma_y(self) -> np.ndarray:
        return np.sqrt(self.var_y)

    @property
    def sigma_z(self) -> np.ndarray:
        return np.sqrt(self.var_z)


def _check_eps(eps: float, p: OscillatorParams) -> None:
    if not (0.0 <= eps < p.Y):
        raise ValueError(f"eps must satisfy 0 <= eps < Y = {p.Y}, got {eps!r}")


def moments(t, eps: float, p: OscillatorParams) -> GaussMoments:
    t = _as_t(t)
    _check_eps(eps, p)
    var_y, var_z, cov = variances(t, p)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(t > 0, cov / np.sqrt(var_y * var_z), 0.0)
    m = (p.Y - eps) * f_func(t, p)
    q = -(p.Y - eps) * g_func(t, p)
    return GaussMoments(m=m, q=q, var_z=var_z, var_y=var_y, cov_yz=cov, rho=rho)


def _positive_t(t) -> np.ndarray:
    t = _as_t(t)
    if np.any(t <= 0):
        raise ValueError("the density is only defined for t > 0")
    return t


def log_density_p(y, z, t, eps: float, p: OscillatorParams) -> np.ndarray:
    """Log of the bivariate normal density of ``(y(t), z(t))`` from ``(0, Y - eps)``.

    At short times the exponent reaches ``1e5`` or more inside the strip, so
    the quadratic form is assembled in extended precision.
    """
    t = _positive_t(t)
    _check_eps(eps, p)
    var_y, var_z, cov = variances(t, p)
    L = np.longdouble
    sy, sz = np.sqrt(L(var_y)), np.sqrt(L(var_z))
    rho = L(cov) / (sy * sz)
    shift = L(p.Y) - L(eps)
    a = (L(y) + shift * L(g_func(t, p))) / sy
    b = (L(z) - shift * L(f_func(t, p))) / sz
    one_r2 = 1 - rho**2
    quad = (a * a - 2 * rho * a * b + b * b) / one_r2
    return (-0.5 * quad - np.log(2 * np.pi * sy * sz * np.sqrt(one_r2))).astype(float)


def density_p(y, z, t, eps: float, p: OscillatorParams) -> np.ndarray:
    """Transition density ``p^eps(y, z, t)``.  Underflows to 0 far in the tails."""
    return np.exp(log_density_p(y, z, t, eps, p))


def log_density_ratio_factor(y, z, t, eps: float, p: OscillatorParams) -> np.ndarray:
    r"""Log of ``p^eps / p^0``:  ``-eps^2 A/2 + eps [(y-q0) r - (z-m0) s] / ((1-rho^2) sy sz)``."""
    t = _positive_t(t)
    _check_eps(eps, p)
    au = aux(t, p)
    mo = moments(t, 0.0, p)
    L = np.longdouble
    den = (1 - L(mo.rho) ** 2) * L(mo.sigma_y) * L(mo.sigma_z)
    lin = (L(y) - L(mo.q)) * L(au.r) - (L(z) - L(mo.m)) * L(au.s)
    e = L(eps)
    return (-0.5 * e * e * L(au.A) + e * lin / den).astype(float)


def density_ratio_factor(y, z, t, eps: float, p: OscillatorParams) -> np.ndarray:
    return np.exp(log_density_ratio_factor(y, z, t, eps, p))


def p_poly(c0: float, k: float) -> float:
    """``P(c0, k) = k^2 + (c0/3) k - c0^3/6``; its positive root in ``k`` is ``X+(c0)``."""
    return k * k + c0 * k / 3.0 - c0**3 / 6.0


def h_leading_coefficient(p: OscillatorParams) -> float:
    """Exact ``lim h(t)/t^2 = sqrt(3) c0 k / 12`` (from the Taylor series of f, g, sigmas)."""
    return math.sqrt(3.0) * p.c0 * p.k / 12.0


@dataclass(frozen=True)
class AuxFunctions:
    """Auxiliary functions of time evaluated on a common ``t``.

    ``A, r, s, h, l`` and ``q_tilde0`` need ``t > 0``; at ``t = 0`` they are
    returned as their limits where finite (``h = 0``) and ``nan`` otherwise.
    ``one_minus_f`` is carried separately because ``1 - f`` cancels badly.
    """

    t: np.ndarray
    f: np.ndarray
    g: np.ndarray
    one_minus_f: np.ndarray
    A: np.ndarray
    r: np.ndarray
    s: np.ndarray
    h: np.ndarray
    l: np.ndarray  # noqa: E741
    q_tilde0: np.ndarray
    P: float


def aux(t, p: OscillatorParams) -> AuxFunctions:
    t = _as_t(t)
    f = f_func(t, p)
    g = g_func(t, p)
    omf = one_minus_f(t, p)
    mo = moments(t, 0.0, p)
    sy, sz, rho = mo.sigma_y, mo.sigma_z, mo.rho
    with np.errstate(invalid="ignore", divide="ignore"):
        one_r2 = 1.0 - rho**2
        A = (g * g / mo.var_y + f * f / mo.var_z + 2.0 * rho * g * f / (sy * sz)) / one_r2
        r = g * sz / sy + rho * f
        s = f * sy / sz + rho * g
        h = -g * r + omf * s
        l = -g * r - (1.0 + f) * s  # noqa: E741
        q_tilde0 = mo.q + rho * p.Y * omf * sy / sz
    pos = t > 0
    nan = np.full_like(t, np.nan)
    return AuxFunctions(
        t=t,
        f=f,
        g=g,
        one_minus_f=omf,
        A=np.where(pos, A, nan),
        r=np.where(pos, r, nan),
        s=np.where(pos, s, nan),
        h=np.where(pos, h, 0.0),
        l=np.where(pos, l, nan),
        q_tilde0=np.where(pos, q_tilde0, 0.0),
        P=p_poly(p.c0, p.k),
    )


# --------------------------------------------------------------------------
# small-t expansions


@dataclass(frozen=True)
class Expansion:
    """One small-time expansion ``exact(t) = series(t) + o(t**order)``.

    ``exact`` and ``series`` return the *normalised* quantity (for instance
    ``rho / (sqrt3/2)``) so that ratios are comparable; ``deviation`` returns
    ``exact - series`` computed without cancellation when that matters.
    """

    name: str
    order: int
    exact: object
    series: object
    deviation: object
    printed: bool = True
    note: str = ""


def expansions(p: OscillatorParams) -> list[Expansion]:
    """The small-time expansions of the Gaussian layer.

    Entries with ``printed=True`` use the coefficients exactly as published;
    the two ``*_rederived`` entries carry the Taylor coefficients obtained
    from the ODE and series algebra, which differ from the printed ones.
    """
    c, k, Y, w = p.c0, p.k, p.Y, p.omega
    s3 = math.sqrt(3.0)

    def mo(t):
        return moments(t, 0.0, p)

    def f_dev(c3):
        # f - series == (1 - series) - (1 - f)
        return lambda t: (k * t**2 / 2 - c3 * t**3) - one_minus_f(t, p)

    c3_printed = c / 12.0 * (c * c + 2.0 * w * w)
    c3_true = c * k / 6.0

    def diff(ex, se):
        return lambda t: ex(t) - se(t)

    items: list[tuple] = []

    items.append(("f", 3, lambda t: f_func(t, p),
                  lambda t: 1 - k * t**2 / 2 + c3_printed * t**3, f_dev(c3_printed), True,
                  "printed cubic coefficient (c0/12)(c0^2 + 2 w^2)"))
    items.append(("f_rederived", 3, lambda t: f_func(t, p),
                  lambda t: 1 - k * t**2 / 2 + c3_true * t**3, f_dev(c3_true), False,
                  "cubic coefficient c0 k / 6 from z''' = -c0 z'' - k z'"))

    g_ser = lambda t: k * t * (1 - c * t / 2)  # noqa: E731
    items.append(("g", 2, lambda t: g_func(t, p), g_ser, diff(lambda t: g_func(t, p), g_ser), True, ""))

    vy_ser = lambda t: t - c * t**2  # noqa: E731
    items.append(("var_y", 2, lambda t: mo(t).var_y, vy_ser, diff(lambda t: mo(t).var_y, vy_ser), True, ""))

    sy_ex = lambda t: mo(t).sigma_y / np.sqrt(t)  # noqa: E731
    sy_ser = lambda t: 1 - c * t / 2  # noqa: E731
    items.append(("sigma_y", 1, sy_ex, sy_ser, diff(sy_ex, sy_ser), True, "normalised by sqrt(t)"))

    vz_ser = lambda t: t**3 / 3 - c * t**4 / 4  # noqa: E731
    items.append(("var_z", 4, lambda t: mo(t).var_z, vz_ser, diff(lambda t: mo(t).var_z, vz_ser), True, ""))

    sz_ex = lambda t: mo(t).sigma_z * s3 / t**1.5  # noqa: E731
    sz_ser = lambda t: 1 - 3 * c * t / 8  # noqa: E731
    items.append(("sigma_z", 1, sz_ex, sz_ser, diff(sz_ex, sz_ser), True,
                  "normalised by t^1.5/sqrt3; coefficient read as 3 c0/8"))

    zy_ex = lambda t: mo(t).sigma_z / mo(t).sigma_y * s3 / t  # noqa: E731
    zy_ser = lambda t: 1 + c * t / 8  # noqa: E731
    items.append(("sigma_z/sigma_y", 1, zy_ex, zy_ser, diff(zy_ex, zy_ser), True, "normalised by t/sqrt3"))

    rho_ex = lambda t: mo(t).rho * 2 / s3  # noqa: E731
    rho_ser = lambda t: 1 - c * t / 8  # noqa: E731
    items.append(("rho", 1, rho_ex, rho_ser, diff(rho_ex, rho_ser), True, "normalised by sqrt3/2"))

    q_ser = lambda t: -Y * k * t * (1 - c * t / 2)  # noqa: E731
    items.append(("q0", 2, lambda t: mo(t).q, q_ser, diff(lambda t: mo(t).q, q_ser), True, ""))

    m_ser = lambda t: Y * (1 - k * t**2 / 2)  # noqa: E731
    items.append(("m0", 2, lambda t: mo(t).m, m_ser,
                  lambda t: Y * (k * t**2 / 2 - one_minus_f(t, p)), True, ""))

    h_ex = lambda t: aux(t, p).h / t**2  # noqa: E731
    h_printed = math.sqrt(3.0) / 4.0 * p_poly(c, k)
    h_ser = lambda t: np.full_like(np.asarray(t, dtype=float), h_printed)  # noqa: E731
    items.append(("h", 0, h_ex, h_ser, diff(h_ex, h_ser), True,
                  "normalised by t^2; printed limit (sqrt3/4) P(c0,k)"))
    h_true = h_leading_coefficient(p)
    h_ser2 = lambda t: np.full_like(np.asarray(t, dtype=float), h_true)  # noqa: E731
    items.append(("h_rederived", 0, h_ex, h_ser2, diff(h_ex, h_ser2), False,
                  "normalised by t^2; limit sqrt3 c0 k / 12"))

    def rs_ex(t):
        a = aux(t, p)
        m = mo(t)
        return a.r / (m.sigma_y * m.sigma_z) * 2 * t**2 / 3

    rs_ser = lambda t: 1 + 3 * c * t / 4  # noqa: E731
    items.append(("r/(sigma_y sigma_z)", 1, rs_ex, rs_ser, diff(rs_ex, rs_ser), True,
                  "normalised by 3/(2 t^2)"))

    return [Expansion(*it) for it in items]


@dataclass
class ExpansionReport:
    """Rows of ``(name, t, exact, series, ratio)`` plus a verdict per expansion.

    ``ratio = |exact - series| / t**(order + 1)``.  An expansion passes when
    the ratio nowhere exceeds ``growth_limit`` times its value at the largest
    ``t`` of the grid.
    """

    rows: list[tuple[str, float, float, float, float]]
    passed: dict[str, bool]
    growth: dict[str, float]

    @property
    def all_printed_pass(self) -> bool:
        return all(self.passed[n] for n in self.passed if not n.endswith("_rederived"))


def expansions_check(t_grid, p: OscillatorParams, growth_limit: float = 10.0) -> ExpansionReport:
    t = np.sort(np.asarray(t_grid, dtype=float))
    if t.size < 2 or np.any(t <= 0):
        raise ValueError("t_grid needs at least two positive points")
    rows = []
    passed, growth = {}, {}
    for e in expansions(p):
        ex = np.asarray(e.exact(t), dtype=float)
        se = np.asarray(e.series(t), dtype=float)
        ratio = np.abs(np.asarray(e.deviation(t), dtype=float)) / t ** (e.order + 1)
        ref = max(float(ratio[-1]), 1e-12)
        g = float(ratio.max() / ref)
        growth[e.name] = g
        passed[e.name] = bool(np.all(np.isfinite(ratio)) and g <= growth_limit)
        rows.extend((e.name, float(a), float(b), float(c), float(d)) for a, b, c, d in zip(t, ex, se, ratio))
    return ExpansionReport(rows=rows, passed=passed, growth=growth)


def _truncated_normal_moments(a, b):
    """``int_a^b u^j phi(u) du`` for ``j = 0..3``."""
    pa = np.exp(-0.5 * a * a) / math.sqrt(2 * math.pi)
    pb = np.exp(-0.5 * b * b) / math.sqrt(2 * math.pi)
    m0 = ndtr(b) - ndtr(a)
    m1 = pa - pb
    m2 = m0 + a * pa - b * pb
    m3 = (a * a + 2) * pa - (b * b + 2) * pb
    return m0, m1, m2, m3


def boundary_moment_y3(eta: float, t, p: OscillatorParams) -> np.ndarray:
    """``int_{-eta}^0 y^3 p0(y, Y, t) dy`` through the conditional-on-``z = Y`` split.

    ``p0(y, Y, t)`` factors as the ``z``-marginal at ``Y`` times a normal in
    ``y`` with mean ``q_tilde0`` and standard deviation ``sqrt(1-rho^2) sigma_y``;
    after the substitution ``y = q_tilde0 + sd * u`` the cubic moment over the
    truncated range is available in closed form.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    t = _positive_t(t)
    au = aux(t, p)
    mo = moments(t, 0.0, p)
    sd = np.sqrt(1.0 - mo.rho**2) * mo.sigma_y
    mu = au.q_tilde0
    lo = (-eta - mu) / sd
    hi = -mu / sd
    m0, m1, m2, m3 = _truncated_normal_moments(lo, hi)
    L = mu**3 * m0 + 3 * mu**2 * sd * m1 + 3 * mu * sd**2 * m2 + sd**3 * m3
    zfac = np.exp(-0.5 * (p.Y * au.one_minus_f) ** 2 / mo.var_z) / (math.sqrt(2 * math.pi) * mo.sigma_z)
    return zfac * L


def strip_mass(t, eps: float, p: OscillatorParams) -> np.ndarray:
    """``P(|z(t)| < Y)`` for the elastic process from ``(0, Y - eps)``: the z-marginal mass of the strip."""
    t = _positive_t(t)
    mo = moments(t, eps, p)
    sz = mo.sigma_z
    return ndtr((p.Y - mo.m) / sz) - ndtr((-p.Y - mo.m) / sz)


def ratio_identity_error(eps: float, p: OscillatorParams, n: int = 10, y_lim: float = 3.0, t_range=(0.05, 1.0)) -> float:
    """Largest relative gap between ``p^eps`` and ``p^0`` times the ratio factor.

    Compared in log space on an ``n^3`` grid over ``[-y_lim, y_lim] x [-Y, Y]
    x t_range``; the relative density error is ``|expm1(log gap)|``.
    """
    y = np.linspace(-y_lim, y_lim, n)
    z = np.linspace(-p.Y, p.Y, n)
    t = np.linspace(*t_range, n)
    Yg, Zg, Tg = np.meshgrid(y, z, t, indexing="ij")
    lhs = log_density_p(Yg, Zg, Tg, eps, p)
    rhs = log_density_p(Yg, Zg, Tg, 0.0, p) + log_density_ratio_factor(Yg, Zg, Tg, eps, p)
    return float(np.max(np.abs(np.expm1(lhs - rhs))))


def forward_residual(y, z, t, eps: float, p: OscillatorParams, h: float = 0.05, h_t: float = 1e-4, relative: bool = False) -> np.ndarray:
    """``(p_t - p_yy/2 - ((c0 y + k z) p)_y + y p_z) / p`` by central differences of ``log p``.

    Zero up to truncation and rounding error when ``p^eps`` solves the forward
    equation.  ``log p`` is quadratic in ``(y, z)``, so only the ``t``
    difference carries truncation error, so ``h`` can be large and only the
    relative time step ``h_t`` needs to be small.  With ``relative`` the
    residual is divided by the sum of the absolute values of its five terms.
    """
    y, z, t = (np.asarray(a, dtype=float) for a in (y, z, t))

    def L(a, b, c):
        return log_density_p(a, b, c, eps, p)

    ht = h_t * t
    L0 = L(y, z, t)
    Lt = (L(y, z, t + ht) - L(y, z, t - ht)) / (2 * ht)
    Lyp, Lym = L(y + h, z, t), L(y - h, z, t)
    Ly = (Lyp - Lym) / (2 * h)
    Lyy = (Lyp - 2 * L0 + Lym) / h**2
    Lz = (L(y, z + h, t) - L(y, z - h, t)) / (2 * h)
    terms = (Lt, -0.5 * (Lyy + Ly**2), np.full_like(Lt, -p.c0), -(p.c0 * y + p.k * z) * Ly, y * Lz)
    res = sum(terms)
    if relative:
        return res / sum(np.abs(a) for a in terms)
    return res
