"""Survival probability of the elastic process in the strip ``|z| < Y``.

``u(y, z, t) = P[theta(y, z) > T - t]`` where ``theta`` is the first time the
unconstrained oscillator started at ``(y, z)`` reaches ``|z| = Y``.  It solves

    -u_t - u_yy/2 + (c0 y + k z) u_y - y u_z = 0,
    u(y, Y, t) = 0 for y > 0,  u(y, -Y, t) = 0 for y < 0,  u(., ., T) = 1,

which is integrated backwards from ``T`` with first-order upwinding for both
transport terms (explicit) and an implicit step for the ``y`` diffusion.
The same survival probability is also estimated by Monte Carlo.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from . import _kernels
from . import gauss
from .model import OscillatorParams
from .noise import BrownianPath, PathSpec, generate_batch
from .parallel import batches, worker_count

__all__ = [
    "CFLError",
    "Grid2D",
    "GridFunction",
    "BlowupRow",
    "BlowupTable",
    "Lemma1Terms",
    "QuadratureError",
    "blowup_diagnostic",
    "lemma1_integrals",
    "boundary_flux",
    "lemma1_terms",
    "ThetaEstimate",
    "elastic_endpoints",
    "elastic_flow",
    "elastic_flow_closed_form",
    "mc_exit_prob",
    "solve_u",
    "u_probe",
    "u_y_left_at_corner",
]


class QuadratureError(RuntimeError):
    """Boundary-flux quadrature did not reach the requested tolerance."""

    def __init__(self, msg: str, achieved: float):
        super().__init__(msg)
        self.achieved = achieved


class CFLError(ValueError):
    """Explicit transport step too large for the grid."""

    def __init__(self, msg: str, suggested_n_t: int):
        super().__init__(msg)
        self.suggested_n_t = suggested_n_t


@dataclass(frozen=True)
class Grid2D:
    """Truncated computational domain ``[y_min, y_max] x [-Y, Y] x [0, T]``.

    ``n_t`` is the number of time slabs.  The defaults suit ``c0 = k = Y = 1``
    and ``T = 1``; :meth:`for_params` picks ``n_t`` from the stability limit
    for other settings.  The solution is singular at the corners ``(0, +-Y)``,
    so ``n_z`` matters far more than ``n_y``.
    """

    y_min: float = -6.0
    y_max: float = 6.0
    n_y: int = 161
    n_z: int = 641
    n_t: int = 4500
    T: float = 1.0

    def __post_init__(self) -> None:
        if not self.y_min < 0 < self.y_max:
            raise ValueError("need y_min < 0 < y_max")
        if min(self.n_y, self.n_z, self.n_t) < 16:
            raise ValueError("n_y, n_z and n_t must all be >= 16")
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError("T must be > 0")

    @classmethod
    def for_params(
        cls,
        p: OscillatorParams,
        T: float = 1.0,
        n_y: int = 161,
        n_z: int = 641,
        y_lim: float = 6.0,
        cfl: float = 0.45,
    ) -> "Grid2D":
        """Grid with the smallest ``n_t`` keeping the CFL number at ``cfl``."""
        probe = cls(-y_lim, y_lim, n_y, n_z, 16, T)
        n_t = max(16, int(math.ceil(probe.cfl(p) * 16 / cfl)))
        return cls(-y_lim, y_lim, n_y, n_z, n_t, T)

    def y(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.n_y)

    def z(self, p: OscillatorParams) -> np.ndarray:
        return np.linspace(-p.Y, p.Y, self.n_z)

    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_t + 1)

    def cfl(self, p: OscillatorParams) -> float:
        dy = (self.y_max - self.y_min) / (self.n_y - 1)
        dz = 2.0 * p.Y / (self.n_z - 1)
        ymax = max(abs(self.y_min), abs(self.y_max))
        bmax = p.c0 * ymax + p.k * p.Y
        return self.T / self.n_t * (ymax / dz + bmax / dy)


@dataclass
class GridFunction:
    """Solution of the backward problem.

    ``values[i, j, m]`` is ``u(y[i], z[j], t_saved[m])``.  The traces on the two
    absorbing lines are kept at every time level in ``top[i, n] = u(y[i], Y,
    t[n])`` and ``bottom[i, n] = u(y[i], -Y, t[n])``.
    """

    grid: Grid2D
    params: OscillatorParams
    y: np.ndarray
    z: np.ndarray
    t: np.ndarray
    t_saved: np.ndarray
    values: np.ndarray
    top: np.ndarray
    bottom: np.ndarray
    max_increase_backward: float = field(default=0.0)

    def slice_at(self, t: float) -> np.ndarray:
        m = int(np.argmin(np.abs(self.t_saved - t)))
        if not math.isclose(self.t_saved[m], t, abs_tol=1e-12):
            raise KeyError(f"t = {t} was not saved; saved times are {self.t_saved}")
        return self.values[:, :, m]

    def interp(self, y: float, z: float, t: float = 0.0) -> float:
        """Bilinear interpolation of the saved slice at ``t``."""
        if not (self.y[0] <= y <= self.y[-1] and self.z[0] <= z <= self.z[-1]):
            raise ValueError(f"probe ({y}, {z}) lies outside the grid")
        u = self.slice_at(t)
        i = min(max(int(np.searchsorted(self.y, y)) - 1, 0), self.y.size - 2)
        j = min(max(int(np.searchsorted(self.z, z)) - 1, 0), self.z.size - 2)
        a = (y - self.y[i]) / (self.y[i + 1] - self.y[i])
        b = (z - self.z[j]) / (self.z[j + 1] - self.z[j])
        return float(
            (1 - a) * (1 - b) * u[i, j]
            + a * (1 - b) * u[i + 1, j]
            + (1 - a) * b * u[i, j + 1]
            + a * b * u[i + 1, j + 1]
        )


def _diffusion_bands(n: int, lam: float, fixed: np.ndarray | None) -> np.ndarray:
    """Banded form of ``I - lam * D_yy`` with reflecting ends; ``fixed`` rows become identity."""
    ab = np.zeros((3, n))
    ab[1, :] = 1.0 + 2.0 * lam
    ab[0, 1:] = -lam
    ab[2, :-1] = -lam
    # ghost node u[-1] = u[1] (and symmetrically at the top)
    ab[0, 1] = -2.0 * lam
    ab[2, n - 2] = -2.0 * lam
    if fixed is not None:
        idx = np.flatnonzero(fixed)
        ab[1, idx] = 1.0
        up = idx[idx + 1 < n] + 1
        ab[0, up] = np.where(np.isin(up - 1, idx), 0.0, ab[0, up])
        lo = idx[idx - 1 >= 0] - 1
        ab[2, lo] = np.where(np.isin(lo + 1, idx), 0.0, ab[2, lo])
    return ab


def _minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _upwind_derivative(u: np.ndarray, h: float, axis: int, forward: np.ndarray, order: int) -> np.ndarray:
    """Upwind first derivative along ``axis``; ``forward`` marks nodes using ``u[j+1] - u[j]``.

    Ends are padded with zero slope.  ``order = 2`` adds minmod-limited slope
    corrections (MUSCL reconstruction of the upwind face values).
    """
    w = np.moveaxis(u, axis, 0)
    pad = np.concatenate((w[:1], w[:1], w, w[-1:], w[-1:]))
    d = np.diff(pad, axis=0)  # d[i] = pad[i+1] - pad[i], node j sits at pad index j + 2
    fwd = d[2:-1]
    bwd = d[1:-2]
    if order == 2:
        s = _minmod(d[:-1], d[1:])  # s[i] is the limited slope at pad index i + 1
        s_here = s[1:-1]
        fwd = fwd - 0.5 * (s[2:] - s_here)
        bwd = bwd + 0.5 * (s_here - s[:-2])
    out = np.where(np.moveaxis(np.broadcast_to(forward, u.shape), axis, 0), fwd, bwd) / h
    return np.moveaxis(out, 0, axis)


def solve_u(
    grid: Grid2D,
    p: OscillatorParams,
    save_times: np.ndarray | None = None,
    order: int = 2,
) -> GridFunction:
    """Backward solve on ``grid``.

    ``save_times`` (forward times in ``[0, T]``) selects the full slices to
    keep; ``t = 0`` and ``t = T`` are always kept.  ``order = 1`` selects
    plain upwinding, ``order = 2`` minmod-limited upwinding with a two-stage
    time step.  Raises :class:`CFLError` when the explicit transport step is
    unstable.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    c = grid.cfl(p)
    limit = 1.0 if order == 1 else 0.5
    if c > limit:
        need = int(math.ceil(grid.n_t * c / limit * 1.05))
        raise CFLError(f"CFL number {c:.3f} > {limit} for n_t = {grid.n_t}; use n_t >= {need}", need)
    y = grid.y()
    z = grid.z(p)
    t = grid.t()
    dy = y[1] - y[0]
    dz = z[1] - z[0]
    dtau = grid.T / grid.n_t
    ny, nz, nt = grid.n_y, grid.n_z, grid.n_t

    if save_times is None:
        save_idx = np.unique(np.linspace(0, nt, 17).round().astype(int))
    else:
        st = np.asarray(save_times, dtype=float)
        save_idx = np.unique(np.concatenate(([0, nt], np.rint(st / grid.T * nt).astype(int))))
    save_idx = np.clip(save_idx, 0, nt)
    slot = {int(n): m for m, n in enumerate(save_idx)}

    Yg, Zg = np.meshgrid(y, z, indexing="ij")
    drift = -(p.c0 * Yg + p.k * Zg)
    ypos = (y > 0)[:, None]
    bpos = drift > 0
    # the corner nodes y = 0 are absorbing too: from (0, +-Y) the exit is immediate
    top_fixed = y >= 0
    bot_fixed = y <= 0

    lam = 0.5 * dtau / dy**2
    ab_int = _diffusion_bands(ny, lam, None)
    ab_top = _diffusion_bands(ny, lam, top_fixed)
    ab_bot = _diffusion_bands(ny, lam, bot_fixed)

    values = np.empty((ny, nz, save_idx.size))
    top = np.empty((ny, nt + 1))
    bottom = np.empty((ny, nt + 1))

    u = np.ones((ny, nz))
    values[:, :, slot[nt]] = u
    top[:, nt] = u[:, -1]
    bottom[:, nt] = u[:, 0]
    worst_increase = 0.0

    def transport(w: np.ndarray) -> np.ndarray:
        dz_up = _upwind_derivative(w, dz, 1, ypos, order)
        dy_up = _upwind_derivative(w, dy, 0, bpos, order)
        return Yg * dz_up + drift * dy_up

    def dirichlet(w: np.ndarray) -> np.ndarray:
        w[top_fixed, -1] = 0.0
        w[bot_fixed, 0] = 0.0
        return w

    for n in range(nt - 1, -1, -1):
        if order == 1:
            v = dirichlet(u + dtau * transport(u))
        else:
            # two-stage strong-stability-preserving Runge-Kutta
            v1 = dirichlet(u + dtau * transport(u))
            v = dirichlet(0.5 * (u + v1 + dtau * transport(v1)))
        new = np.empty_like(u)
        new[:, 1:-1] = solve_banded((1, 1), ab_int, v[:, 1:-1], check_finite=False)
        new[:, -1] = solve_banded((1, 1), ab_top, v[:, -1], check_finite=False)
        new[:, 0] = solve_banded((1, 1), ab_bot, v[:, 0], check_finite=False)
        np.clip(new, 0.0, 1.0, out=new)
        inc = float(np.max(new - u))
        if inc > worst_increase:
            worst_increase = inc
        u = new
        top[:, n] = u[:, -1]
        bottom[:, n] = u[:, 0]
        if n in slot:
            values[:, :, slot[n]] = u

    return GridFunction(
        grid=grid,
        params=p,
        y=y,
        z=z,
        t=t,
        t_saved=t[save_idx],
        values=values,
        top=top,
        bottom=bottom,
        max_increase_backward=worst_increase,
    )


def u_probe(u: GridFunction, eps: float) -> float:
    """``u(0, Y - eps, 0)`` by bilinear interpolation."""
    Y = u.params.Y
    if not 0 <= eps <= 2 * Y:
        raise ValueError(f"eps = {eps} puts the probe outside the strip")
    return u.interp(0.0, Y - eps, 0.0)


def u_y_left_at_corner(u: GridFunction) -> float:
    """One-sided slope ``u_y(0-, Y, 0)`` from the two nodes left of ``y = 0``."""
    i0 = int(np.argmin(np.abs(u.y)))
    col = u.slice_at(0.0)[:, -1]
    return float((col[i0] - col[i0 - 1]) / (u.y[i0] - u.y[i0 - 1]))


# --------------------------------------------------------------------------
# Monte Carlo


def elastic_flow(y0: float, z0: float, path: BrownianPath, p: OscillatorParams) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained Euler trajectory ``(y, z)`` on the grid of ``path``."""
    ys, zs = _kernels.elastic_record(
        float(y0), float(z0), np.ascontiguousarray(path.increments), path.dt, p.c0, p.k
    )
    return ys, zs


def elastic_flow_closed_form(y0: float, z0: float, t: np.ndarray, p: OscillatorParams) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free elastic trajectory (damped oscillator) at times ``t``."""
    t = np.asarray(t, dtype=float)
    w, c = p.omega, p.c0
    e = np.exp(-0.5 * c * t)
    z = e * (z0 * np.cos(w * t) + (y0 + 0.5 * c * z0) / w * np.sin(w * t))
    y = -0.5 * c * z + e * (-w * z0 * np.sin(w * t) + (y0 + 0.5 * c * z0) * np.cos(w * t))
    return y, z


def elastic_endpoints(
    y0: float,
    z0: float,
    T: float,
    dt: float,
    seed: int,
    n_paths: int,
    p: OscillatorParams,
    batch_size: int = 512,
    threads: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """``(y(T), z(T))`` of the unconstrained scheme for paths ``0 .. n_paths-1``."""
    y_out = np.empty(n_paths)
    z_out = np.empty(n_paths)

    def work(rng):
        lo, hi = rng
        incs = generate_batch(T, dt, seed, range(lo, hi))
        _kernels.elastic_endpoints(float(y0), float(z0), incs, dt, p.c0, p.k, y_out[lo:hi], z_out[lo:hi])

    with ThreadPoolExecutor(max_workers=worker_count(threads)) as ex:
        list(ex.map(work, batches(n_paths, batch_size)))
    return y_out, z_out


@dataclass(frozen=True)
class ThetaEstimate:
    eps: float
    T: float
    p_survive: float
    std_error: float
    n_paths: int
    dt: float
    seed: int


def _survival_counts(z_starts, T, dt, seed, n_paths, p, batch_size, threads) -> np.ndarray:
    z_starts = np.ascontiguousarray(z_starts, dtype=float)
    alive = np.zeros((n_paths, z_starts.size), dtype=np.int8)

    def work(rng):
        lo, hi = rng
        incs = generate_batch(T, dt, seed, range(lo, hi))
        out = np.empty((hi - lo, z_starts.size), dtype=np.int8)
        _kernels.elastic_survival(0.0, z_starts, incs, dt, p.c0, p.k, p.Y, out)
        alive[lo:hi] = out

    with ThreadPoolExecutor(max_workers=worker_count(threads)) as ex:
        list(ex.map(work, batches(n_paths, batch_size)))
    return alive


def mc_exit_prob(
    eps: float | list[float],
    T: float,
    n_paths: int,
    dt: float,
    seed: int,
    p: OscillatorParams,
    batch_size: int = 512,
    threads: int | None = None,
) -> ThetaEstimate | list[ThetaEstimate]:
    """Monte Carlo estimate of ``P(theta(0, Y - eps) > T)``.

    Several ``eps`` values may be passed at once; they are evaluated on the
    same set of paths.  Hitting is checked at grid points only.
    """
    many = not np.isscalar(eps)
    eps_arr = np.atleast_1d(np.asarray(eps, dtype=float))
    if np.any((eps_arr <= 0) | (eps_arr >= p.Y)):
        raise ValueError("eps must lie in (0, Y)")
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    alive = _survival_counts(p.Y - eps_arr, T, dt, seed, n_paths, p, batch_size, threads)
    out = []
    for e, col in zip(eps_arr, alive.T):
        ps = float(col.mean())
        out.append(ThetaEstimate(float(e), T, ps, math.sqrt(ps * (1 - ps) / n_paths), n_paths, dt, seed))
    return out if many else out[0]


# --------------------------------------------------------------------------
# Representation of u(0, Y - eps, 0) through boundary fluxes

_T_RULE = 20
_Y_NODES, _Y_WEIGHTS = np.polynomial.legendre.leggauss(48)
_T_FLOOR = 1e-6


def _t_quadrature(T: float, n: int = _T_RULE) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes on dyadic panels ``[T 2^-(j+1), T 2^-j]`` down to ``1e-6``."""
    x, wt = np.polynomial.legendre.leggauss(n)
    edges = [T]
    while edges[-1] / 2 >= _T_FLOOR:
        edges.append(edges[-1] / 2)
    edges.append(0.0)
    a = np.array(edges[1:])
    b = np.array(edges[:-1])
    half = 0.5 * (b - a)
    t = (0.5 * (a + b))[:, None] + half[:, None] * x
    w = half[:, None] * wt
    return t.ravel(), w.ravel()


def _trace_at(u: GridFunction, side: int, t: float) -> np.ndarray:
    trace = u.top if side > 0 else u.bottom
    x = t / u.grid.T * u.grid.n_t
    n = min(int(x), u.grid.n_t - 1)
    a = x - n
    return (1 - a) * trace[:, n] + a * trace[:, n + 1]


def boundary_flux(u: GridFunction, eps: float, side: int, t_rule: int = _T_RULE) -> float:
    """``int_0^T int y u(y, side*Y, t) p^eps(y, side*Y, t) dy dt`` over the inflow half-line.

    ``side = +1`` integrates ``y < 0`` on ``z = Y``, ``side = -1`` integrates
    ``y > 0`` on ``z = -Y``.  The density is split as the ``z`` marginal times
    the conditional law of ``y``; the inner integral uses Gauss-Legendre nodes
    on ``+-9`` conditional standard deviations.
    """
    p = u.params
    T = u.grid.T
    t_nodes, t_w = _t_quadrature(T, t_rule)
    mo = gauss.moments(t_nodes, eps, p)
    zb = side * p.Y
    # Y - m without cancellation: Y (1 - f) + eps f
    if side > 0:
        dz_mean = p.Y * gauss.one_minus_f(t_nodes, p) + eps * gauss.f_func(t_nodes, p)
    else:
        dz_mean = zb - mo.m
    sz = mo.sigma_z
    log_marg = -0.5 * (dz_mean / sz) ** 2 - np.log(math.sqrt(2 * np.pi) * sz)
    mu = mo.q + mo.cov_yz / mo.var_z * dz_mean
    sc = np.sqrt(mo.var_y * (1.0 - mo.rho**2))
    total = 0.0
    for t, w, lm, m_c, s_c in zip(t_nodes, t_w, log_marg, mu, sc):
        if lm < -700.0:
            continue
        lo, hi = m_c - 9 * s_c, m_c + 9 * s_c
        if side > 0:
            hi = min(hi, 0.0)
            lo = max(lo, u.y[0])
        else:
            lo = max(lo, 0.0)
            hi = min(hi, u.y[-1])
        if hi <= lo:
            continue
        yy = 0.5 * (lo + hi) + 0.5 * (hi - lo) * _Y_NODES
        uu = np.interp(yy, u.y, _trace_at(u, side, t))
        cond = np.exp(-0.5 * ((yy - m_c) / s_c) ** 2) / (math.sqrt(2 * np.pi) * s_c)
        inner = 0.5 * (hi - lo) * np.dot(_Y_WEIGHTS, yy * uu * cond)
        total += w * math.exp(lm) * inner
    return float(total)


@dataclass(frozen=True)
class Lemma1Terms:
    """The three pieces of ``u(0, Y - eps, 0) = H + I + J`` and the PDE value itself.

    ``p0_top_direct`` is the top-boundary flux of ``p^0`` by direct quadrature;
    ``p0_top`` is the value used in ``I``, taken from the ``p^0`` flux balance.
    Their gap measures how badly the grid resolves the corner ``(0, Y)``.
    """

    eps: float
    H: float
    I: float
    J: float
    u_pde: float
    p0_top: float
    p0_top_direct: float

    @property
    def total(self) -> float:
        return self.H + self.I + self.J

    @property
    def rel_error(self) -> float:
        return abs(self.total - self.u_pde) / abs(self.u_pde)


def _checked_flux(u: GridFunction, eps: float, side: int, rtol: float, atol: float) -> float:
    fine = boundary_flux(u, eps, side)
    coarse = boundary_flux(u, eps, side, t_rule=_T_RULE // 2)
    err = abs(fine - coarse)
    if err > atol + rtol * abs(fine):
        raise QuadratureError(
            f"boundary flux (eps={eps}, side={side}) not converged: |diff| = {err:.3e}", err
        )
    return fine


def lemma1_terms(u: GridFunction, eps: float, rtol: float = 1e-4, atol: float = 1e-10) -> Lemma1Terms:
    """Evaluate ``H``, ``I`` and ``J`` from the boundary traces of ``u``.

    ``H`` is the difference of the strip masses at ``T``.  ``J`` is the
    difference of the bottom fluxes at ``eps`` and ``0``.  ``I`` is the top
    flux at ``eps`` minus the top flux of ``p^0``; the latter concentrates on
    the corner where ``u`` is singular, so it is taken from the balance
    ``0 = mass_0(T) + top_0 - bottom_0`` of the ``p^0`` fluxes instead of
    being integrated directly.  Every flux is also evaluated with a halved
    time rule; a disagreement beyond ``atol + rtol |value|`` raises
    :class:`QuadratureError`.
    """
    p = u.params
    if not 0 <= eps < p.Y:
        raise ValueError("eps must lie in [0, Y)")
    T = u.grid.T
    top_direct = _checked_flux(u, 0.0, +1, rtol, atol)
    if eps == 0:
        # the ratio factor is identically 1, every integrand vanishes
        return Lemma1Terms(0.0, 0.0, 0.0, 0.0, u_probe(u, 0.0), top_direct, top_direct)
    mass_e = float(gauss.strip_mass(T, eps, p))
    mass_0 = float(gauss.strip_mass(T, 0.0, p))
    bottom_e = _checked_flux(u, eps, -1, rtol, atol)
    bottom_0 = _checked_flux(u, 0.0, -1, rtol, atol)
    top_0 = bottom_0 - mass_0
    I = _checked_flux(u, eps, +1, rtol, atol) - top_0
    J = -(bottom_e - bottom_0)
    return Lemma1Terms(
        eps=float(eps),
        H=mass_e - mass_0,
        I=I,
        J=J,
        u_pde=u_probe(u, eps),
        p0_top=top_0,
        p0_top_direct=top_direct,
    )


def lemma1_integrals(u: GridFunction, eps: float, p: OscillatorParams | None = None) -> tuple[float, float, float]:
    """``(H, I, J)`` at ``eps``; see :func:`lemma1_terms` for the method."""
    if p is not None and p != u.params:
        raise ValueError("parameters differ from those u was solved with")
    r = lemma1_terms(u, eps)
    return r.H, r.I, r.J


@dataclass(frozen=True)
class BlowupRow:
    eps: float
    H_over_eps: float
    I_over_eps: float
    J_over_eps: float
    u_over_eps: float


@dataclass(frozen=True)
class BlowupTable:
    """Rates along decreasing ``eps`` with the blow-up verdicts.

    ``I/eps`` and ``u/eps`` must increase strictly; ``|H/eps|`` and
    ``|J/eps|`` must vary by less than ``20%`` (max over min) on the last
    three rows.
    """

    rows: list[BlowupRow]
    terms: list[Lemma1Terms]
    u_increasing: bool
    I_increasing: bool
    H_stable: bool
    J_stable: bool
    H_variation: float
    J_variation: float

    @property
    def passed(self) -> bool:
        return self.u_increasing and self.I_increasing and self.H_stable and self.J_stable


def _variation(x: np.ndarray) -> float:
    a = np.abs(x)
    if a.min() == 0:
        return math.inf if a.max() > 0 else 0.0
    return float(a.max() / a.min() - 1.0)


def blowup_diagnostic(eps_list, u: GridFunction, p: OscillatorParams | None = None, spread: float = 0.2) -> BlowupTable:
    """:func:`lemma1_terms` for each ``eps`` of a strictly decreasing list, divided by ``eps``."""
    eps_arr = np.asarray(eps_list, dtype=float)
    if eps_arr.size < 3 or np.any(np.diff(eps_arr) >= 0):
        raise ValueError("eps_list must hold at least three strictly decreasing values")
    if p is not None and p != u.params:
        raise ValueError("parameters differ from those u was solved with")
    terms = [lemma1_terms(u, float(e)) for e in eps_arr]
    rows = [BlowupRow(t.eps, t.H / t.eps, t.I / t.eps, t.J / t.eps, t.u_pde / t.eps) for t in terms]
    u_r = np.array([r.u_over_eps for r in rows])
    i_r = np.array([r.I_over_eps for r in rows])
    hv = _variation(np.array([r.H_over_eps for r in rows[-3:]]))
    jv = _variation(np.array([r.J_over_eps for r in rows[-3:]]))
    return BlowupTable(
        rows=rows,
        terms=terms,
        u_increasing=bool(np.all(np.diff(u_r) > 0)),
        I_increasing=bool(np.all(np.diff(i_r) > 0)),
        H_stable=hv < spread,
        J_stable=jv < spread,
        H_variation=hv,
        J_variation=jv,
    )
