import math

import numpy as np
import pytest

from svi_epp import gauss
from svi_epp.exit_prob import (
    CFLError,
    Grid2D,
    GridFunction,
    blowup_diagnostic,
    elastic_endpoints,
    elastic_flow,
    elastic_flow_closed_form,
    lemma1_integrals,
    lemma1_terms,
    mc_exit_prob,
    solve_u,
    u_probe,
    u_y_left_at_corner,
)
from svi_epp.noise import BrownianPath, PathSpec, generate


def _zero(t_end, dt):
    s = PathSpec(t_end, dt, 0)
    return BrownianPath(np.zeros(s.n_steps), s)


# ---------------------------------------------------------------- elastic flow

def test_elastic_flow_rest(params):
    y, z = elastic_flow(0.0, 0.0, _zero(1.0, 1e-3), params)
    assert np.all(y == 0) and np.all(z == 0)


def test_elastic_flow_first_order(params):
    errs = []
    for dt in (1e-3, 5e-4):
        path = _zero(1.0, dt)
        y, z = elastic_flow(0.3, 0.8, path, params)
        ye, ze = elastic_flow_closed_form(0.3, 0.8, path.times(), params)
        errs.append(max(np.max(np.abs(y - ye)), np.max(np.abs(z - ze))))
    assert errs[0] < 5e-3
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.05)


def test_elastic_flow_leaves_strip(params):
    y, z = elastic_flow(3.0, 0.9, _zero(1.0, 1e-3), params)
    assert z.max() > params.Y


def test_elastic_marginals_match_moments(params):
    n, eps = 100_000, 0.1
    y, z = elastic_endpoints(0.0, params.Y - eps, 1.0, 1e-3, 4, n, params)
    mo = gauss.moments(1.0, eps, params)
    for x, mean, var in ((y, mo.q, mo.var_y), (z, mo.m, mo.var_z)):
        assert abs(x.mean() - mean) < 4 * math.sqrt(var / n)
        # the Euler scheme biases the variance by O(dt)
        assert abs(x.var() - var) < 4 * var * math.sqrt(2 / n) + 2e-3 * var


def test_closed_form_recovers_moments(params):
    t = np.linspace(0, 2, 5)
    y, z = elastic_flow_closed_form(0.0, 0.9, t, params)
    mo = gauss.moments(t, 0.1, params)
    np.testing.assert_allclose(z, mo.m, atol=1e-14)
    np.testing.assert_allclose(y, mo.q, atol=1e-14)


# ---------------------------------------------------------------- Monte Carlo

def test_mc_std_error_formula_and_range(params):
    e = mc_exit_prob(0.2, 1.0, 2000, 1e-3, 1, params)
    assert 0 <= e.p_survive <= 1
    assert e.std_error == pytest.approx(math.sqrt(e.p_survive * (1 - e.p_survive) / 2000))


def test_mc_monotone_in_distance(params):
    near, far = mc_exit_prob([0.05, 0.95], 1.0, 4000, 1e-3, 2, params)
    assert far.p_survive > near.p_survive


def test_mc_std_error_scaling(params):
    a = mc_exit_prob(0.1, 1.0, 2000, 1e-3, 3, params)
    b = mc_exit_prob(0.1, 1.0, 8000, 1e-3, 3, params)
    assert a.std_error / b.std_error == pytest.approx(2.0, rel=0.2)


def test_mc_boundary_start_absorbed(params):
    e = mc_exit_prob(1e-6, 1.0, 2000, 1e-4, 4, params)
    assert e.p_survive < 0.25  # discrete monitoring overstates survival


def test_mc_thread_independent(params):
    a = mc_exit_prob([0.1, 0.2], 1.0, 1500, 1e-3, 5, params, threads=1)
    b = mc_exit_prob([0.1, 0.2], 1.0, 1500, 1e-3, 5, params, threads=3, batch_size=100)
    assert a == b


def test_mc_rejects_eps(params):
    with pytest.raises(ValueError):
        mc_exit_prob(1.0, 1.0, 100, 1e-3, 0, params)


# ---------------------------------------------------------------- PDE on a coarse grid

def test_grid_validation(params):
    with pytest.raises(ValueError):
        Grid2D(y_min=1.0)
    with pytest.raises(ValueError):
        Grid2D(n_z=8)
    g = Grid2D.for_params(params, T=2.0)
    assert g.cfl(params) <= 0.45 + 1e-9 and g.T == 2.0
    z = g.z(params)
    assert z[0] == -params.Y and z[-1] == params.Y


def test_cfl_error_suggests_steps(params):
    g = Grid2D(n_t=100)
    with pytest.raises(CFLError) as info:
        solve_u(g, params)
    fixed = Grid2D(n_t=info.value.suggested_n_t)
    assert fixed.cfl(params) <= 0.5


def test_terminal_and_boundary_data(u_coarse: GridFunction):
    assert np.all(u_coarse.slice_at(1.0) == 1.0)
    pos, neg = u_coarse.y > 0, u_coarse.y < 0
    assert np.all(u_coarse.top[pos, :-1] == 0.0)
    assert np.all(u_coarse.bottom[neg, :-1] == 0.0)
    assert np.all(u_coarse.top[:, -1] == 1.0)


def test_bounds_and_monotone_in_time(u_coarse):
    v = u_coarse.values
    assert v.min() >= 0.0 and v.max() <= 1.0
    assert np.all(np.diff(v, axis=2) >= -1e-12)
    assert np.all(np.diff(u_coarse.top, axis=1) >= -1e-12)
    assert u_coarse.max_increase_backward <= 1e-12


def test_mirror_symmetry(u_coarse):
    v = u_coarse.values
    assert np.max(np.abs(v - v[::-1, ::-1, :])) < 1e-12


def test_first_order_scheme_runs(params):
    u = solve_u(Grid2D(n_y=41, n_z=41, n_t=200), params, save_times=[], order=1)
    assert 0 < u_probe(u, 0.3) < 1
    with pytest.raises(ValueError):
        solve_u(Grid2D(n_y=41, n_z=41, n_t=200), params, order=3)


def test_probe_errors_and_limits(u_coarse, params):
    with pytest.raises(ValueError):
        u_probe(u_coarse, -0.1)
    with pytest.raises(ValueError):
        u_coarse.interp(7.0, 0.0)
    with pytest.raises(KeyError):
        u_coarse.slice_at(0.123)
    assert u_probe(u_coarse, 0.0) == 0.0


def test_lemma1_zero_eps(u_coarse):
    assert lemma1_integrals(u_coarse, 0.0) == (0.0, 0.0, 0.0)


def test_blowup_input_checks(u_coarse):
    with pytest.raises(ValueError):
        blowup_diagnostic([0.1, 0.2, 0.05], u_coarse)
    with pytest.raises(ValueError):
        blowup_diagnostic([0.2, 0.1], u_coarse)


# ---------------------------------------------------------------- PDE on the default grid

@pytest.mark.slow
def test_probe_monotone_in_eps(u_default, params):
    eps = np.linspace(0.005, 0.5, 40)
    vals = np.array([u_probe(u_default, e) for e in eps])
    assert np.all(np.diff(vals) >= 0)
    assert u_probe(u_default, 1e-6) < 0.05


@pytest.mark.slow
def test_probe_against_monte_carlo(u_default, params):
    est = mc_exit_prob([0.05, 0.1, 0.2], 1.0, 20_000, 1e-4, 11, params)
    for e in est:
        assert abs(u_probe(u_default, e.eps) - e.p_survive) <= max(3 * e.std_error, 1e-2)


@pytest.mark.slow
def test_lemma1_terms(u_default):
    r = lemma1_terms(u_default, 0.1)
    assert r.I > 0 and r.H > 0
    assert r.rel_error < 0.05
    assert (r.H, r.I, r.J) == lemma1_integrals(u_default, 0.1)


@pytest.mark.slow
def test_corner_slope_negative(u_default):
    assert u_y_left_at_corner(u_default) < 0
