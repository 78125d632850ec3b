import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from vhjlab.closed_forms import decay_exponent_a
from vhjlab.grid import Field, RadialGrid, lp_norm, sphere_area
from vhjlab.vss import (TAIL_GATE, VSSError, find_vss, shoot, vss_ode_rhs, w_eval, w_gradient,
                        w_pde_residual)

# fast-decay profile at q = 1.3, N = 1; cross-checked below with a stiff integrator
ALPHA_STAR_Q13 = 2.4164835293
W1_L1_Q13 = 6.81447


@pytest.fixture(scope="module")
def profile():
    return find_vss(1.3, 1)


@pytest.fixture(scope="module")
def profile_2d():
    return find_vss(1.2, 2)


def test_rhs_of_zero():
    assert vss_ode_rhs(0.0, 0.0, 0.0, 1.3, 1) == 0.0
    assert vss_ode_rhs(2.0, 0.0, 0.0, 1.3, 3) == 0.0


@pytest.mark.parametrize("N", [1, 2, 3])
def test_rhs_regularised_at_origin(N):
    q = 1.2
    a = decay_exponent_a(q)
    assert vss_ode_rhs(0.0, 1.7, 0.0, q, N) == pytest.approx(-(a / 2) * 1.7 / N)


def test_small_alpha_stays_small_and_positive():
    t = shoot(1e-4, 1.3, 1, eta_max=1.0)
    assert np.all(t.f > 0) and t.f.max() <= 1e-4


@pytest.mark.parametrize("alpha", [0.1, 1.0, 10.0])
def test_profile_starts_decreasing(alpha):
    t = shoot(alpha, 1.3, 1)
    assert t.f_prime[0] == 0.0
    assert np.all(t.f_prime[1:20] < 0)


def test_shoot_rejects_bad_input():
    with pytest.raises(ValueError):
        shoot(0.0, 1.3, 1)
    with pytest.raises(ValueError):
        shoot(1.0, 1.6, 1)


def test_ladder_without_bracket_fails():
    with pytest.raises(VSSError):
        find_vss(1.3, 1, ladder=(10.0, 100.0))


def test_profile_value(profile):
    assert profile.alpha_star == pytest.approx(ALPHA_STAR_Q13, rel=1e-9)
    assert profile.norm(1) == pytest.approx(W1_L1_Q13, rel=1e-5)
    lo, hi = profile.bracket
    assert lo <= profile.alpha_star <= hi and hi - lo <= 1e-10


def test_profile_fast_decay_gate(profile):
    assert profile.decay_class == "fast"
    g = profile.eta_nodes ** profile.a * profile.f
    assert g[-1] < TAIL_GATE * g.max()
    assert profile.tail_ratio < TAIL_GATE
    assert np.all(profile.f > 0) and np.all(profile.f_prime[1:] < 0)


def test_orientation_confirmed_by_stiff_integrator(profile):
    q, a = 1.3, profile.a

    def rhs(eta, y):
        return [y[1], -(eta / 2) * y[1] - (a / 2) * y[0] + abs(y[1]) ** q]

    def crossing(eta, y):
        return y[0]
    crossing.terminal = True

    def crosses(alpha):
        sol = solve_ivp(rhs, (0, 40), [alpha, 0.0], method="Radau", rtol=1e-11, atol=1e-14,
                        events=crossing)
        return sol.status == 1

    assert crosses(profile.alpha_star * (1 - 1e-6))
    assert not crosses(profile.alpha_star * (1 + 1e-6))


@pytest.mark.parametrize("which", ["profile", "profile_2d"])
def test_mass_balance_identity(which, request):
    # d/dt int W = -int |grad W|^q with int W(t) = t^{-(a-N)/2} int W(1): at t = 1
    # (a - N)/2 int f = int |f'|^q, both against omega_N eta^{N-1}
    p = request.getfixturevalue(which)
    w = sphere_area(p.N) * p.eta_nodes ** (p.N - 1)
    lhs = (p.a - p.N) / 2 * np.trapezoid(w * p.f, p.eta_nodes)
    rhs = np.trapezoid(w * np.abs(p.f_prime) ** p.q, p.eta_nodes)
    assert lhs == pytest.approx(rhs, rel=1e-5)


def test_w_at_unit_time_is_profile(profile):
    assert np.allclose(w_eval(profile.eta_nodes[:-1], 1.0, profile), profile.f[:-1], rtol=1e-12)


@pytest.mark.parametrize("t", [0.3, 1.0, 4.0, 50.0])
def test_w_origin_value(profile, t):
    assert w_eval(0.0, t, profile) == pytest.approx(t ** (-profile.a / 2) * profile.alpha_star)


def test_w_sup_decay(profile):
    r = np.linspace(0, 20, 2001)
    ratio = w_eval(r, 4.0, profile).max() / w_eval(r, 1.0, profile).max()
    assert ratio == pytest.approx(4 ** (-profile.a / 2), rel=1e-12)


def test_w_mass_scaling(profile):
    grid = RadialGrid.from_radius(200, 0.005)
    m1 = lp_norm(Field(grid, w_eval(grid.nodes, 1.0, profile)), 1)
    m4 = lp_norm(Field(grid, w_eval(grid.nodes, 4.0, profile)), 1)
    assert m4 == pytest.approx(4 ** (-(profile.a - 1) / 2) * m1, rel=1e-6)
    assert m1 == pytest.approx(profile.norm(1), rel=1e-6)


def test_w_gradient_matches_finite_difference(profile):
    r = np.linspace(0.2, 5, 25)
    d = 1e-6
    fd = (w_eval(r + d, 2.0, profile) - w_eval(r - d, 2.0, profile)) / (2 * d)
    assert np.allclose(w_gradient(r, 2.0, profile), fd, rtol=1e-6, atol=1e-10)


def test_w_vanishes_beyond_table(profile):
    assert w_eval(profile.eta_max * 2, 1.0, profile) == 0.0
    with pytest.raises(ValueError):
        w_eval(1.0, 0.0, profile)


def test_pde_residual_halves_under_refinement(profile):
    r = np.linspace(0.5, 2.0, 16)[:, None]
    t = np.linspace(0.5, 2.0, 16)[None, :]
    coarse = np.abs(w_pde_residual(profile, r, t, 0.02)).max()
    fine = np.abs(w_pde_residual(profile, r, t, 0.01)).max()
    assert fine <= 0.5 * coarse
    # centred differences: the residual is pure truncation error, second order in h
    assert math.log2(coarse / fine) == pytest.approx(2.0, abs=0.1)


def test_summary_fields(profile):
    s = profile.summary()
    assert s["alpha_star"] == profile.alpha_star and s["decay_class"] == "fast"
    assert s["norm_inf"] == pytest.approx(profile.alpha_star)
    assert {"norm_1", "norm_2", "tail_ratio", "bracket", "a"} <= set(s)
