import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vhjlab.closed_forms import heat_kernel
from vhjlab.grid import Field, InitialDatum, RadialGrid, integral, lp_norm, sample_datum
from vhjlab.solver import (ProblemSpec, SchemeConfig, SchemeError, geometric_times,
                           godunov_hamiltonian, hopf_cole_exact, numerical_hamiltonian, solve,
                           solve_forced_linear, stable_dt, step)

IMEX = SchemeConfig()
EXPLICIT = SchemeConfig(time_integrator="explicit_euler")


# ---------------------------------------------------------------- numerical Hamiltonian

@pytest.mark.parametrize("p,expected", [(-2.0, 2 ** 1.5), (0.0, 0.0), (3.0, 3 ** 1.5)])
def test_flux_consistent(p, expected):
    assert numerical_hamiltonian(p, p, 1.5) == pytest.approx(expected)


def test_flux_values():
    assert numerical_hamiltonian(1.0, 1.0, 2.0) == 1.0
    assert numerical_hamiltonian(-1.0, 1.0, 2.0) == 0.0
    assert numerical_hamiltonian(2.0, -1.0, 1.5) == pytest.approx(2 ** 1.5)


@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 5), st.floats(1.01, 3))
def test_flux_monotone(a, b, d, q):
    # nondecreasing in the backward slope, nonincreasing in the forward slope
    assert numerical_hamiltonian(a + d, b, q) >= numerical_hamiltonian(a, b, q)
    assert numerical_hamiltonian(a, b + d, q) <= numerical_hamiltonian(a, b, q)


def test_discrete_hamiltonian_of_linear_profile():
    h = 0.1
    u = 3.0 - 0.5 * np.arange(31) * h
    H = godunov_hamiltonian(u, h, 2.0)
    assert np.allclose(H[1:-1], 0.25) and H[-1] == 0.0


# ---------------------------------------------------------------- configuration

@pytest.mark.parametrize("kwargs", [dict(cfl_safety=0.0), dict(cfl_safety=1.5),
                                    dict(time_integrator="rk4"), dict(dt_max=0.0),
                                    dict(boundary="periodic"), dict(hamiltonian_floor=-1.0)])
def test_scheme_config_validation(kwargs):
    with pytest.raises(ValueError):
        SchemeConfig(**kwargs)


def test_problem_spec_validation():
    g = RadialGrid(1, 100, 0.1)
    d = InitialDatum.gaussian()
    with pytest.raises(ValueError):
        ProblemSpec(1.0, g, d, 1.0)
    with pytest.raises(ValueError):
        ProblemSpec(1.5, g, d, 0.0)
    with pytest.raises(ValueError):
        ProblemSpec(1.5, g, d, math.inf)


def test_geometric_schedule():
    t = geometric_times(0.01, 100.0)
    assert t[0] == 0.01 and t[-1] == pytest.approx(100.0)
    assert len(t) == 33  # 8 per decade over four decades plus the start
    assert np.all(np.diff(t) > 0)
    assert geometric_times(1.0, 2.5, 2.0)[-1] == 2.5
    with pytest.raises(ValueError):
        geometric_times(0.0, 1.0)


# ---------------------------------------------------------------- steps

def _spec(values, q=1.5, h=0.1, N=1):
    grid = RadialGrid(N, len(values) - 1, h)
    f = Field(grid, values)
    return f, ProblemSpec(q, grid, f, 1.0)


@pytest.mark.parametrize("cfg", [IMEX, EXPLICIT])
def test_zero_is_equilibrium(cfg):
    f, spec = _spec(np.zeros(101))
    for _ in range(5):
        f = step(f, 0.004, spec, cfg)
    assert np.all(f.values == 0)


@pytest.mark.parametrize("integrator", ["imex", "explicit_euler"])
def test_constant_is_exact_with_neumann(integrator):
    cfg = SchemeConfig(time_integrator=integrator, boundary="neumann")
    f, spec = _spec(np.full(101, 2.5), N=2)
    for _ in range(5):
        f = step(f, 0.002, spec, cfg)
    assert np.allclose(f.values, 2.5, atol=1e-13)


def test_cfl_violation_raises():
    f, spec = _spec(np.exp(-(np.arange(101) * 0.1) ** 2))
    dt = stable_dt(f, spec, EXPLICIT)
    with pytest.raises(SchemeError):
        step(f, 2 * dt, spec, EXPLICIT)


def test_fixed_step_checked_during_run():
    grid = RadialGrid(1, 100, 0.1)
    spec = ProblemSpec(1.5, grid, InitialDatum.gaussian(), 1.0)
    with pytest.raises(SchemeError):
        solve(spec, EXPLICIT, [1.0], dt=0.1)


smooth_data = st.lists(st.floats(-3, 3), min_size=6, max_size=6)


def _profile(coeffs, h=0.1, M=80):
    # a smooth radial profile vanishing at the boundary
    r = np.arange(M + 1) * h
    x = r / r[-1]
    vals = sum(c * np.cos((k + 0.5) * math.pi * x) for k, c in enumerate(coeffs))
    return vals


@pytest.mark.parametrize("cfg", [IMEX, EXPLICIT])
@given(coeffs=smooth_data, q=st.floats(1.1, 2.5), N=st.sampled_from([1, 2, 3]))
def test_max_principle_nonnegative(cfg, coeffs, q, N):
    u0 = np.abs(_profile(coeffs))
    u0[-1] = 0.0
    f, spec = _spec(u0, q=q, N=N)
    dt = stable_dt(f, spec, cfg)
    g = step(f, dt, spec, cfg)
    assert g.values.max() <= f.values.max() * (1 + 1e-12) + 1e-14
    assert g.values.min() >= -1e-14


@pytest.mark.parametrize("cfg", [IMEX, EXPLICIT])
@given(coeffs=smooth_data, bump=smooth_data, q=st.floats(1.1, 2.5), N=st.sampled_from([1, 2, 3]))
def test_comparison_principle(cfg, coeffs, bump, q, N):
    u0 = _profile(coeffs)
    v0 = u0 + np.abs(_profile(bump))
    u0[-1] = v0[-1] = 0.0
    fu, spec = _spec(u0, q=q, N=N)
    fv = Field(fu.grid, v0)
    dt = min(stable_dt(fu, spec, cfg), stable_dt(fv, spec, cfg))
    gu, gv = step(fu, dt, spec, cfg), step(fv, dt, spec, cfg)
    assert np.all(gu.values <= gv.values + 1e-12)


# ---------------------------------------------------------------- runs

def test_mass_nonincreasing_for_nonnegative_data():
    grid = RadialGrid.from_radius(40, 0.05)
    spec = ProblemSpec(1.8, grid, InitialDatum.gaussian(1.0, 1.0), 10.0)
    traj = solve(spec, IMEX, geometric_times(0.01, 10.0))
    mass = np.array([integral(f) for f in traj])
    assert np.all(np.diff(mass) <= 1e-14)


def test_l1_nondecreasing_for_nonpositive_data():
    grid = RadialGrid.from_radius(40, 0.05)
    spec = ProblemSpec(1.5, grid, InitialDatum.smooth_bump(-2.0, 1.0), 10.0)
    traj = solve(spec, IMEX, geometric_times(0.01, 10.0))
    l1 = np.array([lp_norm(f, 1) for f in traj])
    assert np.all(np.diff(l1) >= -1e-14)


def test_mass_identity_closes():
    grid = RadialGrid.from_radius(40, 0.05)
    spec = ProblemSpec(1.8, grid, InitialDatum.gaussian(1.0, 1.0), 10.0)
    traj = solve(spec, IMEX, geometric_times(0.1, 10.0))
    mass = np.array([integral(f) for f in traj])
    residual = mass + np.array(traj.dissipation) - mass[0]
    # without boundary losses, I(t) + D(t) = I(0) up to rounding
    assert np.max(np.abs(residual)) < 1e-10
    assert np.allclose(traj.boundary_flux, -residual, atol=1e-12)


def test_runs_are_bit_identical():
    grid = RadialGrid.from_radius(20, 0.05)
    spec = ProblemSpec(1.5, grid, InitialDatum.smooth_bump(-3.0, 1.0), 2.0)
    a = solve(spec, IMEX, geometric_times(0.01, 2.0))
    b = solve(spec, IMEX, geometric_times(0.01, 2.0))
    assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))


def test_trajectory_interpolation():
    grid = RadialGrid.from_radius(20, 0.1)
    spec = ProblemSpec(1.5, grid, InitialDatum.gaussian(), 1.0)
    traj = solve(spec, IMEX, [0.5, 1.0])
    mid = traj.at(0.75)
    assert np.allclose(mid.values, 0.5 * (traj[1].values + traj[2].values))
    assert traj.at(0.5) is traj[1]
    with pytest.raises(ValueError):
        traj.at(2.0)


def test_contamination_flagged_on_small_grid():
    grid = RadialGrid.from_radius(5, 0.1)
    spec = ProblemSpec(1.8, grid, InitialDatum.gaussian(), 20.0)
    traj = solve(spec, IMEX, geometric_times(0.1, 20.0))
    assert traj.contaminated_at is not None and traj.warnings


# ---------------------------------------------------------------- forced-linear mode

def test_heat_kernel_self_evolution():
    grid = RadialGrid.from_radius(40, 0.05)
    u0 = Field(grid, heat_kernel(grid.nodes, 1.0, 1), 1.0)
    traj = solve_forced_linear(u0, lambda r, t, u: np.zeros_like(r), [2.0, 5.0],
                               SchemeConfig(dt_max=0.005))
    for f in traj.snapshots[1:]:
        assert np.max(np.abs(f.values - heat_kernel(grid.nodes, f.time, 1))) < 2e-4
    assert integral(traj[-1]) == pytest.approx(integral(u0), abs=1e-10)


def test_feedback_forcing_reproduces_solve():
    q, dt = 1.6, 1e-3
    grid = RadialGrid.from_radius(10, 0.05)
    spec = ProblemSpec(q, grid, InitialDatum.gaussian(2.0, 1.0), 0.5)
    ref = solve(spec, IMEX, [0.25, 0.5], dt=dt)
    h = grid.spacing

    def feedback(r, t, u):
        return -godunov_hamiltonian(u, h, q)

    forced = solve_forced_linear(spec.initial_field(), feedback, [0.25, 0.5], IMEX, dt=dt)
    for a, b in zip(ref, forced):
        assert np.allclose(a.values, b.values, atol=1e-13)
    assert np.allclose(ref.dissipation, forced.dissipation, rtol=1e-12)


# ---------------------------------------------------------------- Hopf-Cole oracle

def test_oracle_of_zero():
    f = Field(RadialGrid(1, 100, 0.1), np.zeros(101))
    assert np.allclose(hopf_cole_exact(f, 1.0).values, 0)


@given(st.floats(0.05, 3), st.floats(0.0, 2), st.floats(0.1, 2))
def test_oracle_monotone(A, extra, t):
    grid = RadialGrid.from_radius(8, 0.1)
    u0 = sample_datum(InitialDatum.smooth_bump(-A - extra, 1.0), grid)
    v0 = sample_datum(InitialDatum.smooth_bump(-A, 1.0), grid)
    assert np.all(hopf_cole_exact(u0, t).values <= hopf_cole_exact(v0, t).values + 1e-14)


def test_oracle_rejects_other_exponents():
    f = Field(RadialGrid(1, 100, 0.1), np.zeros(101))
    with pytest.raises(ValueError):
        hopf_cole_exact(f, 1.0, q=1.5)
    with pytest.raises(ValueError):
        hopf_cole_exact(Field(RadialGrid(2, 100, 0.1), np.zeros(101)), 1.0)


def test_oracle_agrees_with_scheme_under_refinement():
    errs = []
    for h in (1 / 16, 1 / 32):
        grid = RadialGrid.from_radius(8, h)
        spec = ProblemSpec(2.0, grid, InitialDatum.smooth_bump(-1.0, 1.0), 1.0)
        traj = solve(spec, EXPLICIT, [1.0])
        exact = hopf_cole_exact(spec.initial_field(), 1.0)
        errs.append(np.max(np.abs(traj[-1].values - exact.values)))
    assert errs[1] < errs[0]
