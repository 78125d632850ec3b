"""Monotone finite-difference evolution of ``u_t - lap u + |grad u|^q = 0``.

The Hamiltonian ``|u_r|^q`` is discretised with the Godunov flux for a
convex Hamiltonian with minimum at 0, the Laplacian with centred radial
differences.  Two integrators are offered: fully explicit Euler and an
IMEX variant (backward-Euler diffusion, explicit Hamiltonian).  Both are
monotone under their step restriction, so the discrete maximum and
comparison principles hold.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import lapack

from .closed_forms import heat_kernel
from .grid import Field, InitialDatum, RadialGrid, sample_datum

log = logging.getLogger(__name__)

INTEGRATORS = ("explicit_euler", "imex")
# neumann exists for consistency checks on constants only
BOUNDARIES = ("dirichlet", "neumann")


class SchemeError(RuntimeError):
    """The discrete state left the admissible set (non-finite values or CFL breach)."""


@dataclass(frozen=True)
class SchemeConfig:
    cfl_safety: float = 0.9
    time_integrator: str = "imex"
    hamiltonian_floor: float = 1e-12
    dt_max: float = 0.05
    # |u(R-h)| above tail_tolerance * ||u||_inf is logged; above
    # contamination_tolerance * ||u||_inf the run leaves its validity window
    tail_tolerance: float = 1e-8
    contamination_tolerance: float = 1e-3
    boundary: str = "dirichlet"

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ValueError(f"cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if self.time_integrator not in INTEGRATORS:
            raise ValueError(f"unknown integrator {self.time_integrator!r}")
        if self.hamiltonian_floor < 0:
            raise ValueError("hamiltonian_floor must be >= 0")
        if not self.dt_max > 0:
            raise ValueError("dt_max must be positive")
        if self.boundary not in BOUNDARIES:
            raise ValueError(f"unknown boundary condition {self.boundary!r}")


@dataclass(frozen=True)
class ProblemSpec:
    q: float
    grid: RadialGrid
    datum: Union[InitialDatum, Field]
    horizon: float

    def __post_init__(self):
        if not self.q > 1:
            raise ValueError(f"q must exceed 1, got {self.q}")
        if not (self.horizon > 0 and math.isfinite(self.horizon)):
            raise ValueError("horizon must be positive and finite")

    @property
    def N(self) -> int:
        return self.grid.dimension

    def initial_field(self) -> Field:
        if isinstance(self.datum, Field):
            return self.datum
        return sample_datum(self.datum, self.grid)


@dataclass
class Trajectory:
    snapshots: list = field(default_factory=list)
    # cumulative int_0^t int |grad u|^q (or -int int f in forced mode) at each snapshot
    dissipation: list = field(default_factory=list)
    boundary_flux: list = field(default_factory=list)
    steps: int = 0
    warnings: list = field(default_factory=list)
    contaminated_at: Optional[float] = None

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def __len__(self):
        return len(self.snapshots)

    def __getitem__(self, i) -> Field:
        return self.snapshots[i]

    def at(self, t: float) -> Field:
        """Snapshot at time ``t``, linearly interpolated between neighbours."""
        times = self.times
        if t < times[0] - 1e-12 or t > times[-1] * (1 + 1e-12):
            raise ValueError(f"time {t} outside trajectory [{times[0]}, {times[-1]}]")
        k = int(np.searchsorted(times, t))
        if k < len(times) and math.isclose(times[k], t, rel_tol=1e-12, abs_tol=1e-14):
            return self.snapshots[k]
        lo, hi = self.snapshots[k - 1], self.snapshots[k]
        w = (t - lo.time) / (hi.time - lo.time)
        return Field(lo.grid, (1 - w) * lo.values + w * hi.values, t)


def numerical_hamiltonian(p_minus, p_plus, q: float):
    """Godunov flux for ``H(p) = |p|^q``: ``max((p_-)^+^q, (p_+)^-^q)``."""
    return np.maximum(np.maximum(p_minus, 0.0) ** q, np.maximum(-np.asarray(p_plus), 0.0) ** q)


def _extended(u: np.ndarray, boundary: str) -> np.ndarray:
    # mirrored ghost at the origin; mirrored (neumann) or zero ghost at R
    right = u[-2] if boundary == "neumann" else 0.0
    return np.concatenate(([u[1]], u, [right]))


def godunov_hamiltonian(u: np.ndarray, h: float, q: float, boundary: str = "dirichlet"):
    """Discrete ``|grad u|^q`` at every node (0 on a Dirichlet node)."""
    d = np.diff(_extended(u, boundary)) / h
    H = numerical_hamiltonian(d[:-1], d[1:], q)
    if boundary == "dirichlet":
        H[-1] = 0.0
    return H


class _Stepper:
    """Grid-dependent operators shared by every step of one run."""

    def __init__(self, grid: RadialGrid, q: Optional[float], cfg: SchemeConfig):
        self.grid, self.q, self.cfg = grid, q, cfg
        M, h, N = grid.node_count, grid.spacing, grid.dimension
        self.n = M if cfg.boundary == "dirichlet" else M + 1
        n = self.n
        j = np.arange(n, dtype=float)
        lower = np.zeros(n)
        upper = np.zeros(n)
        main = np.full(n, -2.0 / h ** 2)
        c = np.zeros(n)
        c[1:] = (N - 1) / (2 * j[1:])
        lower[1:] = (1 - c[1:]) / h ** 2
        upper[1:] = (1 + c[1:]) / h ** 2
        main[0], upper[0] = -2.0 * N / h ** 2, 2.0 * N / h ** 2
        if cfg.boundary == "neumann":
            lower[M], upper[M] = 2.0 / h ** 2, 0.0
        else:
            upper[n - 1] = 0.0  # couples to u_M = 0
        self.lower, self.main, self.upper = lower, main, upper
        self.weights = grid.weights
        self._factor_dt = None
        self._factors = None

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        n = self.n
        out = np.zeros_like(u)
        v = u[:n]
        out[:n] = self.main * v
        out[:n - 1] += self.upper[:n - 1] * u[1:n]
        out[1:n] += self.lower[1:] * u[:n - 1]
        return out

    def hamiltonian(self, u: np.ndarray) -> np.ndarray:
        return godunov_hamiltonian(u, self.grid.spacing, self.q, self.cfg.boundary)

    def max_slope(self, u: np.ndarray) -> float:
        return float(np.abs(np.diff(u)).max()) / self.grid.spacing

    def cfl_bound(self, u: np.ndarray, nonlinear: bool = True) -> float:
        h, N = self.grid.spacing, self.grid.dimension
        rate = 0.0
        if nonlinear:
            slope = self.max_slope(u) + self.cfg.hamiltonian_floor
            rate = self.q * slope ** (self.q - 1) / h
        if self.cfg.time_integrator == "explicit_euler":
            rate += 2.0 * N / h ** 2
        return math.inf if rate == 0 else self.cfg.cfl_safety / rate

    def _solve_implicit(self, rhs: np.ndarray, dt: float) -> np.ndarray:
        if dt != self._factor_dt:
            n = self.n
            dl = -dt * self.lower[1:n]
            d = 1.0 - dt * self.main
            du = -dt * self.upper[:n - 1]
            dl, d, du, du2, ipiv, info = lapack.dgttrf(dl, d, du)
            if info != 0:
                raise SchemeError(f"tridiagonal factorisation failed (info={info})")
            self._factors = (dl, d, du, du2, ipiv)
            self._factor_dt = dt
        x, info = lapack.dgttrs(*self._factors, rhs)
        if info != 0:
            raise SchemeError(f"tridiagonal solve failed (info={info})")
        return x

    def advance(self, u: np.ndarray, dt: float, source: Optional[np.ndarray]):
        """One step; returns the new state and the integrated absorption rate."""
        n = self.n
        if source is None:
            H = self.hamiltonian(u)
            rate = float(np.dot(self.weights[:n], H[:n]))
            forcing = -H
        else:
            forcing = np.array(source, dtype=float)
            rate = -float(np.dot(self.weights[:n], forcing[:n]))
        new = np.zeros_like(u)
        if self.cfg.time_integrator == "explicit_euler":
            new[:n] = u[:n] + dt * (self.laplacian(u)[:n] + forcing[:n])
        else:
            new[:n] = self._solve_implicit(u[:n] + dt * forcing[:n], dt)
        if not np.all(np.isfinite(new)):
            raise SchemeError("non-finite state: grid too coarse or step too large")
        return new, rate


def _check_cfl(stepper: _Stepper, u, dt, nonlinear=True):
    bound = stepper.cfl_bound(u, nonlinear)
    if dt > bound * (1 + 1e-12):
        raise SchemeError(f"time step {dt:.3e} violates the CFL bound {bound:.3e}")


def stable_dt(f: Field, spec: ProblemSpec, cfg: SchemeConfig) -> float:
    """Largest step allowed by the monotonicity (CFL) contract of ``cfg``."""
    return _Stepper(f.grid, spec.q, cfg).cfl_bound(f.values)


def step(f: Field, dt: float, spec: ProblemSpec, cfg: SchemeConfig) -> Field:
    stepper = _Stepper(f.grid, spec.q, cfg)
    u = np.array(f.values)
    if cfg.boundary == "dirichlet":
        u[-1] = 0.0
    _check_cfl(stepper, u, dt)
    new, _ = stepper.advance(u, dt, None)
    return Field(f.grid, new, f.time + dt)


def geometric_times(t0: float, horizon: float, ratio: float = 10 ** (1 / 8)) -> np.ndarray:
    """Output schedule ``t0 * ratio^k`` up to (and including) ``horizon``."""
    if not (t0 > 0 and ratio > 1):
        raise ValueError("need t0 > 0 and ratio > 1")
    k = int(math.floor(math.log(horizon / t0) / math.log(ratio) + 1e-9))
    times = t0 * ratio ** np.arange(k + 1)
    if horizon - times[-1] > 1e-9 * horizon:
        times = np.append(times, horizon)
    return times


def _run(initial: Field, q, cfg: SchemeConfig, output_times, forcing=None, dt=None):
    grid = initial.grid
    stepper = _Stepper(grid, q, cfg)
    u = np.array(initial.values)
    if cfg.boundary == "dirichlet":
        u[-1] = 0.0
    t = initial.time
    times = np.asarray(output_times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ValueError("output times must be strictly increasing")
    times = times[times > t + 1e-14]
    traj = Trajectory()
    diss = flux = 0.0
    nonlinear = forcing is None
    weights = grid.weights

    def record(t_rec):
        traj.snapshots.append(Field(grid, u, t_rec))
        traj.dissipation.append(diss)
        traj.boundary_flux.append(flux)
        _audit_tail(traj, u, t_rec, cfg)

    record(t)
    for target in times:
        while t < target:
            h_step = dt
            if h_step is None:
                h_step = min(stepper.cfl_bound(u, nonlinear), cfg.dt_max)
            else:
                _check_cfl(stepper, u, h_step, nonlinear)
            if target - t <= h_step * (1 + 1e-9):
                h_step = target - t
            # midpoint time keeps the time integral of a manufactured forcing second order
            source = None if forcing is None else forcing(grid.nodes, t + h_step / 2, u)
            mass = float(np.dot(weights, u))
            u, rate = stepper.advance(u, h_step, source)
            diss += h_step * rate
            flux += mass - h_step * rate - float(np.dot(weights, u))
            t = target if h_step == target - t else t + h_step
            traj.steps += 1
        record(float(target))
    return traj


def _audit_tail(traj: Trajectory, u, t, cfg: SchemeConfig):
    peak = float(np.abs(u).max())
    if peak == 0:
        return
    tail = abs(u[-2]) / peak
    if tail > cfg.tail_tolerance and not traj.warnings:
        msg = f"far-field tail |u(R-h)|/||u||_inf = {tail:.2e} at t = {t:.4g}"
        traj.warnings.append(msg)
        log.warning(msg)
    if tail > cfg.contamination_tolerance and traj.contaminated_at is None:
        traj.contaminated_at = t
        log.warning("boundary contamination from t = %.4g (tail ratio %.2e)", t, tail)


def solve(spec: ProblemSpec, cfg: SchemeConfig, output_times: Sequence[float],
          dt: Optional[float] = None) -> Trajectory:
    """Evolve ``spec`` and return snapshots at ``output_times``.

    ``dt`` fixes the time step (it must respect the CFL bound at every step);
    by default the largest monotone step, capped by ``cfg.dt_max``, is used.
    """
    return _run(spec.initial_field(), spec.q, cfg, output_times, dt=dt)


Forcing = Callable[[np.ndarray, float, np.ndarray], np.ndarray]


def solve_forced_linear(u0: Field, forcing: Forcing, output_times: Sequence[float],
                        cfg: SchemeConfig = SchemeConfig(), dt: Optional[float] = None) -> Trajectory:
    """``u_t = lap u + f`` on the same stencil; ``forcing(r, t, u)`` returns nodal values.

    ``forcing`` is called once per step with the step midpoint time and the
    state at the start of the step.  The recorded ``dissipation`` is
    ``-int_0^t int f``.
    """
    return _run(u0, None, cfg, output_times, forcing=forcing, dt=dt)


def hopf_cole_exact(u0: Field, t: float, q: float = 2.0) -> Field:
    """Exact solution at ``q = 2``, ``N = 1``: ``-ln(1 + G(t) * (exp(-u0) - 1))``.

    The convolution is a trapezoid sum over the symmetric extension of the
    radial grid (the datum is assumed to vanish beyond it).
    """
    if q != 2:
        raise ValueError("the Hopf-Cole oracle exists only for q = 2")
    if u0.grid.dimension != 1:
        raise ValueError("the Hopf-Cole oracle is implemented for N = 1 only")
    if t <= 0:
        raise ValueError("t must be positive")
    r, h = u0.r, u0.grid.spacing
    y = np.concatenate((-r[:0:-1], r))
    w0 = np.expm1(-np.concatenate((u0.values[:0:-1], u0.values)))
    wq = np.full(y.shape, h)
    wq[0] = wq[-1] = h / 2
    conv = np.empty_like(r)
    chunk = max(1, 4_000_000 // y.size)
    for s in range(0, r.size, chunk):
        kern = heat_kernel(r[s:s + chunk, None] - y[None, :], t, 1)
        conv[s:s + chunk] = kern @ (wq * w0)
    return Field(u0.grid, -np.log1p(conv), u0.time + t)
