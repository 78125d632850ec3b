"""Measurements on trajectories: norm series, rescaled errors, monitors, regimes.

Trend claims ("this quantity tends to 0") are certified the only way a
finite horizon allows: monotone decrease over the last time decade plus a
bound on the ratio between its end points.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .closed_forms import (critical_exponent, decay_exponent_a, gamma_barrier, heat_kernel,
                           largeness_lhs, max_d2, r_of_u0, sigma_front, smallness_lhs,
                           tau_of_u0, z_profile, z_profile_gradient_mag)
from .grid import (Field, InitialDatum, RadialGrid, gradient_field, integral, laplacian_field,
                   lp_norm, max_hessian_eigenvalue, radial_derivative, sample_datum)
from .solver import (ProblemSpec, SchemeConfig, Trajectory, geometric_times,
                     godunov_hamiltonian, solve)
from .vss import ProfileTable, find_vss, w_eval, w_gradient

VERDICTS = ("DIFFUSION", "VSS_BALANCE", "HJ_DOMINATED", "UNDECIDED")
SERIES_COLUMNS = ("t", "l1", "l2", "linf", "grad_l1", "grad_linf", "mass", "sup_lap",
                  "max_hess_eig", "dissipation")

TREND_RATIO = 0.7
PLATEAU_TOL = 0.02
SATURATION_TOL = 0.25


# --------------------------------------------------------------------------- series

@dataclass(frozen=True)
class NormSeries:
    t: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    grad_l1: np.ndarray
    grad_linf: np.ndarray
    mass: np.ndarray
    sup_lap: np.ndarray
    max_hess_eig: np.ndarray
    dissipation: np.ndarray
    boundary_flux: np.ndarray

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "NormSeries":
        cols = {k: [] for k in ("l1", "l2", "linf", "grad_l1", "grad_linf", "mass",
                                "sup_lap", "max_hess_eig")}
        for f in traj.snapshots:
            g = gradient_field(f)
            cols["l1"].append(lp_norm(f, 1))
            cols["l2"].append(lp_norm(f, 2))
            cols["linf"].append(lp_norm(f, math.inf))
            cols["grad_l1"].append(lp_norm(g, 1))
            cols["grad_linf"].append(lp_norm(g, math.inf))
            cols["mass"].append(integral(f))
            cols["sup_lap"].append(float(laplacian_field(f).values.max()))
            cols["max_hess_eig"].append(max_hessian_eigenvalue(f))
        n = len(traj)
        diss = traj.dissipation if len(traj.dissipation) == n else [math.nan] * n
        flux = traj.boundary_flux if len(traj.boundary_flux) == n else [math.nan] * n
        return cls(t=traj.times, dissipation=np.asarray(diss, dtype=float),
                   boundary_flux=np.asarray(flux, dtype=float),
                   **{k: np.asarray(v) for k, v in cols.items()})

    def identity_residual(self) -> np.ndarray:
        """``I(t) + D(t) - I(0)``: the mass lost through the far-field boundary."""
        return self.mass + self.dissipation - self.mass[0]

    def rows(self):
        for i in range(len(self.t)):
            yield {c: float(getattr(self, c)[i]) for c in SERIES_COLUMNS}


# --------------------------------------------------------------------------- trends

def value_at(t, y, s: float) -> float:
    """``y`` at time ``s``, interpolated linearly in ``log t``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    pos = t > 0
    return float(np.interp(math.log(s), np.log(t[pos]), y[pos]))


@dataclass(frozen=True)
class TrendCheck:
    name: str
    ratio: float  # y(T) / y(T/10)
    monotone: bool  # nonincreasing over the last decade
    max_ratio: float

    @property
    def passed(self) -> bool:
        return self.monotone and math.isfinite(self.ratio) and self.ratio <= self.max_ratio


def last_decade_trend(t, y, name: str = "", max_ratio: float = TREND_RATIO) -> TrendCheck:
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    T = t[-1]
    if t[0] > T / 10 * (1 + 1e-9) or T <= 0:
        raise ValueError(f"{name or 'series'}: window shorter than one decade")
    start = value_at(t, y, T / 10)
    window = y[t >= T / 10 * (1 - 1e-9)]
    monotone = bool(start >= window[0] and np.all(np.diff(window) <= 0))
    ratio = float(y[-1] / start) if start > 0 else math.inf
    return TrendCheck(name, ratio, monotone, max_ratio)


@dataclass(frozen=True)
class PowerFit:
    slope: float
    halfwidth: float
    window: tuple


def decay_rate_fit(t, y, window: Optional[tuple] = None) -> PowerFit:
    """Least-squares slope of ``ln y`` against ``ln t``; 95% confidence halfwidth."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (t[-1] / 10, t[-1])
    lo, hi = window
    if hi < 10 * lo * (1 - 1e-9):
        raise ValueError("fit window must span at least one decade")
    sel = (t >= lo * (1 - 1e-9)) & (t <= hi * (1 + 1e-9))
    if sel.sum() < 3:
        raise ValueError("fewer than three samples in the fit window")
    if np.any(y[sel] <= 0):
        raise ValueError("series must be positive over the fit window")
    res = stats.linregress(np.log(t[sel]), np.log(y[sel]))
    half = float(stats.t.ppf(0.975, sel.sum() - 2) * res.stderr)
    return PowerFit(float(res.slope), half, (float(lo), float(hi)))


# --------------------------------------------------------------------------- I_inf, M_inf

@dataclass(frozen=True)
class IInfinity:
    value: float
    residual: float  # |I(T) - (I(0) - D(T))|
    converged: bool  # dissipation tail small against |I(T)|
    decade_ratio: float  # dissipation gained in the last decade over the one before
    tail: float  # geometric extrapolation of the dissipation still to come


def i_infty_estimate(series: NormSeries, sat_tol: float = SATURATION_TOL) -> IInfinity:
    """``I_inf ~ I(T)``, with ``I(0) - D(T)`` as cross-check.

    Saturation is judged from the dissipation gained per decade: if the
    increments shrink by a factor ``rho < 1`` the remaining dissipation is
    about ``dD rho / (1 - rho)``.  The estimate counts as converged when
    that tail is at most ``sat_tol * |I(T)|``.  A mass decaying like a
    power of ``t`` (nonnegative data, ``q < q_c``) extrapolates to a tail
    equal to ``I(T)`` and is flagged.
    """
    t, I, D = series.t, series.mass, series.dissipation
    T = t[-1]
    value = float(I[-1])
    residual = float(abs(value - (I[0] - D[-1])))
    last = D[-1] - value_at(t, D, T / 10)
    prev = value_at(t, D, T / 10) - value_at(t, D, T / 100)
    if last <= 0:
        rho, tail = 0.0, 0.0
    elif prev <= 0:
        rho, tail = math.inf, math.inf
    else:
        rho = float(last / prev)
        tail = float(last * rho / (1 - rho)) if rho < 1 else math.inf
    converged = bool(abs(value) > 0 and tail <= sat_tol * abs(value))
    return IInfinity(value, residual, converged, rho, tail)


@dataclass(frozen=True)
class MInfinity:
    value: float
    converged: bool  # relative decrease over the last decade below the tolerance
    decade_drop: float
    monotone: bool  # ||u(t)||_inf nonincreasing over the whole run


def m_infty_estimate(series: NormSeries, tol: float = PLATEAU_TOL) -> MInfinity:
    linf = series.linf
    value = float(linf[-1])
    monotone = bool(np.all(np.diff(linf) <= 1e-12 * max(linf[0], 1e-300)))
    if value == 0:
        return MInfinity(0.0, False, math.inf, monotone)
    start = value_at(series.t, linf, series.t[-1] / 10)
    drop = float(1 - value / start)
    return MInfinity(value, bool(drop < tol), drop, monotone)


# --------------------------------------------------------------------------- rescaled errors

@dataclass(frozen=True)
class ErrorSeries:
    t: np.ndarray
    value: np.ndarray
    gradient: np.ndarray


def _positive(traj: Trajectory):
    return [f for f in traj.snapshots if f.time > 0]


def rescaled_heat_error(traj: Trajectory, p: float, I_inf: float) -> ErrorSeries:
    """``t^{(N/2)(1-1/p)} ||u - I G||_p`` and the gradient analogue (extra ``t^{1/2}``)."""
    snaps = _positive(traj)
    N = snaps[0].grid.dimension
    w = 0.0 if math.isinf(p) else 1.0 / p
    t, val, grad = [], [], []
    for f in snaps:
        G = heat_kernel(f.r, f.time, N)
        dG = -f.r / (2 * f.time) * G
        du = radial_derivative(f.values, f.grid.spacing)
        t.append(f.time)
        val.append(f.time ** (N / 2 * (1 - w)) * lp_norm(f.with_values(f.values - I_inf * G), p))
        grad.append(f.time ** (N / 2 * (1 - w) + 0.5) * lp_norm(f.with_values(du - I_inf * dG), p))
    return ErrorSeries(np.array(t), np.array(val), np.array(grad))


def rescaled_vss_error(traj: Trajectory, p: float, profile: ProfileTable) -> ErrorSeries:
    """``t^{(N/2)(1-1/p)+(a-N)/2} ||u - W||_p`` and the gradient analogue."""
    snaps = _positive(traj)
    N, a = profile.N, profile.a
    w = 0.0 if math.isinf(p) else 1.0 / p
    t, val, grad = [], [], []
    for f in snaps:
        s = f.time
        W = w_eval(f.r, s, profile)
        dW = w_gradient(f.r, s, profile)
        du = radial_derivative(f.values, f.grid.spacing)
        e = N / 2 * (1 - w) + (a - N) / 2
        t.append(s)
        val.append(s ** e * lp_norm(f.with_values(f.values - W), p))
        grad.append(s ** (e + 0.5) * lp_norm(f.with_values(du - dW), p))
    return ErrorSeries(np.array(t), np.array(val), np.array(grad))


def _check_m(M_inf):
    if not M_inf > 0:
        raise ValueError("M_inf must be positive; the Z comparison is meaningless otherwise")


def z_error(traj: Trajectory, M_inf: float, q: float):
    """``sup |u(t) - Z_{M_inf}(t)|`` per positive snapshot; returns ``(t, err)``."""
    _check_m(M_inf)
    snaps = _positive(traj)
    err = [float(np.abs(f.values - z_profile(f.r, f.time, M_inf, q)).max()) for f in snaps]
    return np.array([f.time for f in snaps]), np.array(err)


def gradient_z_error(traj: Trajectory, M_inf: float, q: float, p: float = 1.0):
    """``t^{(1-1/p)/q} ||u_x - Z_x||_p`` (one dimension only); returns ``(t, err)``."""
    _check_m(M_inf)
    snaps = _positive(traj)
    if snaps[0].grid.dimension != 1:
        raise ValueError("the gradient Z error is defined for N = 1")
    if not 1 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    err = []
    for f in snaps:
        du = radial_derivative(f.values, f.grid.spacing)
        dz = z_profile_gradient_mag(f.r, f.time, M_inf, q)
        err.append(f.time ** ((1 - 1 / p) / q) * lp_norm(f.with_values(du - dz), p))
    return np.array([f.time for f in snaps]), np.array(err)


# --------------------------------------------------------------------------- tails, rescaling

def tail_mass(f: Field, R: float) -> float:
    """``omega_N int_{r >= R} |f| r^{N-1} dr`` (trapezoid, linear interpolation at ``R``)."""
    if not R < f.grid.radius:
        raise ValueError("R must be smaller than the grid radius")
    r, v = f.r, np.abs(f.values)
    N = f.grid.dimension
    k = int(np.searchsorted(r, R, side="right"))
    rr = np.concatenate(([R], r[k:]))
    vv = np.concatenate(([np.interp(R, r, v)], v[k:]))
    omega = 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)
    return float(omega * np.trapezoid(vv * rr ** (N - 1), rr))


@dataclass(frozen=True)
class Rescaled:
    field: Field
    interpolated_in_time: bool
    truncated: bool  # part of the window fell beyond the grid and reads 0


def rescale_field(traj: Trajectory, t: float, mode: str, factor: float,
                  exponent: float) -> Rescaled:
    """Rescaled snapshot at time ``t``.

    ``parabolic``: ``u_k(x, t) = k^a u(k x, k^2 t)`` with ``exponent = a``.
    ``hj``:        ``u_l(x, t) = u(l x, l^q t)`` with ``exponent = q``.
    """
    if factor < 1:
        raise ValueError("factor must be >= 1")
    if mode == "parabolic":
        src_t, amp = factor ** 2 * t, factor ** exponent
    elif mode == "hj":
        src_t, amp = factor ** exponent * t, 1.0
    else:
        raise ValueError(f"unknown rescaling mode {mode!r}")
    times = traj.times
    if src_t > times[-1] * (1 + 1e-12):
        raise ValueError(f"rescaled time {src_t} lies beyond the horizon {times[-1]}")
    exact = bool(np.any(np.isclose(times, src_t, rtol=1e-12, atol=0)))
    src = traj.at(src_t)
    x = factor * src.r
    vals = amp * np.interp(x, src.r, src.values, right=0.0)
    return Rescaled(Field(src.grid, vals, t), not exact, bool(x[-1] > src.grid.radius))


# --------------------------------------------------------------------------- monitors

@dataclass(frozen=True)
class MonitorResult:
    name: str
    kind: str  # "upper", "lower" or "unilateral"
    constant: float  # running sup (inf) at the end, or the largest excess for unilateral
    previous: float  # running value one decade earlier, or the allowed slack
    passed: bool
    detail: str = ""


@dataclass
class MonitorReport:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name) -> MonitorResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)

    def names(self):
        return [r.name for r in self.results]

    def to_json(self) -> dict:
        return {"passed": self.passed, "results": [_jsonable(asdict(r)) for r in self.results]}


def _bound_monitor(name, s, f, beta, kind="upper", start=0.0, cap=None):
    """Empirical constant of ``f(s) <= C s^-beta`` (or ``>= C s^beta``) over ``s > start``."""
    s = np.asarray(s, dtype=float)
    f = np.asarray(f, dtype=float)
    sel = s > start
    s, f = s[sel], f[sel]
    if s.size < 2 or s[-1] < 10 * s[0] * (1 - 1e-9):
        return MonitorResult(name, kind, math.nan, math.nan, False, "window too short")
    if kind == "upper":
        g = f * s ** beta
        running = np.maximum.accumulate(g)
    else:
        g = f * s ** (-beta)
        running = np.minimum.accumulate(g)
    k = int(np.searchsorted(s, s[-1] / 10 * (1 + 1e-9), side="right")) - 1
    end, prev = float(running[-1]), float(running[max(k, 0)])
    finite = math.isfinite(end) and math.isfinite(prev)
    if kind == "upper":
        stable = finite and (end <= 2 * prev or end == 0)
    else:
        stable = finite and end > 0 and end >= 0.5 * prev
    detail = ""
    passed = stable
    if cap is not None and finite and end > cap:
        passed = False
        detail = f"explicit constant {cap:.4g} exceeded"
    return MonitorResult(name, kind, end, prev, passed, detail)


def _unilateral(name, values, bound, slack):
    excess = float(np.max(values) - bound)
    return MonitorResult(name, "unilateral", excess, float(slack), bool(excess <= slack),
                         f"bound {bound:.6g}, slack {slack:.3g}")


def _u_t(f: Field, q: float) -> np.ndarray:
    return laplacian_field(f).values - godunov_hamiltonian(f.values, f.grid.spacing, q)


def estimate_monitors(traj: Trajectory, q: float, series: Optional[NormSeries] = None,
                      slack_factor: float = 1.0, profile_tail: bool = True) -> MonitorReport:
    """Empirical constants for the a-priori bounds along one run.

    Bounds stated in terms of the initial datum use the time elapsed since
    the first snapshot.  The self-similar bounds (``bdu``, ``estgup``) use
    the run's own clock, so a run continuing an orbit from ``t0 > 0`` keeps
    its absolute time.  Unilateral bounds (the initial-data Hessian and
    Laplacian caps, the tail barrier) allow a slack of ``slack_factor * h``
    times the natural scale.
    """
    if len(traj) < 3:
        raise ValueError("trajectory too short for monitors")
    series = series or NormSeries.from_trajectory(traj)
    f0 = traj[0]
    grid = f0.grid
    N, h = grid.dimension, grid.spacing
    s = series.t - series.t[0]
    u0_inf = series.linf[0]
    du0_inf = series.grad_linf[0]
    d2 = max_d2(f0)
    rep = MonitorReport()
    # gradient and second-order decay bounds
    rep.results.append(_bound_monitor("grad", s, series.grad_linf / max(u0_inf, 1e-300) ** (1 / q),
                                      1 / q))
    if q <= 2:
        lap_plus = np.maximum(series.sup_lap, 0.0)
        eig_plus = np.maximum(series.max_hess_eig, 0.0)
        rep.results.append(_bound_monitor(
            "hess1", s, eig_plus / max(du0_inf, 1e-300) ** (2 - q), 1.0,
            cap=1.0 / (q * (q - 1)) + slack_factor * h))
        rep.results.append(_bound_monitor(
            "hess2", s, eig_plus / max(u0_inf, 1e-300) ** ((2 - q) / q), 2 / q))
        rep.results.append(_unilateral("hess3", series.max_hess_eig, d2,
                                       slack_factor * h * max(d2, 1.0)))
        rep.results.append(_bound_monitor(
            "lap1", s, lap_plus / max(du0_inf, 1e-300) ** (2 - q), 1.0))
        rep.results.append(_bound_monitor(
            "lap2", s, lap_plus / max(u0_inf, 1e-300) ** ((2 - q) / q), 2 / q))
        lap0 = series.sup_lap[0]
        rep.results.append(_unilateral("lap3", series.sup_lap, lap0,
                                       slack_factor * h * max(abs(lap0), d2, 1.0)))
    # parabolic self-similar bounds for nonnegative data below q_c
    nonneg = bool(np.all(f0.values >= 0)) and np.any(f0.values > 0)
    if nonneg and 1 < q < critical_exponent(N):
        a = decay_exponent_a(q)
        tau = tau_of_u0(f0, q, N)
        t = series.t
        bdu = (t ** ((a - N) / 2) * series.l1 + t ** (a / 2) * series.linf
               + t ** ((a + 1) / 2) * series.grad_linf)
        rep.results.append(_bound_monitor("bdu", t, bdu, 0.0, start=tau))
        for p in (1, 2, math.inf):
            norms = np.array([lp_norm(gradient_field(f), p) for f in traj.snapshots])
            beta = (a + 1) / 2 if math.isinf(p) else ((a + 1) * p - N) / (2 * p)
            rep.results.append(_bound_monitor(f"estgup_p{p:g}", t, norms, beta, start=tau))
        rep.results.append(barrier_monitor(traj, q, slack_factor))
    # nonpositive runs: mass growth and the hyperbolic-scaling bound
    nonpos = bool(np.all(f0.values <= 0)) and np.any(f0.values < 0)
    if nonpos:
        vol = _bound_monitor("volvic", s, series.l1, N / q, kind="lower")
        rep.results.append(dataclasses.replace(vol, detail=(vol.detail + " (meaningful only when M_inf > 0)").strip()))
    ut = np.array([np.abs(_u_t(f, q)).max() for f in traj.snapshots])
    z6 = series.linf + s ** (1 / q) * series.grad_linf + s * ut
    rep.results.append(_bound_monitor("z6", s, z6, 0.0))
    return rep


def barrier_monitor(traj: Trajectory, q: float, slack_factor: float = 1.0) -> MonitorResult:
    """Tail barrier ``u(r, t) <= Gamma_q(r - R(u0))`` for ``r > R(u0)``."""
    f0 = traj[0]
    R0 = r_of_u0(f0, q)
    h = f0.grid.spacing
    slack = slack_factor * h * max(float(np.abs(radial_derivative(f0.values, h)).max()), 1.0)
    if not R0.bound_holds:
        return MonitorResult("bsup", "unilateral", math.nan, slack, False,
                             "tail bound violated up to the grid radius")
    r = f0.r
    sel = r > R0.value + h / 2
    worst = -math.inf
    for f in traj.snapshots:
        worst = max(worst, float(np.max(f.values[sel] - gamma_barrier(r[sel] - R0.value, q))))
    return MonitorResult("bsup", "unilateral", worst, slack, worst <= slack,
                         f"R(u0) = {R0.value:.4g}")


# --------------------------------------------------------------------------- classification

@dataclass
class RegimeReport:
    verdict: str
    exponents: dict
    i_infty: Optional[dict]
    m_infty: Optional[dict]
    checks: dict
    validity: dict
    functionals: dict
    evidence: dict

    def to_json(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _sign_tag(f0: Field) -> str:
    if np.all(f0.values >= 0):
        return "nonnegative"
    if np.all(f0.values <= 0):
        return "nonpositive"
    return "general"


def front_estimate(spec: ProblemSpec) -> float:
    """Support radius of the Z profile at the horizon, grown from the datum."""
    f0 = spec.initial_field()
    M = lp_norm(f0, math.inf)
    nz = np.nonzero(f0.values)[0]
    r0 = float(f0.r[nz[-1]]) if nz.size else 0.0
    if M == 0:
        return r0
    return r0 + float(sigma_front(spec.horizon, M, spec.q))


def regime_classify(spec: ProblemSpec, traj: Trajectory, profile: Optional[ProfileTable] = None,
                    trend_ratio: float = TREND_RATIO, plateau_tol: float = PLATEAU_TOL,
                    sat_tol: float = SATURATION_TOL) -> RegimeReport:
    """Decision table on trajectory evidence only.

    DIFFUSION     nonzero ``I_inf`` with the datum's sign and a decreasing
                  heat-kernel error (``p = inf``)
    VSS_BALANCE   ``q < q_c``, nonnegative data, decreasing VSS error (``p = 1``)
    HJ_DOMINATED  nonpositive data, ``M_inf`` plateau and a decreasing Z error
    Anything else, including more than one match or a run contaminated by
    the boundary, is UNDECIDED.
    """
    q, N = spec.q, spec.N
    series = NormSeries.from_trajectory(traj)
    f0 = traj[0]
    sign = _sign_tag(f0)
    qc = critical_exponent(N)
    checks, evidence = {}, {}

    I = i_infty_estimate(series, sat_tol)
    if sign == "nonnegative":
        # a still-growing dissipation means the mass is not settled: read as 0
        i_nonzero = I.converged and I.value > 0
    elif sign == "nonpositive":
        # |I(t)| is nondecreasing for nonpositive data, so the limit cannot vanish
        i_nonzero = I.value < 0
    else:
        i_nonzero = I.converged and I.value != 0
    checks["i_infty_nonzero"] = bool(i_nonzero)

    heat = rescaled_heat_error(traj, math.inf, I.value)
    heat_trend = last_decade_trend(heat.t, heat.value, "heat_error", trend_ratio)
    checks["heat_error_decreasing"] = heat_trend.passed
    evidence["heat_error"] = asdict(heat_trend)
    diffusion = i_nonzero and heat_trend.passed

    vss = False
    if sign == "nonnegative" and 1 < q < qc:
        profile = profile or find_vss(q, N)
        ve = rescaled_vss_error(traj, 1.0, profile)
        vt = last_decade_trend(ve.t, ve.value, "vss_error", trend_ratio)
        checks["vss_error_decreasing"] = vt.passed
        evidence["vss_error"] = asdict(vt)
        evidence["vss_alpha_star"] = profile.alpha_star
        vss = vt.passed

    hj = False
    m_json = None
    if sign == "nonpositive":
        Mi = m_infty_estimate(series, plateau_tol)
        m_json = asdict(Mi)
        checks["m_infty_plateau"] = bool(Mi.converged and Mi.value > 0)
        checks["linf_nonincreasing"] = Mi.monotone
        if 1 < q < 2 and Mi.value > 0:
            zt, ze = z_error(traj, Mi.value, q)
            ztrend = last_decade_trend(zt, ze, "z_error", trend_ratio)
            checks["z_error_decreasing"] = ztrend.passed
            evidence["z_error"] = asdict(ztrend)
            hj = checks["m_infty_plateau"] and ztrend.passed
        else:
            evidence["z_error"] = "not applicable (needs 1 < q < 2 and M_inf > 0)"

    matches = [name for name, ok in (("DIFFUSION", diffusion), ("VSS_BALANCE", vss),
                                     ("HJ_DOMINATED", hj)) if ok]
    verdict = matches[0] if len(matches) == 1 else "UNDECIDED"
    if len(matches) > 1:
        evidence["conflict"] = matches
    if traj.contaminated_at is not None:
        # boundary effects have reached the interior: no regime claim is trustworthy
        evidence["contaminated_matches"] = matches
        verdict = "UNDECIDED"

    exponents = {}
    for name in ("l1", "linf", "grad_linf"):
        try:
            fit = decay_rate_fit(series.t, getattr(series, name))
            exponents[name] = asdict(fit)
        except ValueError as exc:
            exponents[name] = str(exc)

    front = front_estimate(spec) if sign == "nonpositive" and q < 2 else None
    validity = {
        "horizon": float(series.t[-1]),
        "grid_radius": spec.grid.radius,
        "contaminated_at": traj.contaminated_at,
        "warnings": list(traj.warnings),
        "front_estimate": front,
        "front_inside_grid": None if front is None else bool(front < spec.grid.radius),
        "boundary_mass_loss": float(series.identity_residual()[-1]),
    }
    functionals = {}
    if qc < q < 2:
        functionals["smallness_lhs"] = smallness_lhs(f0, q, N)
    if 1 < q < 2:
        functionals["largeness_lhs"] = largeness_lhs(f0, q)
    return RegimeReport(verdict, exponents, asdict(I), m_json, checks, validity, functionals,
                        evidence)


# --------------------------------------------------------------------------- threshold scan

def scan_radius(datum: InitialDatum, q: float, horizon: float) -> float:
    """Grid radius for a scan run: beyond the Z front and nine diffusion lengths."""
    base = datum.support_radius if datum.family == "smooth_bump" else 3 * datum.width
    R = base + 9 * math.sqrt(horizon)
    if datum.amplitude < 0:
        R = max(R, base + 1.3 * float(sigma_front(horizon, abs(datum.amplitude), q)))
    return R


@dataclass(frozen=True)
class ScanSettings:
    horizon: float = 500.0
    spacing: float = 0.05
    t0: float = 0.1
    dimension: int = 1
    scheme: SchemeConfig = SchemeConfig()
    trend_ratio: float = TREND_RATIO
    plateau_tol: float = PLATEAU_TOL


def classify_amplitude(datum: InitialDatum, q: float, settings: ScanSettings) -> dict:
    """Run and classify one member of an amplitude family."""
    R = scan_radius(datum, q, settings.horizon)
    grid = RadialGrid.from_radius(R, settings.spacing, settings.dimension)
    spec = ProblemSpec(q, grid, datum, settings.horizon)
    traj = solve(spec, settings.scheme, geometric_times(settings.t0, settings.horizon))
    rep = regime_classify(spec, traj, trend_ratio=settings.trend_ratio,
                          plateau_tol=settings.plateau_tol)
    f0 = sample_datum(datum, grid)
    out = {"amplitude": datum.amplitude, "verdict": rep.verdict, "checks": rep.checks,
           "radius": grid.radius, "contaminated_at": traj.contaminated_at}
    if 1 < q < 2:
        out["largeness_lhs"] = largeness_lhs(f0, q)
    if critical_exponent(settings.dimension) < q < 2:
        out["smallness_lhs"] = smallness_lhs(f0, q, settings.dimension)
    return out


@dataclass
class ThresholdScan:
    q: float
    runs: list  # one dict per classified amplitude, sorted by |amplitude|
    bracket: Optional[tuple]  # (largest DIFFUSION, smallest HJ_DOMINATED) magnitudes
    bisections: int

    def run_at(self, amplitude: float) -> dict:
        for r in self.runs:
            if math.isclose(abs(r["amplitude"]), amplitude, rel_tol=1e-12):
                return r
        raise KeyError(amplitude)

    @property
    def threshold_largeness(self) -> Optional[float]:
        """``largeness_lhs`` at the HJ end of the bracket (the scanned threshold)."""
        if self.bracket is None:
            return None
        return self.run_at(self.bracket[1]).get("largeness_lhs")


def _find_bracket(runs):
    hj = [abs(r["amplitude"]) for r in runs if r["verdict"] == "HJ_DOMINATED"]
    if not hj:
        return None
    hi = min(hj)
    diff = [abs(r["amplitude"]) for r in runs
            if r["verdict"] == "DIFFUSION" and abs(r["amplitude"]) < hi]
    if not diff:
        return None
    return (max(diff), hi)


def threshold_scan(family: InitialDatum, q: float, amplitudes: Sequence[float],
                   settings: ScanSettings = ScanSettings(), max_bisections: int = 0,
                   workers: int = 1) -> ThresholdScan:
    """Classify ``family`` scaled to each magnitude in ``amplitudes``.

    The sign of ``family.amplitude`` fixes the sign of every member.  A
    bracket is the largest DIFFUSION magnitude below the smallest
    HJ_DOMINATED one.  Each end is then tightened by up to
    ``max_bisections`` geometric bisections against its nearest rung of a
    different verdict (UNDECIDED runs may sit between the two ends).
    """
    base = abs(family.amplitude)
    if base == 0:
        raise ValueError("family amplitude must be nonzero")
    members = [family.scaled(A / base) for A in amplitudes]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            runs = list(pool.map(classify_amplitude, members, [q] * len(members),
                                 [settings] * len(members)))
    else:
        runs = [classify_amplitude(m, q, settings) for m in members]
    runs.sort(key=lambda r: abs(r["amplitude"]))
    bracket = _find_bracket(runs)
    done = 0
    if bracket is not None and max_bisections > 0:
        lo, hi = bracket

        def classify(A):
            run = classify_amplitude(family.scaled(A / base), q, settings)
            runs.append(run)
            return run["verdict"]

        below = max(abs(r["amplitude"]) for r in runs
                    if abs(r["amplitude"]) < hi and r["verdict"] != "HJ_DOMINATED")
        for _ in range(max_bisections):
            mid = math.sqrt(below * hi)
            done += 1
            if classify(mid) == "HJ_DOMINATED":
                hi = mid
            else:
                below = mid
        above = min(abs(r["amplitude"]) for r in runs
                    if abs(r["amplitude"]) > lo and r["verdict"] != "DIFFUSION")
        for _ in range(max_bisections):
            mid = math.sqrt(lo * above)
            done += 1
            if classify(mid) == "DIFFUSION":
                lo = mid
            else:
                above = mid
        runs.sort(key=lambda r: abs(r["amplitude"]))
        bracket = _find_bracket(runs)
    return ThresholdScan(q, runs, bracket, done)


__all__ = [
    "NormSeries", "TrendCheck", "PowerFit", "IInfinity", "MInfinity", "ErrorSeries",
    "MonitorResult", "MonitorReport", "RegimeReport", "ThresholdScan", "ScanSettings",
    "value_at", "last_decade_trend", "decay_rate_fit", "i_infty_estimate", "m_infty_estimate",
    "rescaled_heat_error", "rescaled_vss_error", "z_error", "gradient_z_error", "tail_mass",
    "rescale_field", "estimate_monitors", "barrier_monitor", "regime_classify",
    "front_estimate", "classify_amplitude", "threshold_scan", "scan_radius", "VERDICTS",
    "SERIES_COLUMNS",
]
