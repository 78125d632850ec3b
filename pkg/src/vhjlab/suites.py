"""Named verification suites (the acceptance table), shared by the CLI and the tests.

Expensive runs are cached per process, so a suite that needs another
suite's runs (``monitors`` needs all of them, ``hj-dominated`` needs the
threshold scan) reuses them instead of recomputing.
"""

from __future__ import annotations

import functools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import closed_forms as cf
from .diagnostics import (NormSeries, ScanSettings, estimate_monitors, gradient_z_error,
                          i_infty_estimate, last_decade_trend, m_infty_estimate,
                          rescaled_heat_error, rescaled_vss_error, scan_radius,
                          threshold_scan, z_error)
from .grid import Field, InitialDatum, RadialGrid, integral, lp_norm
from .solver import (ProblemSpec, SchemeConfig, geometric_times, hopf_cole_exact, solve,
                     solve_forced_linear)
from .vss import find_vss, w_eval, w_pde_residual

log = logging.getLogger(__name__)

# hopf-cole-q2
HC_SPACINGS = (1 / 32, 1 / 64, 1 / 128)
HC_RADIUS = 8.0
HC_ERROR_BOUND = 5e-3
# diffusion
DIFF_Q, DIFF_HORIZON, DIFF_RADIUS, DIFF_SPACING = 1.8, 200.0, 80.0, 0.05
# vss
VSS_Q = 1.3
VSS_AMPLITUDE = 5.0
VSS_HORIZON = 1000.0
VSS_SPACING = 0.05
VSS_RESIDUAL_STEPS = (0.02, 0.01)
# threshold and hj-dominated
HJ_Q = 1.5
HJ_HORIZON = 500.0
HJ_LADDER = tuple(0.1 * 2 ** k for k in range(11))
HJ_BISECTIONS = 3
HJ_LARGENESS_FACTOR = 4.0
Q2_LADDER = tuple(np.geomspace(0.1, 20.0, 8))
TREND = 0.7

SCAN_WORKERS = 1


@dataclass(frozen=True)
class Check:
    criterion: str
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.criterion} {self.name}: {self.detail}"


@dataclass
class SuiteResult:
    name: str
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, criterion, name, passed, detail=""):
        self.checks.append(Check(criterion, name, bool(passed), detail))


# --------------------------------------------------------------------------- cached runs

@functools.lru_cache(maxsize=None)
def hopf_cole_runs():
    """Godunov/explicit runs at ``q = 2`` next to the exact solution, one per spacing."""
    out = {}
    datum = InitialDatum.smooth_bump(-1.0, 1.0)
    cfg = SchemeConfig(time_integrator="explicit_euler")
    for h in HC_SPACINGS:
        grid = RadialGrid.from_radius(HC_RADIUS, h, 1)
        spec = ProblemSpec(2.0, grid, datum, 1.0)
        traj = solve(spec, cfg, geometric_times(1e-3, 1.0))
        exact = hopf_cole_exact(traj[0], 1.0)
        err = float(np.abs(traj[-1].values - exact.values).max())
        out[h] = (spec, traj, err)
    return out


@functools.lru_cache(maxsize=None)
def diffusion_run():
    grid = RadialGrid.from_radius(DIFF_RADIUS, DIFF_SPACING, 1)
    spec = ProblemSpec(DIFF_Q, grid, InitialDatum.gaussian(1.0, 1.0), DIFF_HORIZON)
    return spec, solve(spec, SchemeConfig(), geometric_times(0.01, DIFF_HORIZON))


@functools.lru_cache(maxsize=None)
def vss_profile():
    return find_vss(VSS_Q, 1)


@functools.lru_cache(maxsize=None)
def vss_bump_run():
    datum = InitialDatum.smooth_bump(VSS_AMPLITUDE, 1.0)
    grid = RadialGrid.from_radius(1.0 + 9 * math.sqrt(VSS_HORIZON), VSS_SPACING, 1)
    spec = ProblemSpec(VSS_Q, grid, datum, VSS_HORIZON)
    return spec, solve(spec, SchemeConfig(), geometric_times(0.01, VSS_HORIZON))


@functools.lru_cache(maxsize=None)
def w_orbit_run():
    """Run started from ``W(., 1)`` sampled on the grid, evolved to ``t = 10``."""
    profile = vss_profile()
    grid = RadialGrid.from_radius(40.0, VSS_SPACING, 1)
    w1 = Field(grid, w_eval(grid.nodes, 1.0, profile), 1.0)
    spec = ProblemSpec(VSS_Q, grid, w1, 10.0)
    return spec, solve(spec, SchemeConfig(), geometric_times(1.0, 10.0))


def _scan_settings():
    return ScanSettings(horizon=HJ_HORIZON, trend_ratio=TREND)


@functools.lru_cache(maxsize=None)
def threshold_scan_q15():
    return threshold_scan(InitialDatum.smooth_bump(-1.0, 1.0), HJ_Q, HJ_LADDER, _scan_settings(),
                          max_bisections=HJ_BISECTIONS, workers=SCAN_WORKERS)


@functools.lru_cache(maxsize=None)
def threshold_scan_q2():
    return threshold_scan(InitialDatum.smooth_bump(-1.0, 1.0), 2.0, Q2_LADDER, _scan_settings(),
                          workers=SCAN_WORKERS)


def hj_amplitude(scan) -> float:
    """Amplitude whose largeness functional is the scanned threshold times the factor.

    ``largeness_lhs`` is homogeneous of degree ``2 - 2/q`` in the amplitude.
    """
    if scan.bracket is None:
        raise RuntimeError("threshold scan produced no bracket")
    A_hi = scan.bracket[1]
    return A_hi * HJ_LARGENESS_FACTOR ** (1 / (2 - 2 / HJ_Q))


@functools.lru_cache(maxsize=None)
def hj_run():
    scan = threshold_scan_q15()
    A = hj_amplitude(scan)
    datum = InitialDatum.smooth_bump(-A, 1.0)
    grid = RadialGrid.from_radius(scan_radius(datum, HJ_Q, HJ_HORIZON), 0.05, 1)
    spec = ProblemSpec(HJ_Q, grid, datum, HJ_HORIZON)
    return spec, solve(spec, SchemeConfig(), geometric_times(0.1, HJ_HORIZON))


# --------------------------------------------------------------------------- suites

def suite_hopf_cole() -> SuiteResult:
    res = SuiteResult("hopf-cole-q2")
    runs = hopf_cole_runs()
    errs = [runs[h][2] for h in HC_SPACINGS]
    res.add("A1", "sup error at h=1/64", errs[1] <= HC_ERROR_BOUND,
            f"{errs[1]:.3e} (bound {HC_ERROR_BOUND:.0e})")
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(len(errs) - 1)]
    res.add("A1", "error decreases under refinement", all(np.diff(errs) < 0),
            ", ".join(f"{e:.3e}" for e in errs))
    res.add("A1", "observed order >= 1", min(orders) >= 1.0,
            ", ".join(f"{o:.3f}" for o in orders))
    return res


def suite_diffusion() -> SuiteResult:
    res = SuiteResult("diffusion")
    spec, traj = diffusion_run()
    series = NormSeries.from_trajectory(traj)
    I = i_infty_estimate(series)
    I0 = series.mass[0]
    res.add("A2", "I_inf > 0", I.value > 0, f"I_inf = {I.value:.6f}, I(0) = {I0:.6f}")
    res.add("A2", "identity residual", I.residual <= 1e-2 * I0,
            f"|I(0) - D - I_inf| = {I.residual:.3e}")
    heat = rescaled_heat_error(traj, math.inf, I.value)
    for name, ys in (("heat error (p=inf)", heat.value), ("heat gradient error", heat.gradient)):
        tr = last_decade_trend(heat.t, ys, name, TREND)
        res.add("A2", name, tr.passed, f"ratio {tr.ratio:.3f}, monotone {tr.monotone}")
    return res


def suite_vss() -> SuiteResult:
    res = SuiteResult("vss")
    prof = vss_profile()
    res.add("A3", "find_vss fast-decay tail gate",
            prof.decay_class == "fast" and prof.tail_ratio < 1e-3,
            f"alpha* = {prof.alpha_star:.10f}, tail ratio {prof.tail_ratio:.2e}")
    rr, tt = np.meshgrid(np.linspace(0.5, 2.0, 16), np.linspace(0.5, 2.0, 16))
    coarse, fine = (float(np.abs(w_pde_residual(prof, rr, tt, h)).max())
                    for h in VSS_RESIDUAL_STEPS)
    res.add("A3", "W residual halves under refinement", fine <= 0.5 * coarse,
            f"{coarse:.3e} -> {fine:.3e}")
    _, traj = vss_bump_run()
    ve = rescaled_vss_error(traj, 1.0, prof)
    tr = last_decade_trend(ve.t, ve.value, "vss error", TREND)
    res.add("A3", "bump: rescaled VSS error (p=1)", tr.passed,
            f"ratio {tr.ratio:.3f}, monotone {tr.monotone}")
    _, worb = w_orbit_run()
    we = rescaled_vss_error(worb, 1.0, prof)
    # the sampled W(1) is exact; the first later snapshot carries the initial scheme error
    late = we.t > worb[0].time
    d0 = float(we.value[late][0])
    worst = float(we.value[late].max())
    res.add("A3", "W orbit stays within 3x initial distance", worst <= 3 * d0,
            f"initial {d0:.3e} at t = {we.t[late][0]:.3g}, max {worst:.3e}")
    return res


def suite_hj() -> SuiteResult:
    res = SuiteResult("hj-dominated")
    scan = threshold_scan_q15()
    if scan.bracket is None:
        res.add("A4", "threshold available", False, "q=1.5 scan produced no bracket")
        return res
    spec, traj = hj_run()
    f0 = traj[0]
    lhs = cf.largeness_lhs(f0, HJ_Q)
    thr = scan.threshold_largeness
    res.add("A4", "largeness above 4x threshold", lhs >= HJ_LARGENESS_FACTOR * thr * (1 - 1e-9),
            f"amplitude {abs(f0.values).max():.4g}, lhs {lhs:.4g}, threshold {thr:.4g}")
    front = cf.sigma_front(HJ_HORIZON, lp_norm(f0, math.inf), HJ_Q)
    res.add("A4", "front inside grid", front < spec.grid.radius and traj.contaminated_at is None,
            f"front {front:.1f}, R {spec.grid.radius:.1f}")
    series = NormSeries.from_trajectory(traj)
    M = m_infty_estimate(series)
    res.add("A4", "M_inf plateau", M.value > 0 and M.converged,
            f"M_inf = {M.value:.4f}, last-decade drop {100 * M.decade_drop:.2f}%")
    zt, ze = z_error(traj, M.value, HJ_Q)
    tr = last_decade_trend(zt, ze, "z error", TREND)
    res.add("A4", "z_error decreasing", tr.passed, f"ratio {tr.ratio:.3f}, monotone {tr.monotone}")
    gt, ge = gradient_z_error(traj, M.value, HJ_Q, 1.0)
    tg = last_decade_trend(gt, ge, "gradient z error", 1.0)
    res.add("A4", "gradient_z_error (p=1) decreasing", tg.passed and tg.ratio < 1,
            f"ratio {tg.ratio:.3f}, monotone {tg.monotone}")
    t = series.t
    sel = t >= t[-1] / 10 * (1 - 1e-9)
    v = series.l1[sel] * t[sel] ** (-1 / HJ_Q)
    res.add("A4", "||u||_1 t^(-1/q) bounded below", v.min() > 0 and v.max() <= 2 * v.min(),
            f"inf {v.min():.4g}, max/min {v.max() / v.min():.3f}")
    return res


A5_REQUIRED = ("grad", "lap1", "lap2", "lap3", "hess3")
A5_VSS_EXTRA = ("bsup", "estgup_p1", "estgup_p2", "estgup_pinf")


def monitored_runs():
    runs = [(f"A1 h=1/{round(1 / h)}", spec.q, traj, A5_REQUIRED)
            for h, (spec, traj, _) in hopf_cole_runs().items()]
    spec, traj = diffusion_run()
    runs.append(("A2", spec.q, traj, A5_REQUIRED))
    spec, traj = vss_bump_run()
    runs.append(("A3 bump", spec.q, traj, A5_REQUIRED + A5_VSS_EXTRA))
    spec, traj = w_orbit_run()
    runs.append(("A3 W orbit", spec.q, traj, A5_REQUIRED + A5_VSS_EXTRA))
    if threshold_scan_q15().bracket is not None:
        spec, traj = hj_run()
        runs.append(("A4", spec.q, traj, A5_REQUIRED))
    return runs


def suite_monitors() -> SuiteResult:
    res = SuiteResult("monitors")
    for label, q, traj, required in monitored_runs():
        rep = estimate_monitors(traj, q)
        for name in required:
            try:
                m = rep[name]
            except KeyError:
                res.add("A5", f"{label} {name}", False, "monitor not applicable")
                continue
            res.add("A5", f"{label} {name}", m.passed,
                    f"C = {m.constant:.4g} (decade before {m.previous:.4g}) {m.detail}".strip())
    if threshold_scan_q15().bracket is None:
        res.add("A5", "A4 run", False, "no threshold bracket, HJ run unavailable")
    return res


def _verdicts(scan):
    return ", ".join(f"{abs(r['amplitude']):.3g}:{r['verdict']}" for r in scan.runs)


def suite_threshold() -> SuiteResult:
    res = SuiteResult("threshold")
    s15 = threshold_scan_q15()
    detail = _verdicts(s15)
    if s15.bracket is not None:
        detail = f"bracket {s15.bracket[0]:.4g}..{s15.bracket[1]:.4g}; " + detail
    res.add("A6", "q=1.5 DIFFUSION/HJ bracket", s15.bracket is not None, detail)
    s2 = threshold_scan_q2()
    res.add("A6", "q=2 no bracket", s2.bracket is None, _verdicts(s2))
    res.add("A6", "q=2 all DIFFUSION", all(r["verdict"] == "DIFFUSION" for r in s2.runs),
            _verdicts(s2))
    return res


def suite_closed_forms() -> SuiteResult:
    res = SuiteResult("closed-forms")
    grid = RadialGrid.from_radius(40.0, 0.01, 1)
    for t in (0.5, 1.0, 4.0):
        G = Field(grid, cf.heat_kernel(grid.nodes, t, 1))
        err = abs(integral(G) - 1)
        res.add("A7", f"heat kernel unit mass t={t}", err <= 1e-6, f"|int G - 1| = {err:.2e}")
    q = 1.5
    for M, t in ((1.0, 1.0), (1.0, 4.0), (2.5, 3.0)):
        front = float(cf.sigma_front(t, M, q))
        y = np.linspace(0.0, front, 200001)
        vals = cf.sigma_source(y, t, M, q)
        # trapezoid misses the jump at the front; integrate the smooth branch up to it
        mass = float(np.trapezoid(vals, y))
        rel = abs(mass - M) / M
        res.add("A7", f"Sigma mass M={M} t={t}", rel <= 1e-6, f"relative error {rel:.2e}")
    y = np.linspace(-6.0, 6.0, 1201)
    lam = 2.0
    s_err = float(np.abs(lam * cf.sigma_source(lam * y, lam ** q * 1.5, 1.0, q)
                         - cf.sigma_source(y, 1.5, 1.0, q)).max())
    res.add("A7", "Sigma self-similarity", s_err <= 1e-12, f"max deviation {s_err:.2e}")
    r = np.linspace(0.0, 8.0, 801)
    z_err = max(float(np.abs(cf.z_profile(r, t, 1.3, q) - cf.z_profile(r * t ** (-1 / q), 1.0, 1.3, q)).max())
                for t in (0.5, 2.0, 7.0))
    res.add("A7", "Z self-similarity", z_err <= 1e-12, f"max deviation {z_err:.2e}")
    hgrid = RadialGrid.from_radius(10.0, 0.02, 1)
    M, t = 1.0, 1.0
    point = np.zeros(hgrid.node_count + 1)
    point[0] = -M
    hl = cf.hopf_lax_eval(Field(hgrid, point), hgrid.nodes, t, q)
    z = cf.z_profile(hgrid.nodes, t, M, q)
    lip = float(cf.z_profile_gradient_mag(cf.z_edge_radius(t, M, q) * (1 - 1e-12), t, M, q))
    hl_err = float(np.abs(hl - z).max())
    res.add("A7", "Hopf-Lax point datum reproduces Z", hl_err <= hgrid.spacing * lip,
            f"max deviation {hl_err:.2e} (tolerance {hgrid.spacing * lip:.2e})")
    for N in (1, 2, 3):
        a = cf.decay_exponent_a(cf.critical_exponent(N))
        res.add("A7", f"a(q_c({N})) = {N}", abs(a - N) <= 8 * np.finfo(float).eps * N,
                f"a = {a!r}")
    return res


FL_HORIZON = 100.0


@functools.lru_cache(maxsize=None)
def forced_linear_run():
    grid = RadialGrid.from_radius(60.0, 0.05, 1)
    phi = cf.heat_kernel(grid.nodes, 1.0, 1)
    u0 = Field(grid, phi)

    def forcing(r, t, u):
        return phi * (1 + t) ** -3

    traj = solve_forced_linear(u0, forcing, geometric_times(0.01, FL_HORIZON))
    return traj, integral(u0) + integral(Field(grid, phi)) / 2


def suite_forced_linear() -> SuiteResult:
    res = SuiteResult("forced-linear")
    traj, I_inf = forced_linear_run()
    err = rescaled_heat_error(traj, math.inf, I_inf)
    tr = last_decade_trend(err.t, err.value, "forced heat error", TREND)
    res.add("A8", "t^(N/2)||u - I_inf G||_inf decreasing", tr.passed,
            f"I_inf = {I_inf:.8f}, ratio {tr.ratio:.3f}, monotone {tr.monotone}")
    return res


SUITES = {
    "hopf-cole-q2": suite_hopf_cole,
    "diffusion": suite_diffusion,
    "vss": suite_vss,
    "hj-dominated": suite_hj,
    "monitors": suite_monitors,
    "threshold": suite_threshold,
    "closed-forms": suite_closed_forms,
    "forced-linear": suite_forced_linear,
}


def run_suite(name: str) -> SuiteResult:
    try:
        fn = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
    return fn()


__all__ = ["Check", "SuiteResult", "SUITES", "run_suite", "hj_amplitude"]
