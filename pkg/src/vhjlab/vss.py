"""Very singular self-similar solution by shooting on its profile ODE.

Substituting ``W(x, t) = t^(-a/2) f(|x| t^(-1/2))`` into
``u_t - lap u + |grad u|^q = 0`` gives

    f'' = -((N-1)/eta + eta/2) f' - (a/2) f + |f'|^q,   f'(0) = 0,

with ``a = (2-q)/(q-1)``.  The profile we want is the positive solution whose
tail decays faster than the ``eta^(-a)`` branch; it separates data that
cross zero from data that keep a slow ``eta^(-a)`` tail.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .closed_forms import critical_exponent, decay_exponent_a
from .grid import sphere_area

log = logging.getLogger(__name__)

DECAY_CLASSES = ("fast", "slow", "sign_change")

TAIL_GATE = 1e-3
PROBE_LADDER = tuple(np.logspace(-3, 3, 25))


class VSSError(RuntimeError):
    pass


@dataclass(frozen=True)
class ProfileTable:
    q: float
    N: int
    alpha_star: float
    decay_class: str
    eta_nodes: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    f_prime: np.ndarray = field(repr=False)
    tail_ratio: float = math.nan  # g(eta_max) / sup g with g = eta^a f
    bracket: tuple = (math.nan, math.nan)

    @property
    def a(self) -> float:
        return decay_exponent_a(self.q)

    @property
    def eta_max(self) -> float:
        return float(self.eta_nodes[-1])

    def norm(self, p: float) -> float:
        """``||W(1)||_p = (omega_N int |f|^p eta^(N-1) d eta)^(1/p)``."""
        if math.isinf(p):
            return float(np.abs(self.f).max())
        integrand = np.abs(self.f) ** p * self.eta_nodes ** (self.N - 1)
        return float((sphere_area(self.N) * np.trapezoid(integrand, self.eta_nodes)) ** (1 / p))

    def summary(self) -> dict:
        return {
            "q": self.q, "N": self.N, "a": self.a, "alpha_star": self.alpha_star,
            "decay_class": self.decay_class, "eta_max": self.eta_max,
            "tail_ratio": self.tail_ratio, "bracket": list(self.bracket),
            "norm_1": self.norm(1), "norm_2": self.norm(2), "norm_inf": self.norm(math.inf),
        }


def vss_ode_rhs(eta, f, fp, q, N):
    """Second derivative of the profile; uses the regularised form at ``eta = 0``."""
    a = decay_exponent_a(q)
    if eta == 0:
        return -(a / 2) * f / N
    return -((N - 1) / eta + eta / 2) * fp - (a / 2) * f + abs(fp) ** q


def _integrate(alpha, q, N, eta_max):
    def rhs(eta, y):
        return [y[1], vss_ode_rhs(eta, y[0], y[1], q, N)]

    def crossing(eta, y):
        return y[0]
    crossing.terminal = True
    crossing.direction = -1

    sol = solve_ivp(rhs, (0.0, eta_max), [alpha, 0.0], method="DOP853", rtol=1e-12,
                    atol=1e-22, events=crossing, dense_output=True)
    if sol.status == -1:
        raise VSSError(f"profile integration failed at alpha={alpha}: {sol.message}")
    return sol


def _tail_metrics(eta, f, a):
    g = eta ** a * f
    gmax = float(g.max())
    tail = float(g[-1] / gmax) if gmax > 0 else 0.0
    emax = eta[-1]
    last = g[eta >= emax / 2].mean()
    prev = g[(eta >= emax / 4) & (eta < emax / 2)].mean()
    window = float(last / prev) if prev > 0 else 0.0
    return tail, window


def shoot(alpha: float, q: float, N: int, eta_max: float = 40.0, nodes: int = 8001,
          max_refine: int = 3) -> ProfileTable:
    """Integrate one trajectory from ``f(0) = alpha`` and classify its tail.

    ``sign_change`` if ``f`` reaches zero; otherwise ``fast`` when
    ``eta^a f`` at ``eta_max`` is below the tail gate of its peak, or when it
    halves across the last two dyadic windows; ``slow`` when the window ratio
    exceeds 0.9.  In between, ``eta_max`` is doubled.
    """
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if not 1 < q < critical_exponent(N):
        raise ValueError(f"q must lie in (1, q_c({N})), got {q}")
    a = decay_exponent_a(q)
    for attempt in range(max_refine + 1):
        sol = _integrate(alpha, q, N, eta_max)
        if sol.status == 1:
            end = float(sol.t_events[0][0])
            eta = np.linspace(0.0, end, nodes)
            y = sol.sol(eta)
            return ProfileTable(q, N, alpha, "sign_change", eta, y[0], y[1])
        eta = np.linspace(0.0, eta_max, nodes)
        y = sol.sol(eta)
        tail, window = _tail_metrics(eta, y[0], a)
        if tail <= TAIL_GATE or window < 0.5:
            cls = "fast"
        elif window > 0.9:
            cls = "slow"
        elif attempt < max_refine:
            eta_max *= 2
            continue
        else:
            cls = "slow" if window >= 0.7 else "fast"
        return ProfileTable(q, N, alpha, cls, eta, y[0], y[1], tail_ratio=tail)
    raise AssertionError("unreachable")


def find_vss(q: float, N: int, tol: float = 1e-10, eta_max: float = 40.0,
             ladder=PROBE_LADDER) -> ProfileTable:
    """Bisect on ``alpha`` between crossing and non-crossing trajectories.

    The orientation (which side crosses zero) is read off the probe ladder.
    The returned table is the last non-crossing trajectory of the bisection;
    ``decay_class`` must come out ``fast`` for the profile to be the VSS.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    probes = [(float(al), shoot(float(al), q, N, eta_max).decay_class) for al in ladder]
    bracket = None
    for (a0, c0), (a1, c1) in zip(probes, probes[1:]):
        if (c0 == "sign_change") != (c1 == "sign_change"):
            bracket = (a0, a1) if c0 == "sign_change" else (a1, a0)
            break
    if bracket is None:
        raise VSSError("no sign-change / positive bracket on the probe ladder: "
                       + ", ".join(f"{al:.3g}:{c}" for al, c in probes))
    crossing, positive = bracket
    log.debug("vss bracket: crossing at %g, positive at %g", crossing, positive)
    best = shoot(positive, q, N, eta_max)
    while abs(positive - crossing) > tol:
        mid = 0.5 * (crossing + positive)
        trial = shoot(mid, q, N, eta_max)
        if trial.decay_class == "sign_change":
            crossing = mid
        else:
            positive, best = mid, trial
    lo, hi = sorted((crossing, positive))
    return ProfileTable(q, N, best.alpha_star, best.decay_class, best.eta_nodes, best.f,
                        best.f_prime, tail_ratio=best.tail_ratio, bracket=(lo, hi))


def _interpolant(profile: ProfileTable):
    return CubicHermiteSpline(profile.eta_nodes, profile.f, profile.f_prime, extrapolate=False)


def w_eval(r, t, profile: ProfileTable):
    """``W(r, t) = t^(-a/2) f(r t^(-1/2))``; zero beyond ``eta_max``."""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    eta = np.abs(np.asarray(r, dtype=float)) / np.sqrt(t)
    vals = np.nan_to_num(_interpolant(profile)(eta), nan=0.0)
    return np.asarray(t, dtype=float) ** (-profile.a / 2) * vals


def w_gradient(r, t, profile: ProfileTable):
    """Radial derivative ``W_r``; zero beyond ``eta_max``."""
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    eta = np.abs(np.asarray(r, dtype=float)) / np.sqrt(t)
    vals = np.nan_to_num(_interpolant(profile)(eta, 1), nan=0.0)
    return np.asarray(t, dtype=float) ** (-(profile.a + 1) / 2) * vals


def w_pde_residual(profile: ProfileTable, r, t, h: float):
    """Centred finite-difference residual of ``W_t - lap W + |grad W|^q`` at ``(r, t)``.

    Independent of the ODE: only values of ``W`` are used, with step ``h``
    in both ``r`` and ``t``.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)

    def W(rr, tt):
        return w_eval(rr, tt, profile)

    wt = (W(r, t + h) - W(r, t - h)) / (2 * h)
    wr = (W(r + h, t) - W(r - h, t)) / (2 * h)
    wrr = (W(r + h, t) - 2 * W(r, t) + W(r - h, t)) / h ** 2
    lap = wrr + (profile.N - 1) / r * wr
    return wt - lap + np.abs(wr) ** profile.q


__all__ = ["ProfileTable", "VSSError", "vss_ode_rhs", "shoot", "find_vss", "w_eval",
           "w_gradient", "w_pde_residual", "DECAY_CLASSES"]
