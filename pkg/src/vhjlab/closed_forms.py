"""Exact profiles, exponents and threshold functionals.

Everything here is a pure function of its arguments.  Radial quantities
take ``r = |x|`` and broadcast over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import (Field, gradient_field, hessian_radial_eigenvalues, laplacian_field,
                   lp_norm)


def _check_subquadratic(q):
    if not 1 < q < 2:
        raise ValueError(f"q must lie in (1, 2), got {q}")


def critical_exponent(N: int) -> float:
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    return (N + 2) / (N + 1)


def decay_exponent_a(q: float) -> float:
    _check_subquadratic(q)
    return (2 - q) / (q - 1)


def gamma_q(q: float) -> float:
    _check_subquadratic(q)
    return (q - 1) ** ((q - 2) / (q - 1)) / (2 - q)


@dataclass(frozen=True)
class Exponents:
    q: float
    N: int

    @property
    def q_c(self) -> float:
        return critical_exponent(self.N)

    @property
    def a(self) -> float:
        return decay_exponent_a(self.q)

    @property
    def gamma_q(self) -> float:
        return gamma_q(self.q)


def heat_kernel(r, t, N: int):
    if np.any(np.asarray(t) <= 0):
        raise ValueError("heat kernel needs t > 0")
    r = np.asarray(r, dtype=float)
    return (4 * math.pi * t) ** (-N / 2) * np.exp(-r ** 2 / (4 * t))


def heat_kernel_gradient_mag(r, t, N: int):
    return np.abs(np.asarray(r, dtype=float)) / (2 * t) * heat_kernel(r, t, N)


def heat_kernel_lp_norm(t: float, N: int, p: float) -> float:
    """Exact ``||G(t)||_p = (4 pi t)^{-N/2 (1-1/p)} p^{-N/(2p)}``."""
    if math.isinf(p):
        return (4 * math.pi * t) ** (-N / 2)
    return (4 * math.pi * t) ** (-N / 2 * (1 - 1 / p)) * p ** (-N / (2 * p))


def _hj_mu(t, q):
    # coefficient of |x|^{q/(q-1)} in the Hopf-Lax kernel
    return (q - 1) * q ** (-q / (q - 1)) * np.asarray(t, dtype=float) ** (-1 / (q - 1))


def z_edge_radius(t, M: float, q: float):
    """Radius beyond which ``Z_M(., t)`` vanishes."""
    return np.asarray(t, dtype=float) ** (1 / q) * q * (M / (q - 1)) ** ((q - 1) / q)


def _check_z(t, M, q):
    _check_subquadratic(q)
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    if M < 0:
        raise ValueError("M must be nonnegative")


def z_profile(r, t, M: float, q: float):
    """Self-similar viscosity solution of ``z_t + |grad z|^q = 0`` with point datum ``-M``."""
    _check_z(t, M, q)
    r = np.abs(np.asarray(r, dtype=float))
    k = q / (q - 1)
    return -np.maximum(M - (q - 1) * q ** (-k) * (r / np.asarray(t) ** (1 / q)) ** k, 0.0)


def z_profile_gradient_mag(r, t, M: float, q: float):
    _check_z(t, M, q)
    r = np.abs(np.asarray(r, dtype=float))
    k = q / (q - 1)
    slope = k * _hj_mu(t, q) * r ** (k - 1)
    return np.where(r < z_edge_radius(t, M, q), slope, 0.0)


def hopf_lax_eval(g: Field, x, t: float, q: float):
    """Hopf-Lax value at radii ``x``, infimum over the grid nodes of ``g``.

    For a radial datum the minimiser lies on the ray through ``x``, so the
    search is over ``|y| = r_j`` only.  A point value at the origin (e.g.
    ``-M 1_{0}``) is carried by ``g.values[0]``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if q <= 1:
        raise ValueError("q must exceed 1")
    y = g.grid.nodes
    if y.size == 0:
        raise ValueError("empty grid")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    k = q / (q - 1)
    mu = float(_hj_mu(t, q))
    out = np.empty_like(x)
    chunk = max(1, 4_000_000 // y.size)
    for s in range(0, x.size, chunk):
        xs = x[s:s + chunk, None]
        out[s:s + chunk] = np.min(g.values[None, :] + mu * np.abs(xs - y[None, :]) ** k, axis=1)
    return out


def sigma_front(t, M: float, q: float):
    """Front position ``xi_M(t)`` (or ``eta_M`` for ``M < 0``)."""
    return q * (abs(M) / (q - 1)) ** ((q - 1) / q) * np.asarray(t, dtype=float) ** (1 / q)


def sigma_source(y, t, M: float, q: float):
    """Source solution of ``w_t + (|w|^q)_y = 0`` with initial mass ``M delta``."""
    _check_subquadratic(q)
    if np.any(np.asarray(t) <= 0):
        raise ValueError("t must be positive")
    y = np.asarray(y, dtype=float)
    front = sigma_front(t, M, q)
    amp = np.abs(y) ** (1 / (q - 1)) * (q * np.asarray(t)) ** (-1 / (q - 1))
    if M > 0:
        return np.where((y >= 0) & (y <= front), amp, 0.0)
    if M < 0:
        return np.where((y <= 0) & (y >= -front), -amp, 0.0)
    return np.zeros_like(y)


def gamma_barrier(r, q: float):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("gamma barrier needs r > 0")
    return gamma_q(q) * r ** (-decay_exponent_a(q))


@dataclass(frozen=True)
class TailRadius:
    value: float
    bound_holds: bool  # False: tail bound violated up to the grid boundary


def r_of_u0(f: Field, q: float) -> TailRadius:
    """Smallest node radius beyond which ``r^a u0 <= gamma_q``."""
    N = f.grid.dimension
    if not 1 < q < critical_exponent(N):
        raise ValueError(f"q must lie in (1, q_c), got {q}")
    if np.any(f.values < 0):
        raise ValueError("r_of_u0 needs a nonnegative field")
    r = f.r
    bad = r ** decay_exponent_a(q) * f.values > gamma_q(q)
    if not bad.any():
        return TailRadius(0.0, True)
    last = int(np.nonzero(bad)[0][-1])
    if last == len(r) - 1:
        return TailRadius(float(f.grid.radius), False)
    return TailRadius(float(r[last + 1]), True)


def tau_of_u0(f: Field, q: float, N: int) -> float:
    R = r_of_u0(f, q).value
    return ((N + 2 - q * (N + 1)) / ((N + 1) * q - N)) ** (1 - q) * R ** 2


def smallness_lhs(f: Field, q: float, N: int) -> float:
    if not critical_exponent(N) < q < 2:
        raise ValueError(f"smallness condition needs q in (q_c, 2), got {q}")
    grad = lp_norm(gradient_field(f), math.inf)
    return lp_norm(f, 1) * grad ** ((N + 1) * q - (N + 2))


def largeness_lhs(f: Field, q: float) -> float:
    """``||u0||_inf ||(lap u0)^+||_inf^(1-2/q)``; ``inf`` when the Laplacian is never positive."""
    _check_subquadratic(q)
    lap_plus = max(float(laplacian_field(f).values.max()), 0.0)
    if lap_plus == 0.0:
        return math.inf
    return lp_norm(f, math.inf) * lap_plus ** (1 - 2 / q)


def gn_chain_gap(f: Field, q: float, N: int) -> float:
    if not critical_exponent(N) < q < 2:
        raise ValueError(f"q must lie in (q_c, 2), got {q}")
    linf = lp_norm(f, math.inf)
    if linf == 0:
        raise ValueError("degenerate datum (identically zero)")
    lhs = (linf * max_d2(f) ** (1 - 2 / q)) ** (q * (N + 1) / 2)
    return lhs / smallness_lhs(f, q, N)


def _second_derivative_bounds(f: Field):
    radial, tangential = hessian_radial_eigenvalues(f)
    return np.abs(radial.values).max(), np.abs(tangential.values).max()


def max_d2(f: Field) -> float:
    """Discrete ``||D^2 u||_inf`` (largest Hessian eigenvalue modulus)."""
    a, b = _second_derivative_bounds(f)
    return float(a if f.grid.dimension == 1 else max(a, b))


__all__ = [
    "Exponents", "TailRadius", "critical_exponent", "decay_exponent_a", "gamma_q",
    "heat_kernel", "heat_kernel_gradient_mag", "heat_kernel_lp_norm", "z_profile",
    "z_profile_gradient_mag", "z_edge_radius", "hopf_lax_eval", "sigma_source",
    "sigma_front", "gamma_barrier", "r_of_u0", "tau_of_u0", "smallness_lhs",
    "largeness_lhs", "gn_chain_gap", "max_d2",
]
