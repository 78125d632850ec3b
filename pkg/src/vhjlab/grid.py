"""Radial grids, sampled fields, initial-datum families and discrete operators.

Every run is reduced to a uniform mesh ``r_j = j*h`` (``j = 0..M``) on the
half line; the dimension ``N`` enters only through the radial measure
``omega_N r^(N-1) dr`` and the ``(N-1)/r`` term of the Laplacian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

SIGN_TAGS = ("nonnegative", "nonpositive", "general")
FAMILIES = ("gaussian", "smooth_bump", "tabulated")


def sphere_area(N: int) -> float:
    """Surface measure of the unit sphere in R^N (omega_1 = 2)."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


@dataclass(frozen=True)
class RadialGrid:
    dimension: int
    node_count: int
    spacing: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if int(self.node_count) != self.node_count or self.node_count < 16:
            raise ValueError(f"node_count must be an integer >= 16, got {self.node_count}")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise ValueError(f"spacing must be positive and finite, got {self.spacing}")

    @classmethod
    def from_radius(cls, radius: float, spacing: float, dimension: int = 1) -> "RadialGrid":
        M = int(round(radius / spacing))
        return cls(dimension, M, spacing)

    @property
    def radius(self) -> float:
        return self.node_count * self.spacing

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.node_count + 1) * self.spacing

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights against ``omega_N r^(N-1)``."""
        r = self.nodes
        w = np.full(r.shape, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return sphere_area(self.dimension) * w * r ** (self.dimension - 1)

    def refine(self, factor: int = 2) -> "RadialGrid":
        return RadialGrid(self.dimension, self.node_count * factor, self.spacing / factor)


@dataclass(frozen=True)
class Field:
    grid: RadialGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.node_count + 1,):
            raise ValueError(
                f"expected {self.grid.node_count + 1} values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        if self.time < 0:
            raise ValueError(f"time must be nonnegative, got {self.time}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values, time: Optional[float] = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)


@dataclass(frozen=True)
class InitialDatum:
    """A parametrised initial condition.

    ``gaussian``:     ``A exp(-r^2 / sigma^2)``
    ``smooth_bump``:  ``A (1 - (r/R0)^2)^3`` for ``r < R0``, 0 beyond (C^2 at R0)
    ``tabulated``:    explicit nodal values
    """

    family: str
    amplitude: float = 1.0
    width: float = 1.0
    support_radius: float = 1.0
    values: Optional[tuple] = field(default=None, repr=False)
    sign: str = "general"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown datum family {self.family!r}")
        if self.sign not in SIGN_TAGS:
            raise ValueError(f"unknown sign tag {self.sign!r}")
        for name in ("amplitude", "width", "support_radius"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.width <= 0 or self.support_radius <= 0:
            raise ValueError("width and support_radius must be positive")
        if self.family == "tabulated" and self.values is None:
            raise ValueError("tabulated datum needs values")

    @classmethod
    def gaussian(cls, amplitude=1.0, width=1.0, sign=None) -> "InitialDatum":
        return cls("gaussian", amplitude=amplitude, width=width, sign=sign or _sign_of(amplitude))

    @classmethod
    def smooth_bump(cls, amplitude=1.0, support_radius=1.0, sign=None) -> "InitialDatum":
        return cls("smooth_bump", amplitude=amplitude, support_radius=support_radius,
                   sign=sign or _sign_of(amplitude))

    @classmethod
    def tabulated(cls, values, sign="general") -> "InitialDatum":
        return cls("tabulated", values=tuple(float(v) for v in values), sign=sign)

    def scaled(self, factor: float) -> "InitialDatum":
        if self.family == "tabulated":
            return InitialDatum.tabulated([factor * v for v in self.values], self.sign)
        return InitialDatum(self.family, self.amplitude * factor, self.width,
                            self.support_radius, None, self.sign)

    def evaluate(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if self.family == "gaussian":
            return self.amplitude * np.exp(-(r / self.width) ** 2)
        if self.family == "smooth_bump":
            s = np.clip(1.0 - (r / self.support_radius) ** 2, 0.0, None)
            return self.amplitude * s ** 3
        raise ValueError("tabulated datum has no continuous form")


def _sign_of(amplitude: float) -> str:
    if amplitude > 0:
        return "nonnegative"
    if amplitude < 0:
        return "nonpositive"
    return "general"


def sample_datum(datum: InitialDatum, grid: RadialGrid, time: float = 0.0) -> Field:
    if datum.family == "smooth_bump" and datum.support_radius >= grid.radius:
        raise ValueError(
            f"support radius {datum.support_radius} exceeds grid radius {grid.radius}")
    if datum.family == "tabulated":
        values = np.asarray(datum.values, dtype=float)
    else:
        values = datum.evaluate(grid.nodes)
    if not np.all(np.isfinite(values)):
        raise ValueError("datum produced non-finite samples")
    if datum.sign == "nonnegative" and np.any(values < 0):
        raise ValueError("datum tagged nonnegative has negative samples")
    if datum.sign == "nonpositive" and np.any(values > 0):
        raise ValueError("datum tagged nonpositive has positive samples")
    return Field(grid, values, time)


def lp_norm(f: Field, p: float) -> float:
    """L^p norm against the radial measure; ``p = inf`` is the nodal max."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.values)
    if math.isinf(p):
        return float(a.max())
    return float(np.dot(f.grid.weights, a ** p) ** (1.0 / p))


def integral(f: Field) -> float:
    """Signed integral (the mass ``I = int u dx``)."""
    return float(np.dot(f.grid.weights, f.values))


def _check_size(grid: RadialGrid):
    if grid.node_count < 2:
        raise ValueError("grid too small for derivatives")


def radial_derivative(u: np.ndarray, h: float) -> np.ndarray:
    ur = np.empty_like(u)
    ur[1:-1] = (u[2:] - u[:-2]) / (2 * h)
    ur[0] = 0.0
    ur[-1] = (3 * u[-1] - 4 * u[-2] + u[-3]) / (2 * h)
    return ur


def radial_second_derivative(u: np.ndarray, h: float) -> np.ndarray:
    urr = np.empty_like(u)
    urr[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / h ** 2
    urr[0] = 2 * (u[1] - u[0]) / h ** 2
    urr[-1] = (2 * u[-1] - 5 * u[-2] + 4 * u[-3] - u[-4]) / h ** 2
    return urr


def radial_laplacian(u: np.ndarray, h: float, N: int) -> np.ndarray:
    urr = radial_second_derivative(u, h)
    lap = urr.copy()
    if N > 1:
        r = np.arange(len(u)) * h
        lap[1:] += (N - 1) * radial_derivative(u, h)[1:] / r[1:]
        lap[0] = N * urr[0]
    return lap


def gradient_field(f: Field) -> Field:
    """Radial derivative ``u_r`` (its modulus is ``|grad u|``)."""
    _check_size(f.grid)
    return f.with_values(radial_derivative(f.values, f.grid.spacing))


def laplacian_field(f: Field) -> Field:
    _check_size(f.grid)
    return f.with_values(radial_laplacian(f.values, f.grid.spacing, f.grid.dimension))


def hessian_radial_eigenvalues(f: Field) -> tuple[Field, Field]:
    """Radial (``u_rr``) and tangential (``u_r / r``) Hessian eigenvalues."""
    _check_size(f.grid)
    h = f.grid.spacing
    urr = radial_second_derivative(f.values, h)
    tang = np.empty_like(urr)
    tang[1:] = radial_derivative(f.values, h)[1:] / f.r[1:]
    tang[0] = urr[0]
    return f.with_values(urr), f.with_values(tang)


def max_hessian_eigenvalue(f: Field) -> float:
    radial, tangential = hessian_radial_eigenvalues(f)
    if f.grid.dimension == 1:
        return float(radial.values.max())
    return float(max(radial.values.max(), tangential.values.max()))
