"""Numerical laboratory for the viscous Hamilton-Jacobi equation u_t - lap u + |grad u|^q = 0."""

from .grid import Field, InitialDatum, RadialGrid, integral, lp_norm, sample_datum
from .solver import ProblemSpec, SchemeConfig, Trajectory, solve

__version__ = "0.1.0"

__all__ = ["Field", "InitialDatum", "RadialGrid", "ProblemSpec", "SchemeConfig", "Trajectory",
           "integral", "lp_norm", "sample_datum", "solve", "__version__"]
