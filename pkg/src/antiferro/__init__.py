"""Bounds and simulations for the Ising antiferromagnet on random regular graphs."""

from .analytic import (
    EdgeTypeDistribution,
    ModelParams,
    PairOverlapDistribution,
    beta_dagger,
    beta_star,
    first_moment_free_energy_bound,
    first_moment_maxcut_bound,
    second_moment_rate,
)
from .interpolation import InterpPoint, InterpResult, f_interp, maxcut_upper_bound, optimize_interp

__all__ = [
    "EdgeTypeDistribution",
    "InterpPoint",
    "InterpResult",
    "ModelParams",
    "PairOverlapDistribution",
    "beta_dagger",
    "beta_star",
    "f_interp",
    "first_moment_free_energy_bound",
    "first_moment_maxcut_bound",
    "maxcut_upper_bound",
    "optimize_interp",
    "second_moment_rate",
]
