"""Density evolution of a McKean-Vlasov diffusion killed at the walls of (-1, 1)."""

from .core import (
    ConfigurationError,
    DensityField,
    DensityTrajectory,
    DriftSpec,
    MeanFieldPath,
    NumericalError,
    SpaceGrid,
    TimeGrid,
    affine_drift,
    bump_initial_density,
    eval_drift,
    make_drift,
    make_space_grid,
    make_time_grid,
    polynomial_drift,
    power_drift,
    quadrature,
    tilted_bump_density,
    zero_drift,
)
from .fpk import check_trajectory, mass_history, solve_linear_fpk, step
from .holder import NormReport, holder_seminorm, norm_report, parabolic_seminorm, sup_norm
from .mean_field import (
    FixedPointConfig,
    SolveReport,
    apply_T,
    compute_beta,
    residual_norm,
    solve_fixed_point,
)

__version__ = "0.1.0"
