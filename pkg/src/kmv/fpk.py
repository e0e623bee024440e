"""Linear Fokker-Planck solve for a frozen mean-field path.

Conservative flux form on cell faces,

    dm/dt = -dF/dx,   F = b(x, beta) m - (1/2) dm/dx,

with upwinded advective flux, central diffusive flux, zero Dirichlet data
and backward Euler in time.  The step matrix is an M-matrix for every drift,
so densities stay nonnegative and the only mass change is the outflow
through the two walls.
"""

from __future__ import annotations

import logging

import numpy as np

from .core import (
    DensityField,
    DensityTrajectory,
    DriftSpec,
    MeanFieldPath,
    NumericalError,
    SpaceGrid,
    TimeGrid,
    eval_drift,
    trajectory_moments,
)
from .tridiag import TridiagonalBreakdown, solve_tridiagonal

log = logging.getLogger(__name__)

BETA_SLACK = 1e-12


class StepSystem:
    """Interior tridiagonal system ``(I + dt A) m_new = m_old`` for one step."""

    def __init__(self, lower, diag, upper, rhs):
        self.lower = lower
        self.diag = diag
        self.upper = upper
        self.rhs = rhs

    def column_margin(self) -> float:
        """min_j (diag_j - |upper_{j-1}| - |lower_{j+1}|); >= 1 in exact arithmetic."""
        margin = self.diag.copy()
        margin[1:] -= np.abs(self.upper[:-1])
        margin[:-1] -= np.abs(self.lower[1:])
        return float(margin.min())

    def is_m_matrix(self) -> bool:
        return (
            bool(np.all(self.diag > 0))
            and bool(np.all(self.lower[1:] <= 0))
            and bool(np.all(self.upper[:-1] <= 0))
            and self.column_margin() > 0
        )


def assemble(m_k: np.ndarray, beta: float, spec: DriftSpec, grid: SpaceGrid, dt: float) -> StepSystem:
    h = grid.h
    b = np.asarray(eval_drift(spec, grid.faces, beta), dtype=float)
    bp = np.maximum(b, 0.0)  # faces j+1/2, j = 0..M
    bm = np.minimum(b, 0.0)
    diff = 0.5 / (h * h)
    # row j (interior node j, 1..M) touches faces j-1/2 (index j-1) and j+1/2 (index j)
    diag = 1.0 + dt * ((bp[1:] - bm[:-1]) / h + 2.0 * diff)
    upper = dt * (bm[1:] / h - diff)
    lower = dt * (-bp[:-1] / h - diff)
    upper[-1] = 0.0
    lower[0] = 0.0
    return StepSystem(lower, diag, upper, m_k[1:-1].copy())


def step(m_k: DensityField, beta_k: float, spec: DriftSpec, grid: SpaceGrid, dt: float) -> DensityField:
    """One backward-Euler step with the drift frozen at ``beta_k``."""
    if not dt > 0:
        raise ValueError(f"dt must be positive (got {dt})")
    if not abs(beta_k) <= 1.0 + BETA_SLACK:
        raise ValueError(f"|beta| must be <= 1 (got {beta_k}); clamp before stepping")
    values = _step_values(m_k.values, float(beta_k), spec, grid, dt)
    return DensityField(grid, values)


def _step_values(m: np.ndarray, beta: float, spec: DriftSpec, grid: SpaceGrid, dt: float) -> np.ndarray:
    system = assemble(m, beta, spec, grid, dt)
    margin = system.column_margin()
    if not margin > 0 or not np.all(system.diag > 0):
        raise NumericalError(
            f"step matrix lost diagonal dominance: h={grid.h:.6g}, dt={dt:.6g}, margin={margin!r}"
        )
    try:
        interior = solve_tridiagonal(system.lower, system.diag, system.upper, system.rhs)
    except TridiagonalBreakdown as exc:
        raise NumericalError(
            f"tridiagonal solve failed: h={grid.h:.6g}, dt={dt:.6g}, margin={margin!r} ({exc})"
        ) from None
    out = np.zeros_like(m)
    out[1:-1] = interior
    return out


def clamp_path(beta: MeanFieldPath) -> tuple[np.ndarray, int]:
    """Clip beta into [-1, 1]; returns the clipped values and how many nodes moved."""
    v = beta.values
    clipped = np.clip(v, -1.0, 1.0)
    return clipped, int(np.count_nonzero(clipped != v))


def solve_linear_fpk(
    m0: DensityField,
    beta: MeanFieldPath,
    spec: DriftSpec,
    grid: SpaceGrid,
    tgrid: TimeGrid,
) -> DensityTrajectory:
    """Density trajectory for a given beta path (coefficients taken at t_{k+1})."""
    if beta.tgrid is not tgrid and not beta.tgrid.same_as(tgrid):
        raise ValueError("beta path lives on a different time grid")
    b, n_clamped = clamp_path(beta)
    if n_clamped:
        log.warning("clamped %d beta values into [-1, 1]", n_clamped)
    out = np.empty((tgrid.n_t + 1, grid.n_nodes))
    out[0] = m0.values
    y_free = spec.independent_of_y
    for k in range(tgrid.n_t):
        try:
            out[k + 1] = _step_values(out[k], 0.0 if y_free else float(b[k + 1]), spec, grid, tgrid.dt)
        except NumericalError as exc:
            raise NumericalError(f"time step {k} -> {k + 1}: {exc}") from None
    return DensityTrajectory(grid, tgrid, out)


def mass_history(traj: DensityTrajectory) -> np.ndarray:
    return trajectory_moments(traj, 0)


def check_trajectory(traj: DensityTrajectory, step_slack: float = 1e-12) -> None:
    """Raise ``NumericalError`` on any violated structural invariant."""
    v = traj.values
    if np.any(v[:, 0] != 0.0) or np.any(v[:, -1] != 0.0):
        raise NumericalError("boundary values are not exactly zero")
    if v.min() < -1e-12:
        raise NumericalError(f"negative density {v.min():.3e}")
    mass = mass_history(traj)
    # the continuum-normalized bump has trapezoid mass slightly above 1 on coarse grids;
    # the scheme can only be held to the mass it was given
    cap = max(1.0, float(mass[0]))
    if mass[0] > 1.0 + 1e-10:
        log.warning("initial grid mass is %.17g (above 1 by quadrature error)", mass[0])
    if mass.max() > cap + 1e-10:
        raise NumericalError(f"mass {mass.max()!r} exceeds {cap!r}")
    jumps = np.diff(mass)
    if jumps.size and jumps.max() > step_slack:
        k = int(np.argmax(jumps))
        raise NumericalError(f"mass increased by {jumps[k]:.3e} at step {k}")
