"""Moment map and damped Picard iteration for the nonlinear FPK.

One application of the map takes a path beta, solves the linear FPK with
the drift frozen at beta, and returns the p-th moment path of the result.
A fixed point of that map is the mean-field solution.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigurationError,
    DensityField,
    DensityTrajectory,
    DriftSpec,
    MeanFieldPath,
    SpaceGrid,
    TimeGrid,
    quadrature,
    trajectory_moments,
)
from .fpk import clamp_path, solve_linear_fpk
from .holder import NormReport, norm_report

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FixedPointConfig:
    moment_order: int = 1
    theta: float = 0.5
    epsilon: float = 1e-8
    max_iterations: int = 200

    def __post_init__(self):
        if int(self.moment_order) != self.moment_order or self.moment_order < 1:
            raise ConfigurationError(f"moment_order must be a positive integer (got {self.moment_order})")
        if not 0.0 < self.theta <= 1.0:
            raise ConfigurationError(f"theta must lie in (0, 1] (got {self.theta})")
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive (got {self.epsilon})")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ConfigurationError(f"max_iterations must be >= 1 (got {self.max_iterations})")


@dataclass
class SolveReport:
    iteration_count: int
    residual_history: list = field(default_factory=list)
    final_residual: float = np.inf
    converged: bool = False
    clamped_values: int = 0
    diagnostics: NormReport | None = None

    def to_dict(self) -> dict:
        return {
            "iteration_count": self.iteration_count,
            "residual_history": [float(r) for r in self.residual_history],
            "final_residual": float(self.final_residual),
            "converged": bool(self.converged),
            "clamped_values": int(self.clamped_values),
            "diagnostics": self.diagnostics.to_dict() if self.diagnostics else None,
        }


def compute_beta(traj: DensityTrajectory, p: int) -> MeanFieldPath:
    return MeanFieldPath(traj.tgrid, trajectory_moments(traj, p))


def residual_norm(a: MeanFieldPath, b: MeanFieldPath) -> float:
    """Sup-norm distance between two paths on the same time grid."""
    if a.tgrid is not b.tgrid and not a.tgrid.same_as(b.tgrid):
        raise ConfigurationError(
            f"paths live on different time grids (T={a.tgrid.T}, n_t={a.tgrid.n_t}) "
            f"vs (T={b.tgrid.T}, n_t={b.tgrid.n_t})"
        )
    return float(np.max(np.abs(a.values - b.values)))


def _apply(beta, m0, spec, grid, tgrid, p):
    traj = solve_linear_fpk(m0, beta, spec, grid, tgrid)
    return traj, compute_beta(traj, p)


def apply_T(
    beta: MeanFieldPath,
    m0: DensityField,
    spec: DriftSpec,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    p: int,
) -> MeanFieldPath:
    """Moment path of the linear FPK solution driven by ``beta``."""
    return _apply(beta, m0, spec, grid, tgrid, p)[1]


def initial_guess(m0: DensityField, tgrid: TimeGrid, p: int) -> MeanFieldPath:
    """The initial moment of m0, held constant in time."""
    return MeanFieldPath.constant(tgrid, quadrature(m0, p))


def solve_fixed_point(
    m0: DensityField,
    spec: DriftSpec,
    grid: SpaceGrid,
    tgrid: TimeGrid,
    cfg: FixedPointConfig = FixedPointConfig(),
    beta0: MeanFieldPath | None = None,
):
    """Damped Picard iteration ``beta <- (1 - theta) beta + theta T(beta)``.

    T(beta^0) is evaluated once up front.  Iteration n forms beta^n from
    beta^{n-1} and its image, evaluates T(beta^n) and records
    ``|T(beta^n) - beta^n|_inf``, so every recorded residual belongs to a path
    the solver could return.  The loop stops as soon as that residual is
    <= epsilon and returns beta^n with its own trajectory T1(beta^n).  At
    least one iteration always runs.  Running out of iterations is reported
    through ``SolveReport.converged`` and does not raise.

    Returns ``(trajectory, beta, report)``.
    """
    p = cfg.moment_order
    beta = initial_guess(m0, tgrid, p) if beta0 is None else beta0
    clamped = clamp_path(beta)[1]
    traj, image = _apply(beta, m0, spec, grid, tgrid, p)
    log.debug("picard start: residual %.3e", residual_norm(image, beta))
    history = []
    converged = False
    for it in range(1, cfg.max_iterations + 1):
        beta = MeanFieldPath(tgrid, (1.0 - cfg.theta) * beta.values + cfg.theta * image.values)
        clamped += clamp_path(beta)[1]
        traj, image = _apply(beta, m0, spec, grid, tgrid, p)
        res = residual_norm(image, beta)
        history.append(res)
        log.debug("picard iteration %d: residual %.3e", it, res)
        if res <= cfg.epsilon:
            converged = True
            break
    if not converged:
        log.warning("fixed point not reached after %d iterations (residual %.3e)", len(history), history[-1])
    report = SolveReport(
        iteration_count=len(history),
        residual_history=history,
        final_residual=history[-1],
        converged=converged,
        clamped_values=clamped,
        diagnostics=norm_report(beta, 0.5),
    )
    return traj, beta, report
