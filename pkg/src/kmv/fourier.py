"""Sine-series solution of the absorbed heat equation m_t = m_xx / 2 on (-1, 1).

With eta_n(x) = sin(n*pi*(x+1)/2) (already orthonormal in L2(-1, 1)),

    m(x, t) = sum_n (m0, eta_n) exp(-n^2 pi^2 t / 8) eta_n(x).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .core import DensityField, quadrature

DEFAULT_MODES = 50
ORACLE_MIN_TIME = 0.01

# sin(n pi / 2) and cos(n pi / 2) by n mod 4, exact
_SIN_QUARTER = (0.0, 1.0, 0.0, -1.0)
_COS_QUARTER = (1.0, 0.0, -1.0, 0.0)


def eigenfunction(n: int, x):
    return np.sin(n * np.pi * (np.asarray(x, dtype=float) + 1.0) / 2.0)


def decay_rate(n):
    return np.asarray(n, dtype=float) ** 2 * np.pi**2 / 8.0


def eigenfunction_integral(n):
    """int_{-1}^{1} eta_n dx = 2 (1 - cos n pi) / (n pi)."""
    n = np.asarray(n)
    return np.where(n % 2 == 1, 4.0 / (n * np.pi), 0.0)


@functools.lru_cache(maxsize=None)
def check_orthonormal(n_max: int = 4) -> float:
    """Largest deviation of (eta_m, eta_n) from the identity for m, n <= n_max."""
    worst = 0.0
    for m in range(1, n_max + 1):
        for n in range(m, n_max + 1):
            val, _ = integrate.quad(
                lambda s: eigenfunction(m, s) * eigenfunction(n, s), -1.0, 1.0, epsabs=1e-14, limit=200
            )
            worst = max(worst, abs(val - (1.0 if m == n else 0.0)))
    if worst > 1e-10:
        raise RuntimeError(f"sine basis is not orthonormal on (-1, 1): deviation {worst:.3e}")
    return worst


@dataclass(frozen=True)
class FourierSolution:
    coefficients: np.ndarray  # c_n for n = 1..N
    coef_bound: float  # bound on |c_n| for every n, e.g. int |m0|

    @property
    def n_modes(self) -> int:
        return self.coefficients.shape[0]

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.n_modes + 1)

    @property
    def rates(self) -> np.ndarray:
        return decay_rate(self.modes)

    def tail_bound(self, t: float) -> float:
        """Bound on the truncated tail, using |c_n| <= coef_bound and |eta_n| <= 1."""
        if t <= 0:
            return np.inf
        n = np.arange(self.n_modes + 1, self.n_modes + 2000)
        return float(self.coef_bound * np.exp(-decay_rate(n) * t).sum())


def _project_profile(f, n: int) -> float:
    # eta_n(x) = sin(w x) cos(n pi/2) + cos(w x) sin(n pi/2) with w = n pi / 2
    w = n * np.pi / 2.0
    total = 0.0
    s, c = _SIN_QUARTER[n % 4], _COS_QUARTER[n % 4]
    opts = dict(epsabs=1e-14, epsrel=1e-12, limit=400)
    if c:
        total += c * integrate.quad(f, -1.0, 1.0, weight="sin", wvar=w, **opts)[0]
    if s:
        total += s * integrate.quad(f, -1.0, 1.0, weight="cos", wvar=w, **opts)[0]
    return total


def project_initial(m0: DensityField, n_modes: int = DEFAULT_MODES) -> FourierSolution:
    """Coefficients (m0, eta_n), n = 1..n_modes.

    Uses adaptive quadrature against ``m0.profile`` when the field carries its
    continuum formula, otherwise the grid trapezoid rule.
    """
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1 (got {n_modes})")
    check_orthonormal()
    if m0.profile is not None:
        f = lambda s: float(m0.profile(np.array([s]))[0])
        coeffs = np.array([_project_profile(f, n) for n in range(1, n_modes + 1)])
        l1 = integrate.quad(lambda s: abs(f(s)), -1.0, 1.0, epsabs=1e-14, limit=200)[0]
    else:
        grid = m0.grid
        basis = eigenfunction(np.arange(1, n_modes + 1)[:, None], grid.x[None, :])
        w = np.full(grid.n_nodes, grid.h)
        w[0] = w[-1] = 0.5 * grid.h
        coeffs = basis @ (w * m0.values)
        l1 = quadrature(DensityField(grid, np.abs(m0.values)), 0)
    return FourierSolution(coeffs, float(l1))


def from_coefficients(coeffs, coef_bound: float | None = None) -> FourierSolution:
    coeffs = np.asarray(coeffs, dtype=float)
    if coef_bound is None:
        # |(m0, eta_n)| <= ||m0||_2 = |c|_2 when coeffs is the full expansion
        coef_bound = float(np.linalg.norm(coeffs))
    return FourierSolution(coeffs, coef_bound)


def evaluate(sol: FourierSolution, x, t: float):
    """Truncated series at (x, t); returns ``(values, tail_bound)``."""
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    x = np.asarray(x, dtype=float)
    weights = sol.coefficients * np.exp(-sol.rates * t)
    basis = eigenfunction(sol.modes[:, None], x.reshape(1, -1))
    values = (weights @ basis).reshape(x.shape)
    # sin(n pi (x+1)/2) at x = +-1 is only zero up to roundoff
    values = np.where(np.abs(x) >= 1.0, 0.0, values)
    return values, sol.tail_bound(t)


def evaluate_on_grid(sol: FourierSolution, grid, times) -> np.ndarray:
    """Array of shape (len(times), n_nodes)."""
    return np.stack([evaluate(sol, grid.x, float(t))[0] for t in np.atleast_1d(times)])


def oracle_mass(sol: FourierSolution, t):
    """Exact mass of the truncated series: sum c_n exp(-lambda_n t) int eta_n."""
    t = np.asarray(t, dtype=float)
    ints = eigenfunction_integral(sol.modes)
    decay = np.exp(-np.multiply.outer(t, sol.rates))
    return decay @ (sol.coefficients * ints)
