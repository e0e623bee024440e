"""Discrete Hoelder norms for mean-field paths and density trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_PARABOLIC_PAIRS = 1_000_000


@dataclass(frozen=True)
class NormReport:
    sup_norm: float
    holder_seminorm: float
    gamma: float

    @property
    def total(self) -> float:
        return self.sup_norm + self.holder_seminorm

    def to_dict(self) -> dict:
        return {
            "sup_norm": self.sup_norm,
            "holder_seminorm": self.holder_seminorm,
            "total": self.total,
            "gamma": self.gamma,
        }


def _values_and_times(path):
    return np.asarray(path.values, dtype=float), np.asarray(path.tgrid.t, dtype=float)


def sup_norm(path) -> float:
    v = np.asarray(path.values, dtype=float)
    if v.size == 0:
        raise ValueError("empty path")
    return float(np.max(np.abs(v)))


def _check_gamma(gamma):
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1] (got {gamma})")


def holder_seminorm(path, gamma: float) -> float:
    """max over node pairs k != l of |f_k - f_l| / |t_k - t_l|**gamma, all pairs enumerated."""
    _check_gamma(gamma)
    v, t = _values_and_times(path)
    if v.size < 2:
        raise ValueError("need at least two nodes")
    best = 0.0
    for lag in range(1, v.size):
        num = np.abs(v[lag:] - v[:-lag])
        den = np.abs(t[lag:] - t[:-lag]) ** gamma
        best = max(best, float(np.max(num / den)))
    return best


def norm_report(path, gamma: float = 0.5) -> NormReport:
    return NormReport(sup_norm(path), holder_seminorm(path, gamma), gamma)


def parabolic_seminorm(traj, gamma: float, max_pairs: int = MAX_PARABOLIC_PAIRS) -> float:
    """Parabolic Hoelder quotient over space-time node pairs.

    Distance is |dx| + |dt|**0.5.  When the node set is too large the grid is
    thinned with a fixed stride in x and t, so the result is deterministic.
    """
    _check_gamma(gamma)
    u = np.asarray(traj.values, dtype=float)
    x = traj.grid.x
    t = traj.tgrid.t
    nt, nx = u.shape
    keep_nodes = int(np.sqrt(2 * max_pairs))
    sx = sxt = 1
    while (-(-nx // sx)) * (-(-nt // sxt)) > keep_nodes:
        # thin the denser axis first
        if -(-nx // sx) >= -(-nt // sxt):
            sx += 1
        else:
            sxt += 1
    xs = x[::sx]
    ts = t[::sxt]
    us = u[::sxt, ::sx]
    X = np.broadcast_to(xs, us.shape).ravel()
    Tm = np.broadcast_to(ts[:, None], us.shape).ravel()
    U = us.ravel()
    best = 0.0
    for i in range(U.size - 1):
        rho = np.abs(X[i + 1:] - X[i]) + np.sqrt(np.abs(Tm[i + 1:] - Tm[i]))
        q = np.abs(U[i + 1:] - U[i]) / rho**gamma
        best = max(best, float(q.max()))
    return best
