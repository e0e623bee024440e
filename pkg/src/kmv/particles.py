"""Killed interacting-particle Monte Carlo on (-1, 1).

Every Gaussian increment is a pure function of (seed, particle index, step
index) through the Threefry-2x32-20 block cipher (one Box-Muller pair per
particle and pair of consecutive steps), so results do not depend on
thread count or scheduling.  Particles are killed the first time an
Euler-Maruyama step lands outside (-1, 1); no bridge correction is applied,
which biases survival upward by O(sqrt(dt)).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba
import numpy as np
from numba import njit, prange

from .core import ConfigurationError, DensityField, DriftSpec, MeanFieldPath, TimeGrid

MASK32 = np.uint64(0xFFFFFFFF)
SAMPLE_STREAM = 0xFFFFFFFF  # step counter reserved for initial sampling
_PARITY = np.uint64(0x1BD11BDA)
_ROT = np.array([13, 15, 26, 6, 17, 29, 16, 24], dtype=np.uint64)
_INV32 = 1.0 / 4294967296.0

# prefer layers that need no version check; an explicit NUMBA_THREADING_LAYER still wins
if "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]


def configure_threads() -> int:
    """Apply ``KMV_THREADS`` (if set) to numba's thread pool; returns the count in use."""
    env = os.environ.get("KMV_THREADS")
    if env:
        n = max(1, min(int(env), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
    return numba.get_num_threads()


@njit(cache=True, inline="always")
def _rotl(v, r):
    return ((v << r) | (v >> (np.uint64(32) - r))) & MASK32


@njit(cache=True)
def threefry2x32(k0, k1, c0, c1):
    """Threefry-2x32 with 20 rounds; all arguments and results are 32-bit values in uint64."""
    k0 = np.uint64(k0) & MASK32
    k1 = np.uint64(k1) & MASK32
    ks0 = k0
    ks1 = k1
    ks2 = _PARITY ^ k0 ^ k1
    x0 = (np.uint64(c0) + ks0) & MASK32
    x1 = (np.uint64(c1) + ks1) & MASK32
    for r in range(20):
        x0 = (x0 + x1) & MASK32
        x1 = _rotl(x1, _ROT[r % 8])
        x1 ^= x0
        if r % 4 == 3:
            s = (r + 1) // 4
            if s % 3 == 0:
                a, b = ks0, ks1
            elif s % 3 == 1:
                a, b = ks1, ks2
            else:
                a, b = ks2, ks0
            x0 = (x0 + a) & MASK32
            x1 = (x1 + b + np.uint64(s)) & MASK32
    return x0, x1


@njit(cache=True, inline="always")
def _uniform53(k0, k1, c0, c1):
    y0, y1 = threefry2x32(k0, k1, c0, c1)
    return (np.float64(y0) + (np.float64(y1) + 0.5) * _INV32) * _INV32


@njit(cache=True, inline="always")
def _normal_pair(k0, k1, i, block):
    """Box-Muller pair from counter (i, block); steps 2*block and 2*block+1 use it."""
    y0, y1 = threefry2x32(k0, k1, i, block)
    u1 = (np.float64(y0) + 0.5) * _INV32
    u2 = (np.float64(y1) + 0.5) * _INV32
    r = np.sqrt(-2.0 * np.log(u1))
    a = 2.0 * np.pi * u2
    return r * np.cos(a), r * np.sin(a)


@njit(cache=True)
def _normals(k0, k1, n, step):
    out = np.empty(n)
    for i in range(n):
        c, s = _normal_pair(k0, k1, i, step >> 1)
        out[i] = c if step % 2 == 0 else s
    return out


@njit(cache=True, inline="always")
def _poly(c, x, y):
    # Horner in x of Horner-in-y rows
    acc = 0.0
    for r in range(c.shape[0] - 1, -1, -1):
        row = 0.0
        for s in range(c.shape[1] - 1, -1, -1):
            row = row * y + c[r, s]
        acc = acc * x + row
    return acc


@njit(cache=True, parallel=True)
def _advance(x, alive, zeta, spare, coeffs, y, dt, k0, k1, step, t_next):
    sq = np.sqrt(dt)
    for i in prange(x.shape[0]):
        if alive[i]:
            if step % 2 == 0:
                z, spare[i] = _normal_pair(k0, k1, i, step >> 1)
            else:
                z = spare[i]
            xi = x[i]
            xn = xi + _poly(coeffs, xi, y) * dt + sq * z
            if xn <= -1.0:
                alive[i] = False
                x[i] = -1.0
                zeta[i] = t_next
            elif xn >= 1.0:
                alive[i] = False
                x[i] = 1.0
                zeta[i] = t_next
            else:
                x[i] = xn


@njit(cache=True)
def _moments(x, alive, p):
    """(Y, Z, L, stderr of Y); serial so the summation order is fixed."""
    n = x.shape[0]
    ys = 0.0
    zs = 0.0
    count = 0
    for i in range(n):
        v = x[i] ** p
        zs += v
        if alive[i]:
            ys += v
            count += 1
    y_mean = ys / n
    ss = 0.0
    for i in range(n):
        a = x[i] ** p if alive[i] else 0.0
        ss += (a - y_mean) ** 2
    var = ss / (n - 1) if n > 1 else 0.0
    return y_mean, zs / n, count, np.sqrt(var / n)


def _split_seed(seed: int):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ConfigurationError(f"seed must be an unsigned 64-bit integer (got {seed})")
    return seed & 0xFFFFFFFF, seed >> 32


def standard_normals(seed: int, n: int, step: int) -> np.ndarray:
    """The increments particles 0..n-1 receive at ``step`` (exposed for testing)."""
    k0, k1 = _split_seed(seed)
    return _normals(k0, k1, n, step)


@dataclass
class ParticleEnsemble:
    positions: np.ndarray
    alive: np.ndarray
    lifetimes: np.ndarray  # inf while alive
    seed: int
    time: float = 0.0

    @property
    def N(self) -> int:
        return self.positions.shape[0]

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(
            self.positions.copy(), self.alive.copy(), self.lifetimes.copy(), self.seed, self.time
        )


@dataclass
class ParticleStats:
    """Per-node observables; ``Y`` is the killed p-th moment, ``Z`` the unkilled one."""

    t: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    L: np.ndarray
    stderr: np.ndarray
    N: int
    p: int
    seed: int
    final: ParticleEnsemble | None = None

    @property
    def survival(self) -> np.ndarray:
        return self.L / self.N

    def at(self, times) -> np.ndarray:
        """Node indices matching ``times`` (nearest node)."""
        return np.array([int(np.argmin(np.abs(self.t - s))) for s in np.atleast_1d(times)])


def sample_initial(m0: DensityField, N: int, seed: int) -> ParticleEnsemble:
    """N draws from m0 by inverting its piecewise-linear CDF (normalized to its own mass)."""
    if N < 1:
        raise ConfigurationError(f"N must be >= 1 (got {N})")
    v = m0.values
    h = m0.grid.h
    cell = 0.5 * h * (v[:-1] + v[1:])
    total = cell.sum()
    if not total > 0:
        raise ConfigurationError("initial density has zero mass; cannot sample particles")
    cdf = np.concatenate([[0.0], np.cumsum(cell)]) / total
    k0, k1 = _split_seed(seed)
    u = _sample_uniforms(k0, k1, int(N))
    x = np.interp(u, cdf, m0.grid.x)
    alive = (x > -1.0) & (x < 1.0)
    lifetimes = np.where(alive, np.inf, 0.0)
    return ParticleEnsemble(x, alive, lifetimes, int(seed))


@njit(cache=True)
def _sample_uniforms(k0, k1, n):
    out = np.empty(n)
    for i in range(n):
        out[i] = _uniform53(k0, k1, i, SAMPLE_STREAM)
    return out


def _run(ens: ParticleEnsemble, spec: DriftSpec, tgrid: TimeGrid, p: int, y_of_step) -> ParticleStats:
    if p < 1:
        raise ConfigurationError(f"moment order must be >= 1 (got {p})")
    configure_threads()
    work = ens.copy()
    k0, k1 = _split_seed(work.seed)
    coeffs = np.ascontiguousarray(spec.coeffs, dtype=np.float64)
    n = tgrid.n_t + 1
    Y = np.empty(n)
    Z = np.empty(n)
    L = np.empty(n, dtype=np.int64)
    se = np.empty(n)
    spare = np.empty(work.N)
    Y[0], Z[0], L[0], se[0] = _moments(work.positions, work.alive, p)
    for k in range(tgrid.n_t):
        y = min(1.0, max(-1.0, y_of_step(k, Y[k])))
        _advance(
            work.positions, work.alive, work.lifetimes, spare, coeffs, y, tgrid.dt, k0, k1, k, tgrid.t[k + 1]
        )
        Y[k + 1], Z[k + 1], L[k + 1], se[k + 1] = _moments(work.positions, work.alive, p)
    work.time = float(tgrid.T)
    return ParticleStats(tgrid.t.copy(), Y, Z, L, se, work.N, p, work.seed, final=work)


def simulate_decoupled(
    ens: ParticleEnsemble, spec: DriftSpec, beta: MeanFieldPath, tgrid: TimeGrid, p: int = 1
) -> ParticleStats:
    """Euler-Maruyama with the drift's mean-field argument frozen to ``beta``."""
    if beta.values.shape != (tgrid.n_t + 1,):
        raise ConfigurationError("beta path does not match the particle time grid")
    b = beta.values
    return _run(ens, spec, tgrid, p, lambda k, _y: float(b[k]))


def simulate_interacting(ens: ParticleEnsemble, spec: DriftSpec, p: int, tgrid: TimeGrid) -> ParticleStats:
    """N-particle system whose drift sees the current killed empirical moment Y^N."""
    if ens.N < 2:
        raise ConfigurationError("the interacting system needs N >= 2")
    return _run(ens, spec, tgrid, p, lambda _k, y: float(y))
