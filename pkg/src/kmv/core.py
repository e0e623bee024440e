"""Grids, density containers, drift families and quadrature on (-1, 1)."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import integrate, optimize

MIN_INTERIOR = 3
MASS_SLACK = 1e-10
NEG_SLACK = 1e-12


class ConfigurationError(ValueError):
    """Invalid user-facing parameter (grid size, drift family, ...)."""


class NumericalError(RuntimeError):
    """A discrete system lost the structure the scheme relies on."""


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform grid on [-1, 1] with ``M`` interior nodes.

    Nodes are mirrored so ``x[j] == -x[M+1-j]`` holds bitwise.
    """

    M: int
    h: float
    x: np.ndarray = field(repr=False)

    @property
    def n_nodes(self) -> int:
        return self.M + 2

    @property
    def interior(self) -> np.ndarray:
        return self.x[1:-1]

    @property
    def faces(self) -> np.ndarray:
        """Cell-face midpoints x_{j+1/2}, j = 0..M."""
        return 0.5 * (self.x[:-1] + self.x[1:])

    def same_as(self, other: "SpaceGrid") -> bool:
        return self.M == other.M


def make_space_grid(M: int) -> SpaceGrid:
    if int(M) != M or M < MIN_INTERIOR:
        raise ConfigurationError(f"M must be an integer >= {MIN_INTERIOR} (got {M})")
    M = int(M)
    n = M + 2
    h = 2.0 / (M + 1)
    x = np.empty(n)
    half = n // 2
    j = np.arange(half)
    x[:half] = -1.0 + j * h
    x[n - half:] = -x[:half][::-1]
    if n % 2:
        x[half] = 0.0
    return SpaceGrid(M=M, h=h, x=x)


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_t: int
    dt: float
    t: np.ndarray = field(repr=False)

    def same_as(self, other: "TimeGrid") -> bool:
        return self.n_t == other.n_t and self.T == other.T


def make_time_grid(T: float, n_t: int) -> TimeGrid:
    if not T > 0:
        raise ConfigurationError(f"T must be positive (got {T})")
    if int(n_t) != n_t or n_t < 1:
        raise ConfigurationError(f"n_t must be an integer >= 1 (got {n_t})")
    n_t = int(n_t)
    dt = T / n_t
    t = np.arange(n_t + 1) * dt
    t[-1] = T
    return TimeGrid(T=float(T), n_t=n_t, dt=dt, t=t)


# ---------------------------------------------------------------------------
# densities


@dataclass
class DensityField:
    """Nodal density values on a :class:`SpaceGrid`.

    ``profile`` optionally carries the continuum formula the values were
    sampled from; the Fourier projection integrates against it when present.
    """

    grid: SpaceGrid
    values: np.ndarray
    profile: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ConfigurationError(
                f"density has {self.values.shape} values, grid expects {self.grid.n_nodes}"
            )

    @property
    def mass(self) -> float:
        return quadrature(self, 0)

    def check(self) -> None:
        """Raise ``NumericalError`` if the field violates the density invariants."""
        v = self.values
        if v[0] != 0.0 or v[-1] != 0.0:
            raise NumericalError("Dirichlet data violated: boundary values must be 0")
        if v.min() < -NEG_SLACK:
            raise NumericalError(f"negative density {v.min():.3e}")
        mass = self.mass
        if not (-NEG_SLACK <= mass <= 1.0 + MASS_SLACK):
            raise NumericalError(f"mass {mass!r} outside [0, 1]")


@dataclass
class DensityTrajectory:
    """Snapshots of the density, one row per time node."""

    grid: SpaceGrid
    tgrid: TimeGrid
    values: np.ndarray  # shape (n_t + 1, M + 2)

    def __post_init__(self):
        expected = (self.tgrid.n_t + 1, self.grid.n_nodes)
        if self.values.shape != expected:
            raise ConfigurationError(f"trajectory shape {self.values.shape}, expected {expected}")

    def __len__(self) -> int:
        return self.values.shape[0]

    def snapshot(self, k: int) -> DensityField:
        return DensityField(self.grid, self.values[k])


@dataclass
class MeanFieldPath:
    """Scalar path beta_k on the nodes of a :class:`TimeGrid`."""

    tgrid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.tgrid.n_t + 1,):
            raise ConfigurationError(
                f"path has {self.values.shape} values, time grid expects {self.tgrid.n_t + 1}"
            )

    @classmethod
    def constant(cls, tgrid: TimeGrid, value: float = 0.0) -> "MeanFieldPath":
        return cls(tgrid, np.full(tgrid.n_t + 1, float(value)))


def _bump_shape(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(1.0 / (xi * xi - 1.0))
    return out


@functools.lru_cache(maxsize=None)
def bump_normalization() -> float:
    """kappa = 1 / int_{-1}^{1} exp(1/(x^2-1)) dx, by adaptive quadrature."""
    f = lambda s: float(np.exp(1.0 / (s * s - 1.0))) if abs(s) < 1.0 else 0.0
    left, _ = integrate.quad(f, -1.0, 0.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    right, _ = integrate.quad(f, 0.0, 1.0, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 / (left + right)


def bump_profile(x):
    """Continuum bump density kappa * exp(1/(x^2-1)) on (-1, 1), zero outside."""
    return bump_normalization() * _bump_shape(x)


def bump_initial_density(grid: SpaceGrid) -> DensityField:
    values = bump_profile(grid.x)
    values[0] = values[-1] = 0.0
    return DensityField(grid, values, profile=bump_profile)


def tilted_bump_density(grid: SpaceGrid, tilt: float) -> DensityField:
    """Bump multiplied by ``1 + tilt*x`` and renormalized; asymmetric test data.

    ``|tilt| < 1`` keeps it positive.
    """
    if not abs(tilt) < 1.0:
        raise ConfigurationError(f"tilt must satisfy |tilt| < 1 (got {tilt})")
    f = lambda s: float(_bump_shape(np.array([s]))[0] * (1.0 + tilt * s))
    norm = integrate.quad(f, -1.0, 0.0, epsabs=1e-14, limit=200)[0] + integrate.quad(
        f, 0.0, 1.0, epsabs=1e-14, limit=200
    )[0]
    profile = lambda x: _bump_shape(x) * (1.0 + tilt * np.asarray(x, dtype=float)) / norm
    values = profile(grid.x)
    values[0] = values[-1] = 0.0
    return DensityField(grid, values, profile=profile)


def int_power(x: np.ndarray, p: int) -> np.ndarray:
    """x**p by repeated squaring; unlike vectorized pow it is exactly odd/even in x."""
    result = np.ones_like(x)
    base = np.array(x, dtype=float)
    while p:
        if p & 1:
            result = result * base
        p >>= 1
        if p:
            base = base * base
    return result


def quadrature(field: DensityField, p: int) -> float:
    """Composite trapezoid approximation of int x^p m(x) dx over (-1, 1).

    Mirror-image nodes are summed pairwise first, so an even field with odd
    ``p`` integrates to exactly zero.
    """
    if p < 0:
        raise ConfigurationError(f"moment order must be >= 0 (got {p})")
    grid = field.grid
    g = field.values * int_power(grid.x, p)
    g[0] *= 0.5
    g[-1] *= 0.5
    return float(grid.h * _folded_sum(g))


def _folded_sum(g: np.ndarray) -> float:
    n = g.shape[-1]
    half = n // 2
    pairs = g[..., :half] + g[..., ::-1][..., :half]
    total = pairs.sum(axis=-1)
    if n % 2:
        total = total + g[..., half]
    return total


def trajectory_moments(traj: DensityTrajectory, p: int) -> np.ndarray:
    """Row-wise :func:`quadrature` over every snapshot."""
    grid = traj.grid
    g = traj.values * int_power(grid.x, p)
    g[:, 0] *= 0.5
    g[:, -1] *= 0.5
    return grid.h * _folded_sum(g)


# ---------------------------------------------------------------------------
# drift families

DRIFT_FAMILIES = ("zero", "power", "affine", "bivariate-polynomial")
MAX_POLY_DEGREE = 4


@dataclass(frozen=True)
class DriftSpec:
    """Drift b(x, y) from a closed parametric family.

    ``coeffs[r, s]`` is the coefficient of ``x**r * y**s``; every family is
    compiled to this matrix so compiled kernels can evaluate it by Horner.
    """

    family: str
    params: Mapping[str, object]
    coeffs: np.ndarray = field(repr=False)
    sup_bound: float = 0.0
    lipschitz_y: float = 0.0

    @property
    def independent_of_y(self) -> bool:
        return not np.any(self.coeffs[:, 1:])

    @property
    def vanishes_at_zero_y(self) -> bool:
        """True when b(x, 0) = 0 for every x."""
        return not np.any(self.coeffs[:, 0])


def zero_drift() -> DriftSpec:
    return DriftSpec("zero", {}, np.zeros((1, 1)), 0.0, 0.0)


def power_drift(c: float = 1.0, q: int = 2) -> DriftSpec:
    """b(x, y) = c * y**q."""
    if int(q) != q or q < 1:
        raise ConfigurationError(f"power drift exponent q must be an integer >= 1 (got {q})")
    q = int(q)
    coeffs = np.zeros((1, q + 1))
    coeffs[0, q] = c
    return DriftSpec("power", {"c": float(c), "q": q}, coeffs, abs(c), abs(c) * q)


def affine_drift(a: float = 0.0, c: float = 0.0) -> DriftSpec:
    """b(x, y) = a*x + c*y."""
    coeffs = np.zeros((2, 2))
    coeffs[1, 0] = a
    coeffs[0, 1] = c
    return DriftSpec("affine", {"a": float(a), "c": float(c)}, coeffs, abs(a) + abs(c), abs(c))


def polynomial_drift(terms) -> DriftSpec:
    """b(x, y) = sum a_rs x^r y^s from ``(r, s, a_rs)`` triples, total degree <= 4."""
    terms = [(int(r), int(s), float(a)) for r, s, a in terms]
    if not terms:
        raise ConfigurationError("bivariate-polynomial drift needs at least one term")
    for r, s, _ in terms:
        if r < 0 or s < 0 or r + s > MAX_POLY_DEGREE:
            raise ConfigurationError(
                f"term x^{r} y^{s} exceeds total degree {MAX_POLY_DEGREE} or is negative"
            )
    deg = max(max(r, s) for r, s, _ in terms)
    coeffs = np.zeros((deg + 1, deg + 1))
    for r, s, a in terms:
        coeffs[r, s] += a
    dy = npoly.polyder(coeffs, axis=1) if coeffs.shape[1] > 1 else np.zeros((1, 1))
    return DriftSpec(
        "bivariate-polynomial",
        {"terms": [list(t) for t in terms]},
        coeffs,
        _square_abs_max(coeffs),
        _square_abs_max(dy),
    )


def make_drift(family: str, params: Mapping | None = None) -> DriftSpec:
    params = dict(params or {})
    try:
        if family == "zero":
            return zero_drift()
        if family == "power":
            return power_drift(**params)
        if family == "affine":
            return affine_drift(**params)
        if family == "bivariate-polynomial":
            return polynomial_drift(params["terms"])
    except TypeError as exc:
        raise ConfigurationError(f"bad coefficients for drift family {family!r}: {exc}") from None
    except KeyError:
        raise ConfigurationError("bivariate-polynomial drift requires 'terms'") from None
    raise ConfigurationError(f"unknown drift family {family!r}; expected one of {DRIFT_FAMILIES}")


def eval_drift(spec: DriftSpec, x, y):
    """Evaluate b(x, y); ``x`` and ``y`` broadcast, y already clamped to [-1, 1]."""
    p = spec.params
    if spec.family == "zero":
        return np.zeros(np.broadcast(x, y).shape) if np.ndim(x) or np.ndim(y) else 0.0
    if spec.family == "power":
        return p["c"] * np.power(y, p["q"]) + 0.0 * np.asarray(x)
    if spec.family == "affine":
        return p["a"] * np.asarray(x) + p["c"] * np.asarray(y)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    out = npoly.polyval2d(x, y, spec.coeffs)
    return out if out.ndim else float(out)


def _square_abs_max(c: np.ndarray) -> float:
    """max |P(x, y)| over [-1, 1]^2 for a small bivariate polynomial.

    Edges and corners are exact (univariate critical points); the interior is
    scanned on a grid and polished with a bounded local optimizer.
    """
    if not np.any(c):
        return 0.0
    best = 0.0
    for fixed in (-1.0, 1.0):
        for axis in (0, 1):
            # restrict to an edge: univariate polynomial in the free variable
            if axis == 0:
                uni = npoly.polyval(fixed, c)  # x fixed -> coefficients in y
            else:
                uni = npoly.polyval(fixed, c.T)  # y fixed -> coefficients in x
            uni = np.atleast_1d(uni)
            cand = [-1.0, 1.0]
            if uni.size > 1:
                der = npoly.polyder(uni)
                # drop negligible leading terms so the companion matrix stays finite
                der = npoly.polytrim(der, 1e-14 * np.abs(der).max()) if np.any(der) else der
                if np.any(der) and der.size > 1:
                    for r in npoly.polyroots(der):
                        if abs(r.imag) < 1e-12 and -1.0 <= r.real <= 1.0:
                            cand.append(r.real)
            best = max(best, float(np.max(np.abs(npoly.polyval(np.array(cand), uni)))))

    s = np.linspace(-1.0, 1.0, 81)
    X, Y = np.meshgrid(s, s, indexing="ij")
    vals = np.abs(npoly.polyval2d(X, Y, c))
    order = np.argsort(vals, axis=None)[::-1][:8]
    for idx in order:
        i, j = np.unravel_index(idx, vals.shape)
        res = optimize.minimize(
            lambda z: -abs(npoly.polyval2d(z[0], z[1], c)),
            x0=[X[i, j], Y[i, j]],
            bounds=[(-1.0, 1.0), (-1.0, 1.0)],
            method="L-BFGS-B",
            options={"ftol": 1e-15, "gtol": 1e-12},
        )
        best = max(best, float(-res.fun), float(vals[i, j]))
    return best
