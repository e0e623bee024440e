import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from kmv.core import DensityField, bump_initial_density, make_space_grid
from kmv.fourier import (
    check_orthonormal,
    decay_rate,
    eigenfunction,
    eigenfunction_integral,
    evaluate,
    evaluate_on_grid,
    from_coefficients,
    oracle_mass,
    project_initial,
)

from .conftest import BUMP_C1, BUMP_C3, BUMP_CENTER_AT_QUARTER, BUMP_MASS


@pytest.fixture(scope="module")
def bump_series(bump400):
    return project_initial(bump400)


def test_basis_is_orthonormal():
    assert check_orthonormal(6) < 1e-12


@pytest.mark.parametrize("n", range(1, 9))
def test_eigenfunction_integral(n):
    ref, _ = integrate.quad(lambda s: eigenfunction(n, s), -1, 1, epsabs=1e-13, limit=200)
    assert eigenfunction_integral(n) == pytest.approx(ref, abs=1e-13)


def test_decay_rate():
    assert decay_rate(1) == pytest.approx(np.pi**2 / 8)
    assert decay_rate(3) == pytest.approx(9 * np.pi**2 / 8)


def test_bump_coefficients(bump_series):
    c = bump_series.coefficients
    assert c[0] == pytest.approx(BUMP_C1, abs=1e-12)
    assert c[2] == pytest.approx(BUMP_C3, abs=1e-12)
    assert np.all(c[1::2] == 0.0)
    # smooth data: coefficients decay faster than any power
    assert abs(c[-1]) < 1e-6


def test_bump_center_and_mass(bump_series):
    v, tail = evaluate(bump_series, np.array([0.0]), 0.25)
    assert v[0] == pytest.approx(BUMP_CENTER_AT_QUARTER, abs=1e-13)
    for t, mass in BUMP_MASS.items():
        assert oracle_mass(bump_series, t) == pytest.approx(mass, abs=1e-13)
    # at t = 0 nothing damps the truncated modes; 50 terms of the bump leave ~2e-6
    assert oracle_mass(bump_series, 0.0) == pytest.approx(1.0, abs=1e-5)


def test_walls_are_zero(bump_series):
    v, _ = evaluate(bump_series, np.array([-1.0, 1.0]), 0.1)
    assert np.all(v == 0.0)


def test_tail_bound_behaviour(bump_series):
    assert bump_series.tail_bound(0.0) == np.inf
    b = [bump_series.tail_bound(t) for t in (0.001, 0.01, 0.1)]
    assert b[0] > b[1] > b[2]
    assert b[1] < 1e-10


@settings(max_examples=20, deadline=None)
@given(st.floats(0.01, 1.0), st.floats(-0.99, 0.99))
def test_truncation_error_within_tail_bound(t, x):
    m0 = bump_initial_density(make_space_grid(200))
    full = project_initial(m0, 120)
    short = from_coefficients(full.coefficients[:10], full.coef_bound)
    a, _ = evaluate(full, np.array([x]), t)
    b, tail = evaluate(short, np.array([x]), t)
    assert abs(a[0] - b[0]) <= tail + 1e-15


def test_series_solves_heat_equation(bump_series):
    x = np.array([-0.6, -0.1, 0.3, 0.8])
    t, dt, dx = 0.2, 1e-5, 1e-4
    u = lambda xx, tt: evaluate(bump_series, xx, tt)[0]
    ut = (u(x, t + dt) - u(x, t - dt)) / (2 * dt)
    uxx = (u(x + dx, t) - 2 * u(x, t) + u(x - dx, t)) / dx**2
    np.testing.assert_allclose(ut, 0.5 * uxx, atol=1e-5)


def test_single_mode_is_exact():
    sol = from_coefficients([0.0, 0.0, 1.0])
    x = np.linspace(-1, 1, 11)[1:-1]
    v, _ = evaluate(sol, x, 0.3)
    np.testing.assert_allclose(v, np.exp(-decay_rate(3) * 0.3) * eigenfunction(3, x), atol=1e-15)


def test_grid_projection_agrees_with_profile(grid400, bump400, bump_series):
    plain = DensityField(grid400, bump400.values)
    grid_series = project_initial(plain, 20)
    np.testing.assert_allclose(grid_series.coefficients, bump_series.coefficients[:20], atol=grid400.h**2)


def test_evaluate_on_grid_shape(grid400, bump_series):
    out = evaluate_on_grid(bump_series, grid400, [0.1, 0.2])
    assert out.shape == (2, grid400.n_nodes)


def test_rejects_bad_arguments(bump400, bump_series):
    with pytest.raises(ValueError):
        project_initial(bump400, 0)
    with pytest.raises(ValueError):
        evaluate(bump_series, 0.0, -1.0)
