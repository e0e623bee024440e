import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from kmv.core import (
    ConfigurationError,
    DensityField,
    affine_drift,
    bump_initial_density,
    bump_normalization,
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

from .conftest import BUMP_INTEGRAL, KAPPA, BUMP_SECOND_MOMENT


def test_grid_m3():
    g = make_space_grid(3)
    assert g.h == 0.5
    np.testing.assert_array_equal(g.x, [-1.0, -0.5, 0.0, 0.5, 1.0])


def test_grid_m399_midpoint():
    g = make_space_grid(399)
    assert g.h == pytest.approx(0.005, abs=1e-17)
    assert g.x[200] == 0.0


@pytest.mark.parametrize("M", [2, 0, -4, 3.5])
def test_grid_rejects_small_m(M):
    with pytest.raises(ConfigurationError, match="3"):
        make_space_grid(M)


@given(st.integers(3, 3000))
def test_grid_symmetric_and_uniform(M):
    g = make_space_grid(M)
    assert g.x[0] == -1.0 and g.x[-1] == 1.0
    np.testing.assert_array_equal(g.x + g.x[::-1], 0.0)
    d = np.diff(g.x)
    assert np.all(d > 0)
    np.testing.assert_allclose(d, g.h, rtol=0, atol=4 * np.finfo(float).eps)


def test_time_grid():
    tg = make_time_grid(0.25, 2500)
    assert tg.t[0] == 0.0 and tg.t[-1] == 0.25
    assert tg.dt == pytest.approx(1e-4, rel=1e-15)
    with pytest.raises(ConfigurationError):
        make_time_grid(0.0, 10)
    with pytest.raises(ConfigurationError):
        make_time_grid(1.0, 0)


def test_kappa_matches_high_precision_quadrature():
    assert bump_normalization() == pytest.approx(KAPPA, rel=1e-12)
    assert 1.0 / bump_normalization() == pytest.approx(BUMP_INTEGRAL, rel=1e-12)
    # stated to six significant figures alongside the problem
    assert round(bump_normalization(), 5) == 2.25228


def test_bump_values(grid400, bump400):
    v = bump400.values
    assert v[0] == v[-1] == 0.0
    assert np.all(v[1:-1] > 0)
    np.testing.assert_array_equal(v, v[::-1])
    g = make_space_grid(399)
    m = bump_initial_density(g)
    assert m.values[200] == pytest.approx(KAPPA * np.exp(-1.0), rel=1e-14)


def test_bump_mass_and_moment_converge(bump400, grid400):
    # trapezoid on a smooth compactly supported profile: error well below h^2
    assert abs(bump400.mass - 1.0) < grid400.h**2
    assert quadrature(bump400, 2) == pytest.approx(BUMP_SECOND_MOMENT, abs=grid400.h**2)


def test_drift_examples():
    assert eval_drift(power_drift(1.0, 2), 0.37, 0.0) == 0.0
    assert eval_drift(power_drift(1.0, 2), -0.8, 0.5) == pytest.approx(0.25)
    assert eval_drift(affine_drift(1.0, -2.0), 0.3, 0.1) == pytest.approx(0.1, abs=1e-15)
    assert eval_drift(zero_drift(), 0.5, 0.5) == 0.0


def test_drift_bounds_closed_forms():
    assert power_drift(-1.5, 3).sup_bound == 1.5
    assert power_drift(-1.5, 3).lipschitz_y == 4.5
    a = affine_drift(0.3, -0.2)
    assert a.sup_bound == pytest.approx(0.5) and a.lipschitz_y == pytest.approx(0.2)
    assert zero_drift().sup_bound == 0.0


@pytest.mark.parametrize(
    "terms, expected_sup, expected_lip",
    [
        ([(1, 1, 1.0)], 1.0, 1.0),  # x*y
        ([(0, 2, 1.0), (2, 0, -1.0)], 1.0, 2.0),  # y^2 - x^2
        ([(0, 0, 1.0), (2, 2, -4.0)], 3.0, 8.0),  # 1 - 4x^2y^2
        # 1 - (x^2 + y^2 - 1/4)^2: ring of maxima at 1, but the corners reach -2.0625
        ([(0, 0, 1 - 1 / 16), (2, 0, 0.5), (0, 2, 0.5), (4, 0, -1), (0, 4, -1), (2, 2, -2)], 2.0625, None),
        # (1 - x^2)(1 - y^2): strict interior maximum at the origin
        ([(0, 0, 1.0), (2, 0, -1.0), (0, 2, -1.0), (2, 2, 1.0)], 1.0, 2.0),
    ],
)
def test_polynomial_sup_bound(terms, expected_sup, expected_lip):
    spec = polynomial_drift(terms)
    assert spec.sup_bound == pytest.approx(expected_sup, abs=1e-10)
    # never below a dense-grid maximum
    s = np.linspace(-1, 1, 801)
    X, Y = np.meshgrid(s, s)
    assert spec.sup_bound >= np.abs(eval_drift(spec, X, Y)).max() - 1e-12
    if expected_lip is not None:
        assert spec.lipschitz_y == pytest.approx(expected_lip, abs=1e-10)


def test_polynomial_degree_limit():
    with pytest.raises(ConfigurationError):
        polynomial_drift([(3, 2, 1.0)])
    with pytest.raises(ConfigurationError):
        make_drift("quadratic", {})


coef = st.floats(-3, 3, allow_nan=False)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4), coef), min_size=1, max_size=6))
def test_polynomial_eval_matches_symbolic(terms):
    terms = [(r, s, a) for r, s, a in terms if r + s <= 4] or [(0, 0, 1.0)]
    spec = polynomial_drift(terms)
    X, Y = sympy.symbols("x y")
    expr = sum(sympy.Float(a, 30) * X**r * Y**s for r, s, a in terms)
    fn = sympy.lambdify((X, Y), expr, "math")
    rng = np.random.default_rng(len(terms))
    pts = rng.uniform(-1, 1, size=(1000, 2))
    ours = eval_drift(spec, pts[:, 0], pts[:, 1])
    ref = np.array([fn(x, y) for x, y in pts])
    np.testing.assert_allclose(ours, ref, rtol=0, atol=1e-14 * max(1.0, sum(abs(a) for *_, a in terms)))


def test_family_formulas_match_coefficient_matrix(rng):
    from numpy.polynomial.polynomial import polyval2d

    pts = rng.uniform(-1, 1, size=(1000, 2))
    for spec in (power_drift(0.7, 3), affine_drift(-0.4, 1.3), zero_drift()):
        direct = eval_drift(spec, pts[:, 0], pts[:, 1])
        np.testing.assert_allclose(direct, polyval2d(pts[:, 0], pts[:, 1], spec.coeffs), atol=1e-14)


def test_quadrature_trivial_and_parabola():
    g = make_space_grid(50)
    assert quadrature(DensityField(g, np.zeros(g.n_nodes)), 3) == 0.0
    for M in (3, 9, 99, 400):
        g = make_space_grid(M)
        m = DensityField(g, 0.75 * (1 - g.x**2))
        # Euler-Maclaurin is exact for this quartic integrand: 1/5 - h^2/4 + h^4/20
        expected = 0.2 - g.h**2 / 4 + g.h**4 / 20
        assert quadrature(m, 2) == pytest.approx(expected, abs=1e-14)
        assert abs(quadrature(m, 2) - 0.2) <= g.h**2 / 4 + 1e-15


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 500), st.integers(0, 7), st.integers(0, 2**32 - 1))
def test_even_field_odd_moment_vanishes(M, half_p, seed):
    g = make_space_grid(M)
    r = np.random.default_rng(seed).uniform(0, 1, g.n_nodes)
    v = r + r[::-1]
    v[0] = v[-1] = 0.0
    p = 2 * half_p + 1
    assert abs(quadrature(DensityField(g, v), p)) <= 1e-14


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 500), st.integers(0, 2**32 - 1))
def test_quadrature_mass_in_unit_interval(M, seed):
    g = make_space_grid(M)
    v = np.random.default_rng(seed).uniform(0, 1, g.n_nodes)
    v[0] = v[-1] = 0.0
    v /= max(1.0, quadrature(DensityField(g, v), 0))
    assert 0.0 <= quadrature(DensityField(g, v), 0) <= 1.0 + 1e-10


def test_tilted_bump_normalized(grid400):
    m = tilted_bump_density(grid400, 0.6)
    assert m.mass == pytest.approx(1.0, abs=1e-8)
    assert quadrature(m, 1) > 0
    with pytest.raises(ConfigurationError):
        tilted_bump_density(grid400, 1.0)


def test_density_check_flags_violations(grid400, bump400):
    bump400.check()
    bad = DensityField(grid400, bump400.values * 2)
    with pytest.raises(Exception, match="mass"):
        bad.check()


def test_kappa_and_first_coefficient_against_mpmath():
    mpmath = pytest.importorskip("mpmath")
    from kmv.fourier import project_initial

    from .conftest import BUMP_C1

    mpmath.mp.dps = 25
    f = lambda s: mpmath.exp(1 / (s * s - 1))
    integral = mpmath.quad(f, [-1, 0, 1])
    assert bump_normalization() == pytest.approx(float(1 / integral), rel=1e-13)
    c1 = mpmath.quad(lambda s: f(s) * mpmath.cos(mpmath.pi * s / 2), [-1, 0, 1]) / integral
    assert float(c1) == pytest.approx(BUMP_C1, abs=1e-15)
    assert project_initial(bump_initial_density(make_space_grid(50)), 1).coefficients[0] == pytest.approx(float(c1), abs=1e-12)
