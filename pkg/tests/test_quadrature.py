import numpy as np
import pytest
from hypothesis import given, strategies as st

from malaria_age.quadrature import AgeMesh, gauss_cells, n_cells, simpson_weights
from malaria_age.params import ExpSum, Constant


def test_n_cells_tolerates_float_division():
    assert n_cells(100.0, 0.05) == 2000
    assert n_cells(1.0, 0.3) == 4
    assert n_cells(0.3, 0.1) == 3


@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.integers(1, 20))
def test_simpson_exact_on_cubics(coef, half):
    n = 2 * half
    x = np.linspace(0.0, 2.0, n + 1)
    w = simpson_weights(n, 2.0 / n)
    p = np.polynomial.Polynomial(coef)
    exact = p.integ()(2.0) - p.integ()(0.0)
    assert np.dot(w, p(x)) == pytest.approx(exact, rel=1e-12, abs=1e-12)


def test_simpson_rejects_odd():
    with pytest.raises(ValueError):
        simpson_weights(3, 0.1)


def test_gauss_cells_exact_on_degree_nine():
    pts, w = gauss_cells(np.linspace(0, 3, 4))
    assert (pts ** 9 * w).sum() == pytest.approx(3 ** 10 / 10, rel=1e-13)


def test_mesh_count_is_even():
    assert AgeMesh(1.0, 0.1).n % 2 == 0
    assert AgeMesh(1.1, 0.1).n == 12


def test_cumulative_matches_closed_form():
    f = ExpSum(5.8, ((2e-3, 0.0), (9e-2, -2.1), (1e-4, 0.09)))
    mesh = AgeMesh(100.0, 0.05)
    np.testing.assert_allclose(mesh.cumulative(f), f.integral(mesh.edges), rtol=1e-12, atol=1e-14)


def test_partial_integrals():
    mesh = AgeMesh(2.0, 0.5)
    part = mesh.partial(lambda a: 2.0 * a)
    left = mesh.edges[:-1, None]
    np.testing.assert_allclose(part, mesh.points ** 2 - left ** 2, rtol=1e-12)


@given(st.floats(0.05, 3.0), st.floats(0.1, 10.0))
def test_forward_profile_constant_rates(h, src):
    mesh = AgeMesh(10.0, 0.1)
    phi = mesh.forward_profile(np.full(mesh.points.shape, src), Constant(h))
    exact = src / h * (1 - np.exp(-h * mesh.edges))
    np.testing.assert_allclose(phi, exact, rtol=1e-11, atol=1e-13)


def test_backward_profile_constant_rates():
    mesh = AgeMesh(20.0, 0.1)
    h = 0.7
    psi = mesh.backward_profile(np.ones(mesh.points.shape), Constant(h))
    exact = (1 - np.exp(-h * (20.0 - mesh.edges))) / h
    np.testing.assert_allclose(psi, exact, rtol=1e-11, atol=1e-14)


def test_survival_and_integration():
    mesh = AgeMesh(50.0, 0.1)
    edges, points = mesh.survival(Constant(0.2))
    assert mesh.integrate_edges(edges) == pytest.approx((1 - np.exp(-10)) / 0.2, rel=1e-9)
    assert mesh.integrate_points(points) == pytest.approx((1 - np.exp(-10)) / 0.2, rel=1e-12)
