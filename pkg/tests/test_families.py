import numpy as np
import pytest
import sympy as sp

from omcert.core import Grid, MultiIndex, finite_difference_check
from omcert.families import (
    default_corpus_1d,
    default_corpus_2d,
    gauss_poly,
    make_family,
    poly_cos,
    poly_sin,
    polynomial,
    product,
    restrict,
)

X = sp.Symbol("x")
PTS = np.linspace(-4.0, 4.0, 17)


def sympy_values(expr, k):
    fn = sp.lambdify(X, sp.diff(expr, X, k), "numpy")
    return np.broadcast_to(fn(PTS), PTS.shape)


CASES = [
    (lambda: poly_sin(0, 1), sp.sin(X)),
    (lambda: poly_sin(3, 2), X**3 * sp.sin(2 * X)),
    (lambda: poly_cos(2, 1), X**2 * sp.cos(X)),
    (lambda: gauss_poly(3), sp.exp(-(X**2)) * X**3),
    (lambda: gauss_poly(0), sp.exp(-(X**2))),
    (lambda: polynomial(1, -2, 0, 4), 1 - 2 * X + 4 * X**3),
]


@pytest.mark.parametrize("make, expr", CASES)
@pytest.mark.parametrize("k", range(6))
def test_oracle_matches_symbolic_derivative(make, expr, k):
    f = make()
    got = f.derivative(k, PTS[:, None])
    want = sympy_values(expr, k)
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12 * (1 + np.max(np.abs(want))))


@pytest.mark.parametrize("f", default_corpus_1d(), ids=lambda f: f.name)
@pytest.mark.parametrize("k", [1, 2, 3])
def test_second_order_convergence(f, k):
    """Deviation is C h^2 with C stable when h is halved."""
    g = Grid.symmetric(1, radius=5.0, count=41)
    h = 1e-2
    d1 = finite_difference_check(f, k, g, h)
    d2 = finite_difference_check(f, k, g, h / 2)
    if d1 < 1e-10:
        return  # exact stencil (low-degree polynomial pieces)
    ratio = d1 / d2
    assert 3.5 < ratio < 4.5, (d1, d2)


def test_product_and_two_dimensional_fd():
    f = default_corpus_2d()[2]
    g = Grid.symmetric(2, radius=3.0, count=13)
    for alpha in [(1, 0), (0, 1), (2, 1), (1, 2)]:
        assert finite_difference_check(f, alpha, g, 1e-3) < 1e-4


def test_product_values():
    f = product(poly_sin(1, 1), polynomial(0, 0, 1), coef=0.5)
    pts = np.array([[1.0, 2.0], [-0.3, 0.7]])
    np.testing.assert_allclose(f(pts), 0.5 * pts[:, 0] * np.sin(pts[:, 0]) * pts[:, 1] ** 2)
    d = f.derivative((1, 2), pts)
    np.testing.assert_allclose(d, 0.5 * (np.sin(pts[:, 0]) + pts[:, 0] * np.cos(pts[:, 0])) * 2)
    assert f.growth == 1 + 1


def test_growth_declarations_bound_the_functions():
    g = Grid.symmetric(1, radius=20.0)
    x = g.points[:, 0]
    for f in default_corpus_1d():
        for k in range(4):
            ratio = np.abs(f.derivative(k, g.points)) / (1 + x**2) ** f.growth
            assert np.all(np.isfinite(ratio))
            assert ratio.max() < 1e3


def test_restrict_freezes_other_coordinate():
    f = default_corpus_2d()[0]  # sin(x1) x2^2
    r = restrict(f, (0, 1), axis=0, fixed=(0.0, 3.0))
    s = np.array([[0.5], [1.0]])
    np.testing.assert_allclose(r(s), np.sin(s[:, 0]) * 6.0)
    np.testing.assert_allclose(r.derivative(1, s), np.cos(s[:, 0]) * 6.0)


def test_make_family_lookup():
    assert make_family("poly_sin", 2, 1).name == poly_sin(2, 1).name
    with pytest.raises(KeyError, match="unknown test-function family"):
        make_family("foo")


def test_corpus_sizes():
    assert len(default_corpus_1d()) == 12
    assert len(default_corpus_2d()) == 5
    assert all(f.dim == 2 for f in default_corpus_2d())


def test_combination_keeps_weakest_membership():
    a = poly_sin(3, 1)
    b = gauss_poly(1)
    c = a + b
    assert c.growth == max(a.growth, b.growth)
    np.testing.assert_allclose(c.derivative(MultiIndex.of(2), PTS[:, None]),
                               a.derivative(2, PTS[:, None]) + b.derivative(2, PTS[:, None]))
