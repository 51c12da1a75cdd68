"""Laplace transforms, phi ratios, derivatives and the complete-monotonicity test."""
import math

import numpy as np
import pytest
import sympy as sp

from stochord import _quad
from stochord.combinators import product_of_independent
from stochord.config import DEFAULT
from stochord.distributions import Bernoulli, Exponential, Gamma, Mixture, Normal, PointMass, Uniform
from stochord.errors import DerivativeUnstable, NotNonnegative
from stochord.transforms import complete_monotonicity_check, derivative, fd_derivative, laplace, phi_ratio
from stochord.verdict import Status

S_GRID = DEFAULT.s_array


def test_laplace_examples():
    L = laplace(Exponential(1))
    assert L.is_rational and L(1.0) == pytest.approx(0.5, rel=1e-15)
    assert laplace(PointMass(0))(3.0) == 1.0
    b = laplace(Bernoulli(0.5))
    assert b.is_exact
    for s in (0.1, 1.0, 5.0):
        assert b(s) == pytest.approx(0.5 + 0.5 * math.exp(-s), rel=1e-14)


@pytest.mark.parametrize(
    "d,closed",
    [
        (Uniform(0, 2), lambda s: (1 - np.exp(-2 * s)) / (2 * s)),
        (Gamma(2.5, 1.3), lambda s: (1 + s / 1.3) ** -2.5),
        (Mixture(((0.3, PointMass(0.5)), (0.7, Uniform(1, 3)))),
         lambda s: 0.3 * np.exp(-0.5 * s) + 0.7 * (np.exp(-s) - np.exp(-3 * s)) / (2 * s)),
    ],
    ids=["uniform", "gamma-nonint", "mixture"],
)
def test_quadrature_transforms_match_closed_form(d, closed):
    L = laplace(d)
    assert not L.is_exact
    v, e = L.evalf(S_GRID)
    np.testing.assert_allclose(v, closed(S_GRID), rtol=1e-10, atol=1e-13)
    assert np.all(np.abs(v - closed(S_GRID)) <= e + 1e-13)


@pytest.mark.parametrize("d", [Exponential(0.7), Bernoulli(0.3), Gamma(3, 2.0),
                               Mixture(((0.5, PointMass(1.0)), (0.5, Exponential(2.0))))])
def test_exact_and_quadrature_agree(d):
    exact = laplace(d)(S_GRID)
    quad = _quad.laplace_values(d, S_GRID)
    np.testing.assert_allclose(exact, quad, atol=1e-5)


def test_laplace_at_zero_is_one():
    for d in (Exponential(2), Bernoulli(0.4), Uniform(0, 1), Gamma(1.5, 1)):
        assert laplace(d)(1e-9) == pytest.approx(1.0, abs=1e-6)


def test_laplace_requires_nonnegative_when_asked():
    with pytest.raises(NotNonnegative):
        laplace(Normal(0, 1), require_nonnegative=True)
    with pytest.raises(NotNonnegative):
        phi_ratio(Normal(0, 1), Exponential(1))


def test_phi_ratio_examples():
    r = phi_ratio(Exponential(1), Exponential(0.5))
    assert r.coefficients() == ([1.0, 1.0], [2.0, 1.0])
    assert phi_ratio(Gamma(2, 1), Gamma(2, 1)).is_constant_one
    xz = product_of_independent(Exponential(1), Bernoulli(0.5))
    yz = product_of_independent(Exponential(0.5), Bernoulli(0.5))
    assert phi_ratio(xz, yz).coefficients() == ([1.0, 2.0, 1.0], [1.0, 2.5, 1.0])


def test_product_with_bernoulli_transform():
    xz = product_of_independent(Exponential(1), Bernoulli(0.5))
    for s in (0.2, 1.0, 9.0):
        assert laplace(xz)(s) == pytest.approx((s + 2) / (2 * (s + 1)), rel=1e-14)


def test_bernoulli_ratio_derivative_formula():
    r = phi_ratio(Exponential(1), Exponential(0.5))
    for n in range(1, 7):
        d = derivative(r, n)
        for s in (0.1, 1.0, 10.0):
            expect = math.factorial(n) * 2 ** (n - 1) / (2 * s + 1) ** (n + 1)
            assert (-1) ** n * d(s) == pytest.approx(expect, rel=1e-12)


def test_product_ratio_first_derivative():
    xz = product_of_independent(Exponential(1), Bernoulli(0.5))
    yz = product_of_independent(Exponential(0.5), Bernoulli(0.5))
    d1 = derivative(phi_ratio(xz, yz), 1)
    assert d1(2.0) == pytest.approx(0.015, abs=1e-12)
    assert d1(0.5) == pytest.approx(-0.06, abs=1e-12)
    assert d1(1.0) == pytest.approx(0.0, abs=1e-15)


def test_constant_ratio_derivatives_vanish():
    r = phi_ratio(Exponential(3), Exponential(3))
    for n in range(1, 5):
        assert np.all(derivative(r, n)(S_GRID) == 0)


def test_exact_and_fd_agree_within_error():
    s_sym = sp.Symbol("s")
    f = (s_sym**2 + 2 * s_sym + 1) / (s_sym**2 + sp.Rational(5, 2) * s_sym + 1)
    xz = product_of_independent(Exponential(1), Bernoulli(0.5))
    yz = product_of_independent(Exponential(0.5), Bernoulli(0.5))
    r = phi_ratio(xz, yz)
    s = np.array([0.3, 1.5, 6.0])
    for n in range(1, 5):
        ex, ee = derivative(r, n, method="exact").with_error(s)
        fd, fe = derivative(r, n, method="fd").with_error(s)
        ref = np.array([float(sp.diff(f, s_sym, n).subs(s_sym, v)) for v in s])
        np.testing.assert_allclose(ex, ref, rtol=1e-12, atol=1e-15)
        assert np.all(np.abs(fd - ex) <= fe + ee + 1e-12)


def test_quadrature_derivatives_match_closed_form():
    k, lam = 2.5, 1.3
    r = phi_ratio(PointMass(0.0), Gamma(k, lam))
    s = np.array([0.01, 0.5, 4.0, 50.0])
    v, e = r.derivatives(s, 6)
    for n in range(7):
        ref = (-1) ** n * math.gamma(k + n) / math.gamma(k) * lam**k / (lam + s) ** (k + n)
        np.testing.assert_allclose(v[n], ref, rtol=1e-8)
        assert np.all(np.abs(v[n] - ref) <= e[n] + 1e-12 * np.abs(ref))


def test_fd_derivative_reports_unstable():
    noisy = phi_ratio(Exponential(1), Exponential(0.5))
    d = derivative(noisy, 8, method="fd")
    with pytest.raises(DerivativeUnstable):
        d(np.array([1e-3]))


def test_fd_derivative_on_smooth_function():
    v, e = fd_derivative(np.exp, np.array([0.5, 1.0]), 3)
    np.testing.assert_allclose(v, np.exp([0.5, 1.0]), rtol=1e-6)
    assert np.all(e < 1e-5)


def test_derivative_order_bounds():
    r = phi_ratio(Exponential(1), Exponential(0.5))
    with pytest.raises(ValueError):
        derivative(r, DEFAULT.max_deriv_order + 1)
    with pytest.raises(ValueError):
        derivative(r, -1)


def test_complete_monotonicity_examples():
    v = complete_monotonicity_check(phi_ratio(Exponential(1), Exponential(0.5)))
    assert v.status is Status.HOLDS and v.label == "up to order 8"
    xz = product_of_independent(Exponential(1), Bernoulli(0.5))
    yz = product_of_independent(Exponential(0.5), Bernoulli(0.5))
    v = complete_monotonicity_check(phi_ratio(xz, yz))
    assert v.status is Status.VIOLATED
    assert v.witness.location["n"] == 1 and v.witness.location["s"] > 1
    assert v.witness.lhs < -DEFAULT.eps_ineq and v.witness.rhs == 0.0
    assert complete_monotonicity_check(phi_ratio(Bernoulli(0.2), Bernoulli(0.2))).status is Status.HOLDS


def test_delay_ratio_does_not_underflow():
    # both transforms carry several exponential terms that vanish at large s
    x = Mixture(((0.8, PointMass(1.0)), (0.2, PointMass(2.0))))
    y = Mixture(((0.8, PointMass(1.5)), (0.2, PointMass(2.5))))
    r = phi_ratio(x, y)
    assert r(1000.0) == pytest.approx(math.exp(-500.0), rel=1e-12)
    assert complete_monotonicity_check(r).status is Status.HOLDS
