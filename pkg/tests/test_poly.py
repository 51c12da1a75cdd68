"""Exact polynomial and rational-function arithmetic, checked against sympy."""
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from stochord.poly import ExpRational, Poly, RationalFunction, binomial_leibniz, derivative_numerators, poly_gcd

S = sp.Symbol("s")
small = st.integers(-6, 6)
coeffs = st.lists(small, min_size=1, max_size=5)


def to_sympy(p: Poly):
    return sum(sp.Rational(c.numerator, c.denominator) * S**i for i, c in enumerate(p.c))


@given(coeffs, coeffs)
def test_poly_ring_matches_sympy(a, b):
    pa, pb = Poly(a), Poly(b)
    assert sp.expand(to_sympy(pa * pb) - to_sympy(pa) * to_sympy(pb)) == 0
    assert sp.expand(to_sympy(pa + pb) - to_sympy(pa) - to_sympy(pb)) == 0
    assert sp.expand(to_sympy(pa.deriv()) - sp.diff(to_sympy(pa), S)) == 0


@given(coeffs, coeffs.filter(lambda c: any(c)))
def test_divmod_reconstructs(a, b):
    q, r = Poly(a).divmod(Poly(b))
    assert q * Poly(b) + r == Poly(a)
    assert r.is_zero or r.degree < Poly(b).degree


def test_gcd_cancels_common_factor():
    f = Poly([1, 1])  # 1 + s
    g = poly_gcd(f * Poly([2, 1]), f * Poly([3, 5]))
    assert g.monic() == f.monic()
    r = RationalFunction(f * Poly([2, 1]), f * Poly([3, 5]))
    assert r == RationalFunction(Poly([2, 1]), Poly([3, 5]))


def test_rational_normalised_to_unit_constant_term():
    r = RationalFunction(Poly([2, 2]), Poly([4, 8]))
    assert r.den(0) == 1
    assert r(Fraction(1)) == Fraction(4, 12)


@pytest.mark.parametrize("delay", [0, Fraction(1, 2), 3])
def test_derivative_numerators_match_sympy(delay):
    num, den = Poly([1, 2, 1]), Poly([1, Fraction(5, 2), 1])
    ps = derivative_numerators(num, den, Fraction(delay), 5)
    f = sp.exp(-sp.Rational(delay) * S) * to_sympy(num) / to_sympy(den)
    for k, p in enumerate(ps):
        ours = sp.exp(-sp.Rational(delay) * S) * to_sympy(p) / to_sympy(den) ** (k + 1)
        assert sp.simplify(ours - sp.diff(f, S, k)) == 0


def test_exprational_derivatives_numeric():
    er = ExpRational({0: RationalFunction(Poly([1]), Poly([1, 1])), 1: RationalFunction(Poly([Fraction(1, 2)]))})
    f = 1 / (1 + S) + sp.Rational(1, 2) * sp.exp(-S)
    s = np.array([0.1, 1.0, 7.0])
    vals, errs = er.evalf_derivatives(s, 4)
    for k in range(5):
        ref = np.array([float(sp.diff(f, S, k).subs(S, v)) for v in s])
        np.testing.assert_allclose(vals[k], ref, rtol=1e-13)
        assert np.all(errs[k] < 1e-12 * (1 + np.abs(ref)))


def test_exact_derivative_is_fraction_for_rationals():
    er = ExpRational.rational(RationalFunction(Poly([1, 1]), Poly([1, 2])))
    v = er.exact_derivative(3, 1)
    assert isinstance(v, Fraction)
    # (-1)^n phi^(n)(s) = n! 2^(n-1) / (2s+1)^(n+1)
    assert -v == Fraction(6 * 4, 3**4)


def test_binomial_leibniz_inverts_product():
    s = np.linspace(0.2, 3, 7)
    a = np.array([np.exp(-s), -np.exp(-s), np.exp(-s)])  # e^-s
    b = np.array([1 + s, np.ones_like(s), np.zeros_like(s)])  # 1+s
    phi = binomial_leibniz(a, b)
    f = sp.exp(-S) / (1 + S)
    for k in range(3):
        ref = [float(sp.diff(f, S, k).subs(S, v)) for v in s]
        np.testing.assert_allclose(phi[k], ref, rtol=1e-12)
