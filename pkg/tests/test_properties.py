"""Randomised invariants over the parametric families."""
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate

from stochord import _quad
from stochord.combinators import product_of_independent, sum_of_independent
from stochord.config import DEFAULT
from stochord.distributions import (
    Bernoulli,
    Exponential,
    Gamma,
    Mixture,
    Normal,
    PointMass,
    Uniform,
    from_json,
    hazard,
    survival,
)
from stochord.harness import Outcome, PropertyKind, verify_axioms
from stochord.orders import OrderKind, check, check_conv, check_st
from stochord.transforms import laplace
from stochord.verdict import Status

pos = st.floats(0.2, 5.0)
real = st.floats(-3.0, 3.0)

normals = st.builds(Normal, real, pos)
exponentials = st.builds(Exponential, pos)
gammas = st.builds(Gamma, st.floats(0.6, 6.0), pos)
uniforms = st.tuples(real, pos).map(lambda ab: Uniform(ab[0], ab[0] + ab[1]))
bernoullis = st.builds(Bernoulli, st.floats(0.0, 1.0))
points = st.builds(PointMass, real)
continuous = st.one_of(normals, exponentials, gammas, uniforms)
nonneg_cont = st.one_of(exponentials, gammas, uniforms.map(lambda u: Uniform(abs(u.a), abs(u.a) + u.b - u.a)))
nonneg = st.one_of(nonneg_cont, bernoullis, points.map(lambda p: PointMass(abs(p.c))))


@st.composite
def mixtures(draw, parts=st.one_of(continuous, bernoullis, points)):
    k = draw(st.integers(1, 3))
    w = np.array(draw(st.lists(st.floats(0.05, 1.0), min_size=k, max_size=k)))
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return Mixture(tuple((float(a), draw(parts)) for a in w))


anything = st.one_of(continuous, bernoullis, points, mixtures())


# distribution core ----------------------------------------------------------


@given(anything, st.lists(st.floats(-20, 20), min_size=2, max_size=30))
def test_cdf_monotone_and_survival_exact(d, ts):
    t = np.sort(np.array(ts))
    F = np.asarray(d.cdf(t))
    assert np.all(np.diff(F) >= -DEFAULT.eps_ineq)
    assert np.all((F >= 0) & (F <= 1))
    assert np.all(np.asarray(survival(d, t)) + F == 1.0)


@given(anything)
def test_truncation_limits(d):
    lo, hi = d.quantile(DEFAULT.trunc_lo), d.quantile(DEFAULT.trunc_hi)
    assert float(d.cdf(np.nextafter(lo, -np.inf))) <= DEFAULT.trunc_lo + 1e-12
    assert float(d.cdf(hi)) >= DEFAULT.trunc_hi - 1e-12
    assert np.isfinite(d.mean())


@given(st.one_of(continuous, mixtures()))
def test_density_integrates_to_continuous_mass(d):
    total = 0.0
    edges = _quad.cont_edges(d, 1e-12)
    for a, b in zip(edges[:-1], edges[1:]):
        total += integrate.quad(lambda t: float(d.density(t)), a, b, limit=100)[0]
    assert total + d.atom_mass == pytest.approx(1.0, abs=1e-4)


@given(st.one_of(continuous, bernoullis, points), st.integers(1, 5))
def test_closed_moments_match_quadrature(d, m):
    quad = _quad.expectation(d, lambda t: t**m)
    assert d.moment(m) == pytest.approx(quad, rel=1e-4, abs=1e-10)


@given(continuous, st.floats(0.01, 0.99))
def test_hazard_identity(d, q):
    t = d.quantile(q)
    assert hazard(d, t) * float(d.sf(t)) == pytest.approx(float(d.density(t)), abs=1e-8)


# transforms -----------------------------------------------------------------


@given(nonneg)
def test_laplace_basic_invariants(d):
    L = laplace(d)
    assert L(1e-9) == pytest.approx(1.0, abs=1e-6)
    v = L(DEFAULT.s_array)
    assert np.all((v > 0) | (v == 0)) and np.all(v <= 1 + 1e-12)
    assert np.all(np.diff(v) <= 0)
    if d.variance() > 1e-6 or d.mean() > 1e-6:
        # strict wherever the change is above float resolution
        assert v[0] > v[-1]


@given(st.one_of(exponentials, bernoullis, mixtures(st.one_of(exponentials, bernoullis))))
def test_exact_and_quadrature_forms_agree(d):
    s = DEFAULT.s_array
    np.testing.assert_allclose(laplace(d)(s), _quad.laplace_values(d, s), atol=1e-5)


# combinators ----------------------------------------------------------------


@given(st.one_of(continuous, bernoullis, points), st.one_of(continuous, bernoullis, points))
def test_mean_additivity(x, z):
    assert sum_of_independent(x, z).mean() == pytest.approx(x.mean() + z.mean(), abs=1e-4)


@given(st.one_of(continuous, bernoullis, points), nonneg)
def test_mean_multiplicativity(x, z):
    assert product_of_independent(x, z).mean() == pytest.approx(x.mean() * z.mean(), abs=1e-4)


@given(nonneg, nonneg)
def test_laplace_factorisation(x, z):
    s = DEFAULT.s_array
    np.testing.assert_allclose(laplace(sum_of_independent(x, z))(s), laplace(x)(s) * laplace(z)(s), atol=1e-4)


@given(continuous, continuous)
def test_mass_conservation(x, z):
    g = sum_of_independent(x, z)
    assert float(g.cdf(g.quantile(DEFAULT.trunc_hi))) >= 1 - 1e-6


@given(st.one_of(exponentials, gammas), bernoullis)
def test_bernoulli_scaler_atom(x, z):
    g = product_of_independent(x, z)
    assert g.atom_at(0.0) == pytest.approx(1 - z.p, abs=1e-15)


# orders -----------------------------------------------------------------------


@given(anything, st.sampled_from(list(OrderKind)))
def test_reflexivity(d, order):
    assume(not order.needs_nonnegative or float(d.cdf(-DEFAULT.eps_ineq)) <= DEFAULT.eps_ineq)
    v = check(order, d, d)
    if order is OrderKind.HR and not d.is_continuous:
        assert v.status is Status.INCONCLUSIVE
    else:
        assert v.status is Status.HOLDS


@given(continuous, continuous)
def test_implication_chain(x, y):
    hr, st_, icx = check("hr", x, y), check("st", x, y), check("icx", x, y)
    if hr.holds:
        assert st_.status is not Status.VIOLATED
    if st_.holds:
        assert icx.status is not Status.VIOLATED


@given(nonneg, nonneg)
def test_st_implies_lt(x, y):
    if check_st(x, y).holds:
        assert check("lt", x, y).status is not Status.VIOLATED


@given(anything, anything)
def test_antisymmetry_surrogate(x, y):
    if check_st(x, y).holds and check_st(y, x).holds:
        t = np.linspace(-10, 10, 2001)
        assert np.max(np.abs(np.asarray(x.cdf(t)) - np.asarray(y.cdf(t)))) <= 2 * DEFAULT.eps_ineq


@given(st.one_of(exponentials, gammas.filter(lambda g: g.integer_shape is not None), bernoullis),
       st.one_of(exponentials, bernoullis, points.map(lambda p: PointMass(abs(p.c)))))
def test_constructive_convolution(x, u):
    assert check_conv(x, sum_of_independent(x, u)).holds


@given(st.lists(st.one_of(normals, points, bernoullis), min_size=3, max_size=4), st.sampled_from(["st", "icx"]))
def test_transitivity(pool, order):
    for r in verify_axioms(order, pool):
        if r.property is PropertyKind.TRANSITIVITY:
            assert r.outcome is not Outcome.REFUTED


@given(anything, anything)
def test_witness_reverifies(x, y):
    v = check_st(x, y)
    if v.violated:
        t = v.witness.location
        assert float(x.cdf(t)) - float(y.cdf(t)) < -DEFAULT.eps_ineq


# serialisation ------------------------------------------------------------------


@given(anything)
def test_json_round_trip(d):
    assert from_json(d.to_json()) == d
