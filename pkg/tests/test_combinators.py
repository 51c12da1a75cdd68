"""Sums, products and monotone images of independent variables."""
import math

import numpy as np
import pytest
from scipy import integrate, stats

from stochord.combinators import (
    CombinationKind,
    CombinationPlan,
    monotone_map,
    negate,
    product_of_independent,
    scale,
    shift,
    sum_of_independent,
)
from stochord.distributions import Bernoulli, Exponential, Gamma, Grid, Mixture, Normal, PointMass, Uniform
from stochord.errors import NegativeScaler, NotIncreasing
from stochord.harness import binomial_moment_oracle
from stochord.transforms import laplace


def sup_gap(a, b, t):
    return float(np.max(np.abs(np.asarray(a.cdf(t)) - np.asarray(b.cdf(t)))))


# closed forms ---------------------------------------------------------------


def test_normal_plus_negated_normal():
    d = sum_of_independent(Normal(1, 0.5), negate(Normal(0, 0.5)))
    assert d == Normal(1.0, 1.0)


def test_point_masses_add():
    assert sum_of_independent(PointMass(2.0), PointMass(-0.5)) == PointMass(1.5)


def test_same_rate_exponentials_give_gamma():
    assert sum_of_independent(Exponential(1.0), Exponential(1.0)) == Gamma(2.0, 1.0)
    assert sum_of_independent(Gamma(2, 3.0), Exponential(3.0)) == Gamma(3.0, 3.0)


def test_negate_and_scale_examples():
    assert negate(Normal(0, 0.5)) == Normal(0, 0.5)
    assert negate(PointMass(3)) == PointMass(-3)
    assert scale(Exponential(1), 2) == Exponential(0.5)
    assert product_of_independent(Uniform(0, 1), PointMass(2)) == Uniform(0, 2)
    with pytest.raises(ValueError):
        scale(Exponential(1), -1)


def test_identity_scaler():
    x = Gamma(2.5, 1.0)
    assert product_of_independent(x, PointMass(1.0)) == x


def test_bernoulli_scaler_is_a_mixture():
    d = product_of_independent(Exponential(1), Bernoulli(0.5))
    assert isinstance(d, Mixture)
    locs, masses = d.atoms()
    assert locs.tolist() == [0.0] and masses.tolist() == [0.5]
    t = np.linspace(0.01, 8, 50)
    np.testing.assert_allclose(d.cdf(t), 0.5 + 0.5 * (1 - np.exp(-t)), rtol=1e-14)


def test_shift_keeps_family():
    assert shift(Normal(0, 2), 1.5) == Normal(1.5, 2)
    assert shift(Uniform(0, 1), -1) == Uniform(-1, 0)


# quadrature fallback -------------------------------------------------------


def test_exponential_sum_grid_matches_gamma():
    g = sum_of_independent(Exponential(1), Exponential(1), force_grid=True)
    assert isinstance(g, Grid)
    t = np.linspace(0, 30, 3001)
    assert sup_gap(g, Gamma(2, 1), t) <= 1e-4
    assert g.err <= 1e-6


def test_normal_plus_exponential_against_exgauss():
    g = sum_of_independent(Normal(0.5, 1.2), Exponential(0.8))
    ref = stats.exponnorm(1 / (0.8 * math.sqrt(1.2)), loc=0.5, scale=math.sqrt(1.2))
    t = np.linspace(ref.ppf(1e-6), ref.ppf(1 - 1e-6), 2001)
    np.testing.assert_allclose(g.cdf(t), ref.cdf(t), atol=1e-8)
    np.testing.assert_allclose(g.density(t), ref.pdf(t), atol=1e-6)


def test_product_of_exponentials_against_quad():
    g = product_of_independent(Exponential(1.0), Exponential(2.0))
    for t in (0.05, 0.5, 2.0, 6.0):
        ref, _ = integrate.quad(lambda z: (1 - math.exp(-t / z)) * 2 * math.exp(-2 * z), 0, np.inf, limit=200)
        assert float(g.cdf(t)) == pytest.approx(ref, abs=1e-8)


def test_product_keeps_atom_at_zero():
    z = Mixture(((0.3, PointMass(0.0)), (0.7, Exponential(1.0))))
    g = product_of_independent(Exponential(2.0), z)
    assert float(g.cdf(0.0)) == pytest.approx(0.3, abs=1e-12)
    assert g.atom_at(0.0) == pytest.approx(0.3, abs=1e-12)


def test_negative_scaler_rejected():
    with pytest.raises(NegativeScaler):
        product_of_independent(Exponential(1), Normal(0, 1))


def test_sum_with_atoms_is_exact_at_jumps():
    g = sum_of_independent(Bernoulli(0.4), Uniform(0, 0.5), force_grid=True)
    assert float(g.cdf(0.5)) == pytest.approx(0.6, abs=1e-10)
    assert float(g.cdf(1.25)) == pytest.approx(0.8, abs=1e-10)


# invariants against oracles ------------------------------------------------


@pytest.mark.parametrize("x,z", [(Exponential(1.0), Exponential(2.0)), (Gamma(2, 1.0), Exponential(0.5)),
                                 (Bernoulli(0.3), Exponential(1.0))])
def test_moments_match_binomial_identity(x, z):
    g = sum_of_independent(x, z)
    for m in range(1, 9):
        assert g.moment(m) == pytest.approx(binomial_moment_oracle(x, z, m), rel=1e-6)


def test_mean_multiplicativity():
    g = product_of_independent(Gamma(3, 2.0), Uniform(0.5, 2.0))
    assert g.mean() == pytest.approx(1.5 * 1.25, rel=1e-6)


def test_laplace_factorisation():
    x, z = Exponential(1.0), Uniform(0.0, 2.0)
    g = sum_of_independent(x, z)
    s = np.logspace(-3, 3, 64)
    np.testing.assert_allclose(laplace(g)(s), laplace(x)(s) * laplace(z)(s), atol=1e-12)


def test_mass_conservation():
    g = sum_of_independent(Normal(0, 1), Exponential(0.3))
    assert float(g.cdf(g.points[-1])) == 1.0
    assert float(g.cdf(g.quantile(1 - 1e-9))) >= 1 - 1e-6


# monotone maps ---------------------------------------------------------------


def test_monotone_map_examples():
    x = Exponential(1.0)
    t = np.linspace(0, 20, 2001)
    assert sup_gap(monotone_map(x, lambda v: 2 * v), Exponential(0.5), t) <= 1e-6
    assert sup_gap(monotone_map(x, lambda v: v), x, t) <= 1e-6
    assert float(monotone_map(Normal(0, 1), lambda v: v**3).cdf(0.0)) == pytest.approx(0.5, abs=1e-9)


def test_monotone_map_rejects_decreasing():
    with pytest.raises(NotIncreasing):
        monotone_map(Normal(0, 1), lambda v: -v)


def test_monotone_map_flat_part_becomes_atom():
    g = monotone_map(Normal(0, 1), lambda v: np.maximum(v, 0.0))
    assert g.atom_at(0.0) == pytest.approx(0.5, abs=1e-9)


def test_plan_dispatch():
    plan = CombinationPlan(CombinationKind.SUM, (PointMass(1.0), PointMass(2.0)))
    assert plan.run() == PointMass(3.0)
    assert CombinationPlan(CombinationKind.SCALE, (Exponential(1.0),), factor=4.0).run() == Exponential(0.25)
    assert CombinationPlan(CombinationKind.NEGATE, (PointMass(1.0),)).run() == PointMass(-1.0)
