"""Stochastic order verification.

Decide the usual, hazard rate, moment, Laplace transform, convolution and
increasing convex orders between distributions, build laws of independent
sums and products, and test whether an order survives adding or multiplying
by an independent variable.
"""
from .combinators import monotone_map, negate, product_of_independent, scale, shift, sum_of_independent
from .config import DEFAULT, ToleranceConfig
from .distributions import (
    Affine,
    Bernoulli,
    Distribution,
    Exponential,
    Gamma,
    Grid,
    Mixture,
    Normal,
    PointMass,
    Uniform,
    cdf,
    from_json,
    hazard,
    moment,
    pdf,
    quantile,
    stop_loss,
    survival,
    to_json,
)
from .errors import (
    DensityUndefined,
    DerivativeUnstable,
    HazardUndefined,
    InvalidDistribution,
    MomentDiverges,
    NegativeScaler,
    NotIncreasing,
    NotNonnegative,
    StochordError,
)
from .harness import (
    Outcome,
    PropertyKind,
    PropertyReport,
    SuiteSpec,
    reproduce_remark2,
    reproduce_remark5,
    reproduce_table1,
    verify_additivity,
    verify_axioms,
    verify_monotone_map,
    verify_multiplicativity,
)
from .orders import OrderKind, check, check_conv, check_hr, check_icx, check_lt, check_moment, check_st
from .transforms import complete_monotonicity_check, derivative, laplace, phi_ratio
from .verdict import OrderVerdict, Status, Witness

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
