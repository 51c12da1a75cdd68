"""Laplace transforms, their ratios and complete-monotonicity tests.

A :class:`LaplaceRep` is a product of one exact exponential-rational factor
and zero or more quadrature factors (distributions whose transform has no
closed form here).  Keeping the product structure means that transforms of
independent sums factor, and common factors cancel exactly in a ratio
``phi = L_Y / L_X``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np

from . import _quad
from .config import DEFAULT, ToleranceConfig
from .distributions import (
    Affine,
    Bernoulli,
    Distribution,
    Exponential,
    Gamma,
    Grid,
    Mixture,
    PointMass,
    has_negative_mass,
)
from .errors import DerivativeUnstable, NotNonnegative
from .poly import ExpRational, Poly, RationalFunction, _frac, binomial_leibniz
from .verdict import OrderVerdict, Witness, holds, inconclusive, violated

_U = np.finfo(float).eps / 2


# ------------------------------------------------------------ quadrature factor


@lru_cache(maxsize=256)
def _quad_derivs_cached(d: Distribution, s_key: tuple, n: int, tail: float):
    s = np.asarray(s_key)
    locs, masses = d.atoms()

    def run(n_panels, n_gl):
        nodes, w = _quad.cont_rule(d, tail, n_panels, n_gl)
        z = np.concatenate([nodes, locs])
        ww = np.concatenate([w, masses])
        e = np.exp(-np.outer(s, z))
        vals = np.empty((n + 1, s.size))
        mags = np.empty((n + 1, s.size))
        zk = np.ones_like(z)
        for k in range(n + 1):
            g = e * zk
            vals[k] = (-1) ** k * (g * ww).sum(axis=1)
            # weights carry their own rounding, and each panel mass is only
            # good to a few ulp absolute: roughly ulp * sum of |g| per panel
            mags[k] = np.abs(g * ww).sum(axis=1) + np.abs(g[:, : nodes.size]).sum(axis=1) / n_gl
            zk = zk * z
        return vals, mags

    v1, m1 = run(129, 10)
    v2, _ = run(65, 8)
    err = np.abs(v1 - v2) + 8 * _U * m1 * max(1, n)
    v1.setflags(write=False)
    err.setflags(write=False)
    return v1, err


def quad_derivatives(d: Distribution, s, n: int, tail: float = DEFAULT.quad_tail):
    """``L^(k)(s)`` for ``k = 0..n`` by differentiating the quadrature rule."""
    s = np.atleast_1d(np.asarray(s, float))
    return _quad_derivs_cached(d, tuple(s.tolist()), int(n), float(tail))


def _leibniz_product(a, ea, b, eb):
    n = a.shape[0] - 1
    out = np.zeros_like(a)
    err = np.zeros_like(a)
    for m in range(n + 1):
        for k in range(m + 1):
            c = comb(m, k)
            out[m] += c * a[k] * b[m - k]
            err[m] += c * (ea[k] * np.abs(b[m - k]) + np.abs(a[k]) * eb[m - k] + ea[k] * eb[m - k])
    return out, err


def _leibniz_quotient(a, ea, b, eb):
    """Derivatives of ``a/b`` with first-order error propagation."""
    phi = binomial_leibniz(a, b)
    n = a.shape[0] - 1
    err = np.zeros_like(a)
    b0 = np.abs(b[0])
    for m in range(n + 1):
        acc = ea[m].copy()
        for k in range(m):
            c = comb(m, k)
            acc += c * (err[k] * np.abs(b[m - k]) + np.abs(phi[k]) * eb[m - k])
        acc += np.abs(phi[m]) * eb[0]
        # rounding of the recurrence itself
        mag = np.abs(a[m]) + sum(comb(m, k) * np.abs(phi[k] * b[m - k]) for k in range(m))
        err[m] = (acc + 4 * (m + 1) * _U * mag) / b0
    return phi, err


# ------------------------------------------------------------------ LaplaceRep


@dataclass(frozen=True)
class LaplaceRep:
    """``L(s) = exact(s) * prod_i L_{quad[i]}(s)``."""

    exact: ExpRational
    quad: tuple = ()

    @property
    def is_exact(self) -> bool:
        return not self.quad

    @property
    def is_rational(self) -> bool:
        return self.is_exact and self.exact.is_rational

    @property
    def rational(self) -> RationalFunction:
        if not self.is_rational:
            raise ValueError("transform is not a rational function")
        return self.exact.single()[1]

    def __mul__(self, other: LaplaceRep) -> LaplaceRep:
        return LaplaceRep(self.exact * other.exact, tuple(sorted(self.quad + other.quad, key=repr)))

    def derivatives(self, s, n: int, tail: float = DEFAULT.quad_tail):
        s = np.atleast_1d(np.asarray(s, float))
        v, e = self.exact.evalf_derivatives(s, n)
        for d in self.quad:
            qv, qe = quad_derivatives(d, s, n, tail)
            v, e = _leibniz_product(v, e, qv, qe)
        return v, e

    def evalf(self, s, tail: float = DEFAULT.quad_tail):
        v, e = self.derivatives(s, 0, tail)
        return v[0], e[0]

    def __call__(self, s):
        v, _ = self.evalf(s)
        return float(v[0]) if np.ndim(s) == 0 else v

    def describe(self) -> str:
        parts = []
        if self.exact != ExpRational.const(1) or not self.quad:
            parts.append(_describe_exp_rational(self.exact))
        parts += [f"Laplace[{type(d).__name__}] (quadrature)" for d in self.quad]
        return " * ".join(parts)


def _fmt_poly(p: Poly) -> str:
    terms = []
    for k in range(p.degree, -1, -1):
        c = p.c[k]
        if c == 0:
            continue
        cs = f"{float(c):g}"
        terms.append(cs if k == 0 else (f"{cs}*s" if k == 1 else f"{cs}*s^{k}"))
    return " + ".join(terms) or "0"


def _describe_exp_rational(er: ExpRational) -> str:
    out = []
    for d, r in er.terms.items():
        body = f"({_fmt_poly(r.num)})" + ("" if r.den.degree == 0 and r.den.c[0] == 1 else f"/({_fmt_poly(r.den)})")
        out.append(body if d == 0 else f"exp(-{float(d):g}*s)*{body}")
    return " + ".join(out) or "0"


def _exp_factor(rate) -> RationalFunction:
    lam = _frac(rate)
    return RationalFunction(Poly.const(1), Poly([Fraction(1), 1 / lam]))


def _exact_or_none(d: Distribution) -> ExpRational | None:
    if isinstance(d, PointMass):
        return ExpRational({_frac(d.c): RationalFunction.const(1)})
    if isinstance(d, Bernoulli):
        p = _frac(d.p)
        return ExpRational({0: RationalFunction.const(1 - p), 1: RationalFunction.const(p)})
    if isinstance(d, Exponential):
        return ExpRational.rational(_exp_factor(d.rate))
    if isinstance(d, Gamma) and d.integer_shape is not None:
        return ExpRational.rational(_exp_factor(d.rate) ** d.integer_shape)
    if isinstance(d, Mixture):
        total = ExpRational({})
        for w, c in d.components:
            e = _exact_or_none(c)
            if e is None:
                return None
            total = total + e * _frac(w)
        return total
    if isinstance(d, Affine) and d.scale > 0:
        e = _exact_or_none(d.base)
        if e is None:
            return None
        return e.scale_arg(d.scale).shift(d.shift)
    if isinstance(d, Grid) and isinstance(d.transform, LaplaceRep) and d.transform.is_exact:
        return d.transform.exact
    return None


def laplace(d: Distribution, require_nonnegative: bool = False, eps: float = DEFAULT.eps_ineq) -> LaplaceRep:
    """Transform representation of ``d``: exact when possible, quadrature otherwise."""
    if require_nonnegative and has_negative_mass(d, eps):
        raise NotNonnegative(f"{type(d).__name__} has mass below zero")
    if isinstance(d, Grid) and isinstance(d.transform, LaplaceRep):
        return d.transform
    e = _exact_or_none(d)
    if e is not None:
        return LaplaceRep(e)
    return LaplaceRep(ExpRational.const(1), (d,))


# -------------------------------------------------------------------- PhiRatio


class PhiRatio:
    """``phi(s) = L_Y(s) / L_X(s)`` with common factors cancelled."""

    def __init__(self, num: LaplaceRep, den: LaplaceRep):
        nq, dq = list(num.quad), list(den.quad)
        for q in list(nq):
            if q in dq:
                nq.remove(q)
                dq.remove(q)
        ne, de = num.exact, den.exact
        if ne.terms and de.terms and not (ne.is_single and de.is_single):
            # pull out the leading delays so large s does not give 0/0
            dn, dd = min(ne.terms), min(de.terms)
            ne, de = ne.shift(-dn), de.shift(-dd)
            if ne == de:
                ne, de = ExpRational({dn - dd: RationalFunction.const(1)}), ExpRational.const(1)
            else:
                ne = ne.shift(dn - dd)
        if ne == de:
            ne = de = ExpRational.const(1)
        self.simplified: ExpRational | None = None
        if ne.is_single and de.is_single:
            d1, r1 = ne.single()
            d2, r2 = de.single()
            self.simplified = ExpRational({d1 - d2: r1 / r2})
            ne, de = self.simplified, ExpRational.const(1)
        self.num = LaplaceRep(ne, tuple(nq))
        self.den = LaplaceRep(de, tuple(dq))

    @property
    def is_exact(self) -> bool:
        return self.num.is_exact and self.den.is_exact

    @property
    def is_constant_one(self) -> bool:
        return self.is_exact and self.simplified is not None and self.simplified == ExpRational.const(1)

    @property
    def rational(self) -> RationalFunction | None:
        """The reduced rational function when phi is one (no exponential terms)."""
        if self.is_exact and self.simplified is not None and self.simplified.is_rational:
            return self.simplified.single()[1]
        return None

    def coefficients(self) -> tuple[list[float], list[float]]:
        """Numerator and denominator coefficients, highest power first."""
        r = self.rational
        if r is None:
            raise ValueError("phi is not a rational function")
        return [float(c) for c in reversed(r.num.c)], [float(c) for c in reversed(r.den.c)]

    def derivatives(self, s, n: int, tail: float = DEFAULT.quad_tail):
        """Values and error bounds of ``phi^(k)(s)``, ``k = 0..n``."""
        s = np.atleast_1d(np.asarray(s, float))
        if self.den.is_exact and self.den.exact == ExpRational.const(1):
            return self.num.derivatives(s, n, tail)
        a, ea = self.num.derivatives(s, n, tail)
        b, eb = self.den.derivatives(s, n, tail)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return _leibniz_quotient(a, ea, b, eb)

    def evalf(self, s):
        v, e = self.derivatives(s, 0)
        return v[0], e[0]

    def __call__(self, s):
        v, _ = self.evalf(s)
        return float(v[0]) if np.ndim(s) == 0 else v

    def exact_derivative(self, n: int, s):
        """Exact value of ``phi^(n)(s)`` when phi is a single exact term, else None."""
        if self.simplified is None or not self.is_exact:
            return None
        return self.simplified.exact_derivative(n, s)

    def describe(self) -> str:
        if self.simplified is not None and self.is_exact:
            return _describe_exp_rational(self.simplified)
        return f"[{self.num.describe()}] / [{self.den.describe()}]"


def phi_ratio(x: Distribution, y: Distribution, eps: float = DEFAULT.eps_ineq) -> PhiRatio:
    """``phi_{X,Y} = L_Y / L_X`` for nonnegative ``x`` and ``y``."""
    lx = laplace(x, require_nonnegative=True, eps=eps)
    ly = laplace(y, require_nonnegative=True, eps=eps)
    return PhiRatio(ly, lx)


# ------------------------------------------------------------------ derivatives


def fd_derivative(f, s, n: int, step: float = DEFAULT.fd_step, f_err=None):
    """Central finite-difference ``n``-th derivative with Richardson extrapolation.

    ``f`` maps an array of ``s`` to values; ``f_err`` optionally gives their
    absolute errors.  The step is relative to ``s`` and is halved until the
    error estimate stops improving.  Returns ``(values, errors)``.
    """
    s = np.atleast_1d(np.asarray(s, float))
    if n == 0:
        v = np.asarray(f(s), float)
        return v, (np.asarray(f_err(s), float) if f_err else 4 * _U * np.abs(v))
    k = np.arange(n + 1)
    coef = np.array([(-1) ** (n - j) * comb(n, j) for j in k], dtype=float)
    offs = k - n / 2.0

    def central(h):
        pts = s[:, None] + offs[None, :] * h[:, None]
        vals = np.asarray(f(pts.ravel()), float).reshape(pts.shape)
        errs = np.asarray(f_err(pts.ravel()), float).reshape(pts.shape) if f_err else 4 * _U * np.abs(vals)
        d = (vals @ coef) / h**n
        rnd = (errs @ np.abs(coef)) / h**n
        return d, rnd

    h = np.minimum(step, 1.0 / n) * s
    best_v = np.full(s.shape, np.nan)
    best_e = np.full(s.shape, np.inf)
    d_prev, r_prev = central(h)
    for _ in range(6):
        h = h / 2
        d_cur, r_cur = central(h)
        rich = (4 * d_cur - d_prev) / 3
        est = np.abs(d_cur - d_prev) / 3 + (4 * r_cur + r_prev) / 3
        better = est < best_e
        best_v = np.where(better, rich, best_v)
        best_e = np.where(better, est, best_e)
        d_prev, r_prev = d_cur, r_cur
    return best_v, best_e


class DerivativeFn:
    """Callable ``s -> phi^(n)(s)`` carrying error estimates."""

    def __init__(self, ratio: PhiRatio, n: int, method: str = "auto", step: float = DEFAULT.fd_step):
        if method not in ("auto", "exact", "fd"):
            raise ValueError("method must be auto, exact or fd")
        if method == "exact" and not ratio.is_exact:
            raise ValueError("exact derivatives need exact transforms on both sides")
        self.ratio = ratio
        self.n = int(n)
        self.method = method
        self.step = step

    def with_error(self, s):
        s = np.atleast_1d(np.asarray(s, float))
        if self.method == "fd":
            return fd_derivative(lambda x: self.ratio.evalf(x)[0], s, self.n, self.step,
                                 lambda x: self.ratio.evalf(x)[1])
        v, e = self.ratio.derivatives(s, self.n)
        return v[self.n], e[self.n]

    def __call__(self, s):
        v, e = self.with_error(s)
        bad = e > np.abs(v)
        if self.method == "fd" and np.any(bad & (e > 0)):
            raise DerivativeUnstable(f"error estimate exceeds derivative magnitude at s={np.atleast_1d(s)[bad][0]:g}")
        return float(v[0]) if np.ndim(s) == 0 else v


def derivative(r: PhiRatio, n: int, method: str = "auto", cfg: ToleranceConfig = DEFAULT) -> DerivativeFn:
    if n < 0:
        raise ValueError("derivative order must be nonnegative")
    if n > cfg.max_deriv_order:
        raise ValueError(f"derivative order {n} exceeds max_deriv_order={cfg.max_deriv_order}")
    return DerivativeFn(r, n, method, cfg.fd_step)


# ----------------------------------------------------- complete monotonicity


def _reverify(r: PhiRatio, n: int, s: float, eps: float) -> float | None:
    """Independent evaluation of ``(-1)^n phi^(n)(s)``; None when unavailable."""
    ex = r.exact_derivative(n, s)
    if ex is not None:
        return (-1) ** n * float(ex)
    v, e = r.derivatives(np.array([s]), n, tail=DEFAULT.quad_tail / 10)
    return (-1) ** n * float(v[n][0])


def complete_monotonicity_check(r: PhiRatio, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    """Test ``(-1)^n phi^(n)(s) >= -eps`` for ``n <= N`` on the s-grid."""
    N = cfg.max_deriv_order
    label = f"up to order {N}"
    if r.is_constant_one:
        return holds(0.0, label)
    s = cfg.s_array
    try:
        vals, errs = r.derivatives(s, N, cfg.quad_tail)
    except (FloatingPointError, ZeroDivisionError) as exc:
        return inconclusive(float("nan"), f"derivative evaluation failed: {exc}", label)
    signs = (-1.0) ** np.arange(N + 1)[:, None]
    v = signs * vals
    finite = np.isfinite(v) & np.isfinite(errs)
    if not np.all(finite):
        return inconclusive(float("nan"), "non-finite derivative values on the s-grid", label)
    eps = cfg.eps_ineq
    candidate = v < -eps
    confident = candidate & (v + errs < -eps)
    margin = float(v.min())
    if np.any(confident):
        for n in range(N + 1):
            idx = np.flatnonzero(confident[n])
            for i in idx:
                check = _reverify(r, n, float(s[i]), eps)
                if check is not None and check < -eps:
                    return violated(margin, Witness({"n": n, "s": float(s[i])}, check, 0.0), label)
        return inconclusive(margin, "sign violations did not survive independent re-evaluation", label)
    if np.any(candidate):
        n, i = np.argwhere(candidate)[0]
        return inconclusive(
            margin,
            f"(-1)^n phi^(n) below -eps only within error bars (n={n}, s={s[i]:g}, err={errs[n, i]:.2g})",
            label,
        )
    return holds(margin, label)
