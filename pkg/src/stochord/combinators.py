"""Distributions of X+Z, X*Z, phi(X), -X and cX for independent operands.

Closed forms are tried first.  Anything else becomes a :class:`Grid` built by
quadrature of ``F_X(t - z) dF_Z(z)`` (sums) or ``F_X(t / z) dF_Z(z)``
(products), with atoms convolved exactly.  Independence of the operands is a
caller contract; nothing here models dependence.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import special as sc

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
    Normal,
    PointMass,
    Uniform,
    _merge_atoms,
    quantile_points,
)
from .errors import InvalidDistribution, NegativeScaler, NotIncreasing
from .transforms import LaplaceRep, laplace


# ------------------------------------------------------------- affine maps


def _discrete_components(d: Distribution):
    """``[(weight, location)]`` if ``d`` is purely atomic, else None."""
    if isinstance(d, PointMass):
        return [(1.0, d.c)]
    if isinstance(d, Bernoulli):
        locs, masses = d.atoms()
        return list(zip(masses.tolist(), locs.tolist()))
    if isinstance(d, Mixture):
        out = []
        for w, c in d.components:
            sub = _discrete_components(c)
            if sub is None:
                return None
            out += [(w * m, a) for m, a in sub]
        return out
    return None


def _point_mixture(pairs) -> Distribution:
    locs, masses = _merge_atoms([a for _, a in pairs], [w for w, _ in pairs])
    if locs.size == 1:
        return PointMass(float(locs[0]))
    masses = masses / masses.sum()
    return Mixture(tuple((float(m), PointMass(float(a))) for a, m in zip(locs, masses)))


def _mixture_map(d: Mixture, fn) -> Mixture:
    return Mixture(tuple((w, fn(c)) for w, c in d.components))


def _rep_affine(rep, shift_by: float = 0.0, scale_by: float = 1.0):
    if isinstance(rep, LaplaceRep) and rep.is_exact:
        return LaplaceRep(rep.exact.scale_arg(scale_by).shift(shift_by))
    return None


def shift(x: Distribution, c: float) -> Distribution:
    """Law of ``X + c``."""
    c = float(c)
    if c == 0:
        return x
    if isinstance(x, PointMass):
        return PointMass(x.c + c)
    if isinstance(x, Normal):
        return Normal(x.mean_ + c, x.var)
    if isinstance(x, Uniform):
        return Uniform(x.a + c, x.b + c)
    if isinstance(x, Bernoulli):
        return _point_mixture([(w, a + c) for w, a in _discrete_components(x)])
    if isinstance(x, Mixture):
        return _mixture_map(x, lambda d: shift(d, c))
    if isinstance(x, Affine):
        return Affine(x.base, x.shift + c, x.scale)
    if isinstance(x, Grid):
        rep = _rep_affine(x.transform, shift_by=c) if c > 0 else None
        return Grid(x.points + c, x.cdf_values, x.atom_masses, x.pdf_values, x.err, x.pdf_err, rep)
    return Affine(x, c, 1.0)


def _scale_closed(x, c):
    if isinstance(x, Normal):
        return Normal(c * x.mean_, c * c * x.var)
    if isinstance(x, Exponential):
        return Exponential(x.rate / c)
    if isinstance(x, Gamma):
        return Gamma(x.shape, x.rate / c)
    return Uniform(c * x.a, c * x.b)


def scale(x: Distribution, c: float) -> Distribution:
    """Law of ``cX`` for ``c > 0``."""
    c = float(c)
    if not c > 0:
        raise ValueError("scale factor must be positive; use negate for sign flips")
    if c == 1:
        return x
    if isinstance(x, PointMass):
        return PointMass(c * x.c)
    if isinstance(x, (Normal, Exponential, Gamma, Uniform)):
        try:
            return _scale_closed(x, c)
        except InvalidDistribution:
            # parameters over/underflow: the spread is below float resolution
            return PointMass(c * x.mean())
    if isinstance(x, Bernoulli):
        return _point_mixture([(w, a * c) for w, a in _discrete_components(x)])
    if isinstance(x, Mixture):
        return _mixture_map(x, lambda d: scale(d, c))
    if isinstance(x, Affine):
        return Affine(x.base, c * x.shift, c * x.scale)
    if isinstance(x, Grid):
        pdf = None if x.pdf_values is None else x.pdf_values / c
        return Grid(x.points * c, x.cdf_values, x.atom_masses, pdf, x.err, x.pdf_err, _rep_affine(x.transform, scale_by=c))
    return Affine(x, 0.0, c)


def negate(x: Distribution) -> Distribution:
    """Law of ``-X``."""
    if isinstance(x, PointMass):
        return PointMass(-x.c if x.c != 0 else 0.0)
    if isinstance(x, Normal):
        return Normal(-x.mean_ if x.mean_ != 0 else 0.0, x.var)
    if isinstance(x, Uniform):
        return Uniform(-x.b, -x.a)
    if isinstance(x, Bernoulli):
        return _point_mixture([(w, -a if a else 0.0) for w, a in _discrete_components(x)])
    if isinstance(x, Mixture):
        return _mixture_map(x, negate)
    if isinstance(x, Affine):
        if x.shift == 0 and x.scale == -1:
            return x.base
        return Affine(x.base, -x.shift, -x.scale)
    if isinstance(x, Grid):
        L = x.cdf_values - x.atom_masses
        F_new = 1.0 - L[::-1]
        pdf = None if x.pdf_values is None else x.pdf_values[::-1]
        return Grid(-x.points[::-1], F_new, x.atom_masses[::-1], pdf, x.err, x.pdf_err)
    return Affine(x, 0.0, -1.0)


# -------------------------------------------------------------- closed forms


def _as_gamma(d: Distribution):
    if isinstance(d, Exponential):
        return 1.0, d.rate
    if isinstance(d, Gamma):
        return d.shape, d.rate
    return None


def _sum_closed(x: Distribution, z: Distribution) -> Distribution | None:
    if isinstance(z, PointMass):
        return shift(x, z.c)
    if isinstance(x, PointMass):
        return shift(z, x.c)
    if isinstance(x, Normal) and isinstance(z, Normal):
        return Normal(x.mean_ + z.mean_, x.var + z.var)
    gx, gz = _as_gamma(x), _as_gamma(z)
    if gx and gz and gx[1] == gz[1]:
        return Gamma(gx[0] + gz[0], gx[1])
    for a, b in ((z, x), (x, z)):
        comps = _discrete_components(a)
        if comps is not None:
            parts = [(w, shift(b, loc)) for w, loc in comps]
            return parts[0][1] if len(parts) == 1 else Mixture(tuple(parts))
    for a, b in ((z, x), (x, z)):
        if isinstance(a, Mixture):
            parts = []
            for w, c in a.components:
                r = _sum_closed(b, c)
                if r is None:
                    break
                parts.append((w, r))
            else:
                return Mixture(tuple(parts))
    return None


def _times_constant(x: Distribution, c: float) -> Distribution:
    if c == 0:
        return PointMass(0.0)
    return scale(x, c) if c > 0 else negate(scale(x, -c))


def _product_closed(x: Distribution, z: Distribution) -> Distribution | None:
    comps = _discrete_components(z)
    if comps is not None:
        parts = [(w, _times_constant(x, b)) for w, b in comps]
        return parts[0][1] if len(parts) == 1 else Mixture(tuple(parts))
    comps = _discrete_components(x)
    if comps is not None:
        parts = [(w, _times_constant(z, a)) for w, a in comps]
        return parts[0][1] if len(parts) == 1 else Mixture(tuple(parts))
    for a, b, flip in ((z, x, False), (x, z, True)):
        if isinstance(a, Mixture):
            parts = []
            for w, c in a.components:
                r = _product_closed(c, b) if flip else _product_closed(b, c)
                if r is None:
                    break
                parts.append((w, r))
            else:
                return Mixture(tuple(parts))
    return None


# ------------------------------------------------------------ grid fallback


def _result_range(kind: str, x: Distribution, z: Distribution, tau: float) -> tuple[float, float]:
    xl, xh = float(x.quantile(tau)), float(x.isf(tau))
    zl, zh = float(z.quantile(tau)), float(z.isf(tau))
    if kind == "sum":
        return xl + zl, xh + zh
    cands = [a * b for a in (xl, xh) for b in (max(zl, 0.0), zh)] + [0.0]
    return min(cands), max(cands)


def _placement(kind, x, z, cfg: ToleranceConfig, extra: np.ndarray) -> np.ndarray:
    """Knots for the result: quantile-mapped from a coarse pilot CDF."""
    # extend past the evaluation truncation so high moments of the result converge
    tau = cfg.quad_tail * 10
    lo, hi = _result_range(kind, x, z, tau)
    pilot = np.unique(np.concatenate([np.linspace(lo, hi, 257), extra]))
    fn = _quad.convolve_sum if kind == "sum" else _quad.convolve_product
    F, S, _, _, _ = fn(x, z, pilot, cfg.quad_tail, n_gl=6)
    Fm = np.maximum.accumulate(np.clip(F, 0, 1))
    n = cfg.grid_size
    n1, n2 = n // 2, n // 4
    levels = np.concatenate([
        np.linspace(cfg.tail_lo, 1 - cfg.tail_hi, n1),
        sc.expit(np.linspace(sc.logit(cfg.tail_lo), -sc.logit(cfg.tail_hi), n2)),
    ])
    # invert the pilot: first knot whose CDF reaches the level, then interpolate
    keep = np.concatenate([[True], np.diff(Fm) > 0])
    q = np.interp(levels, Fm[keep], pilot[keep])
    pts = np.concatenate([q, np.linspace(lo, hi, n - n1 - n2), extra])
    return np.unique(pts[np.isfinite(pts)])


def _breaks_combined(kind, x, z) -> np.ndarray:
    bx = np.concatenate([x.breaks(), x.atoms()[0]])
    bz = np.concatenate([z.breaks(), z.atoms()[0]])
    if bx.size == 0 or bz.size == 0:
        return np.empty(0)
    out = np.add.outer(bx, bz) if kind == "sum" else np.multiply.outer(bx, bz)
    return np.unique(out.ravel())


def _grid_from_values(pts, F, S, f, locs, masses, err) -> Grid:
    cdf = np.where(F <= 0.5, F, 1.0 - S)
    cdf = np.clip(cdf, 0.0, 1.0)
    atom = np.zeros(pts.size)
    if locs.size:
        idx = np.searchsorted(pts, locs)
        ok = (idx < pts.size) & (pts[np.minimum(idx, pts.size - 1)] == locs)
        atom[idx[ok]] = masses[ok]
    # left limits must not drop below the previous knot's value
    out = np.empty_like(cdf)
    prev = 0.0
    for i in range(pts.size):
        left = max(cdf[i] - atom[i], prev)
        out[i] = min(left + atom[i], 1.0)
        atom[i] = out[i] - left if out[i] - left < atom[i] else atom[i]
        prev = out[i]
    if out[0] <= 1e-12 and not (locs.size and np.any(locs == pts[0])):
        # truncated lower tail, not a genuine atom
        out[0] = 0.0
    atom[0] = out[0]
    out[-1] = 1.0
    atom[-1] = min(atom[-1], 1.0 - (out[-2] if pts.size > 1 else 0.0))
    pdf = np.where(np.isfinite(f), np.maximum(f, 0.0), 0.0)
    return Grid(pts, out, atom, pdf, err)


def _grid_error(kind, x, z, g: Grid, cfg: ToleranceConfig) -> tuple[float, float]:
    """CDF and density discrepancies between the grid and direct quadrature at segment midpoints."""
    pts = g.points
    if pts.size < 3:
        return 0.0, 0.0
    idx = np.unique(np.linspace(0, pts.size - 2, 96).round().astype(int))
    mids = 0.5 * (pts[idx] + pts[idx + 1])
    fn = _quad.convolve_sum if kind == "sum" else _quad.convolve_product
    F, S, f, _, _ = fn(x, z, mids, cfg.quad_tail)
    ref = np.where(F <= 0.5, F, 1.0 - S)
    err = float(np.max(np.abs(ref - g.cdf(mids)))) * 2 + 1e-13
    ok = np.isfinite(f)
    pdf_err = float(np.max(np.abs(f[ok] - g.density(mids[ok])))) * 2 + 1e-12 if np.any(ok) else np.inf
    return err, pdf_err


def _grid_combine(kind: str, x: Distribution, z: Distribution, cfg: ToleranceConfig, points=None) -> Grid:
    fn = _quad.convolve_sum if kind == "sum" else _quad.convolve_product
    # result atoms are exact; compute them once to place knots on them
    _, _, _, locs, masses = fn(x, z, np.zeros(1), cfg.quad_tail)
    extra = np.concatenate([locs, _breaks_combined(kind, x, z)])
    if points is None:
        pts = _placement(kind, x, z, cfg, extra)
    else:
        pts = np.unique(np.concatenate([np.asarray(points, float), locs]))
    F, S, f, locs, masses = fn(x, z, pts, cfg.quad_tail)
    g = _grid_from_values(pts, F, S, f, locs, masses, 0.0)
    err, pdf_err = _grid_error(kind, x, z, g, cfg)
    transform = None
    if kind == "sum" and x.is_nonnegative() and z.is_nonnegative():
        transform = laplace(x) * laplace(z)
    return Grid(g.points, g.cdf_values, g.atom_masses, g.pdf_values, err, pdf_err, transform)


# ------------------------------------------------------------------ public


def sum_of_independent(x: Distribution, z: Distribution, cfg: ToleranceConfig = DEFAULT,
                       points=None, force_grid: bool = False) -> Distribution:
    """Law of ``X + Z`` for independent ``X`` and ``Z``.

    ``points`` fixes the knots of a grid result (useful when two results are
    compared afterwards); ``force_grid`` skips the closed-form table.
    """
    if not force_grid:
        r = _sum_closed(x, z)
        if r is not None:
            return r
    return _grid_combine("sum", x, z, cfg, points)


def _check_scaler(z: Distribution, cfg: ToleranceConfig):
    below = float(z.cdf(-cfg.eps_ineq))
    if below > cfg.eps_ineq:
        raise NegativeScaler(f"scaler has mass {below:.3g} below zero")


def product_of_independent(x: Distribution, z: Distribution, cfg: ToleranceConfig = DEFAULT,
                           points=None, force_grid: bool = False) -> Distribution:
    """Law of ``X * Z`` for independent ``X`` and nonnegative ``Z``."""
    _check_scaler(z, cfg)
    if not force_grid:
        r = _product_closed(x, z)
        if r is not None:
            return r
    return _grid_combine("product", x, z, cfg, points)


def _apply(fn, v: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(fn(v), dtype=float)
        if out.shape == v.shape:
            return out
    except Exception:
        pass
    return np.array([float(fn(float(t))) for t in v])


def monotone_map(x: Distribution, fn: Callable, cfg: ToleranceConfig = DEFAULT, points=None) -> Grid:
    """Grid law of ``fn(X)`` for an increasing ``fn``.

    The CDF at the image of each sample point equals ``F_X`` there.  Images
    that overflow are dropped (the map is truncated to where it is finite).
    """
    xs = quantile_points(x, cfg.grid_size, cfg.tail_lo, cfg.tail_hi) if points is None else np.asarray(points, float)
    xs = np.unique(np.concatenate([xs, x.atoms()[0]]))
    with np.errstate(over="ignore", invalid="ignore"):
        ys = _apply(fn, xs)
    fin = np.isfinite(ys)
    xs, ys = xs[fin], ys[fin]
    if xs.size < 2:
        raise NotIncreasing("map is not finite on the sampled support")
    dy = np.diff(ys)
    if np.any(dy < 0):
        i = int(np.flatnonzero(dy < 0)[0])
        raise NotIncreasing(f"map decreases between x={xs[i]:g} and x={xs[i + 1]:g}")
    # collapse flat stretches onto one knot carrying the stretch's mass as an atom
    last = np.concatenate([dy > 0, [True]])
    first = np.concatenate([[True], dy > 0])
    run_start = np.flatnonzero(first)
    xs = xs.copy()
    for i in np.flatnonzero(last[:-1] & ~first[:-1] if xs.size > 1 else []):
        # push the run's right end to where the map actually starts rising
        lo, hi = xs[i], xs[i + 1]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if _apply(fn, np.array([mid]))[0] <= ys[i]:
                lo = mid
            else:
                hi = mid
        xs[i] = lo
    xs_k, ys_k = xs[last], ys[last]
    F = np.asarray(x.cdf(xs_k), float)
    F[-1] = 1.0
    start_x = xs[run_start]
    atoms = F - np.asarray(x.cdf(start_x), float) + np.asarray(x.atom_at(start_x), float)
    atoms = np.clip(atoms, 0.0, None)
    atoms[0] = F[0]
    h = 1e-6 * (1 + np.abs(xs_k))
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        deriv = (_apply(fn, xs_k + h) - _apply(fn, xs_k - h)) / (2 * h)
        pdf = np.asarray(x.density(xs_k), float) / deriv
    pdf = pdf if np.all(np.isfinite(pdf) & (pdf >= 0)) else None
    g = Grid(ys_k, F, atoms, pdf)
    # interpolation error at images of x-space midpoints
    mx = 0.5 * (xs_k[:-1] + xs_k[1:])
    with np.errstate(over="ignore", invalid="ignore"):
        my = _apply(fn, mx)
    ok = np.isfinite(my) & (my > ys_k[:-1]) & (my < ys_k[1:])
    err = float(np.max(np.abs(np.asarray(x.cdf(mx[ok]), float) - g.cdf(my[ok])))) if np.any(ok) else 0.0
    return Grid(g.points, g.cdf_values, g.atom_masses, g.pdf_values, 2 * err + 1e-13)


# ----------------------------------------------------------- plan objects


class CombinationKind(str, Enum):
    SUM = "Sum"
    PRODUCT = "Product"
    MONOTONE_MAP = "MonotoneMap"
    NEGATE = "Negate"
    SCALE = "Scale"


@dataclass(frozen=True)
class CombinationPlan:
    kind: CombinationKind
    operands: tuple
    fn: Callable | None = None
    factor: float = 1.0

    def run(self, cfg: ToleranceConfig = DEFAULT) -> Distribution:
        k = CombinationKind(self.kind)
        if k is CombinationKind.SUM:
            return sum_of_independent(*self.operands, cfg=cfg)
        if k is CombinationKind.PRODUCT:
            return product_of_independent(*self.operands, cfg=cfg)
        if k is CombinationKind.MONOTONE_MAP:
            if self.fn is None:
                raise ValueError("monotone map plan needs a function")
            return monotone_map(self.operands[0], self.fn, cfg)
        if k is CombinationKind.NEGATE:
            return negate(self.operands[0])
        return scale(self.operands[0], self.factor)

