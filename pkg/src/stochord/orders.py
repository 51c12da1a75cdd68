"""Decision procedures for the six stochastic orders.

Each ``check_*`` returns an :class:`OrderVerdict`.  A violation is reported
only when it exceeds ``eps_ineq`` plus the numerical error of both operands,
and only after the witness has been re-evaluated directly.  Smaller apparent
violations make the verdict Inconclusive.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .config import DEFAULT, ToleranceConfig
from .distributions import Distribution, Grid, has_negative_mass, hazard, quantile_points
from .errors import HazardUndefined, NotNonnegative
from .transforms import complete_monotonicity_check, laplace, phi_ratio
from .verdict import OrderVerdict, Witness, holds, inconclusive, violated


class OrderKind(str, Enum):
    ST = "st"
    HR = "hr"
    MOMENT = "moment"
    LT = "lt"
    CONV = "conv"
    ICX = "icx"

    @classmethod
    def parse(cls, s) -> OrderKind:
        if isinstance(s, OrderKind):
            return s
        key = str(s).strip().lower()
        for k in cls:
            if key in (k.value, k.name.lower()):
                return k
        raise ValueError(f"unknown order '{s}' (expected one of {', '.join(k.value for k in cls)})")

    @property
    def needs_nonnegative(self) -> bool:
        return self in (OrderKind.MOMENT, OrderKind.LT, OrderKind.CONV)


def _grid_err(d: Distribution) -> float:
    return float(d.err) if isinstance(d, Grid) else 0.0


def _pdf_err(d: Distribution) -> float:
    return float(d.pdf_err) if isinstance(d, Grid) else 0.0


def _points_for(d: Distribution, cfg: ToleranceConfig) -> np.ndarray:
    pts = quantile_points(d, cfg.grid_size, cfg.tail_lo, cfg.tail_hi)
    if isinstance(d, Grid):
        pts = np.concatenate([pts, d.points])
    return pts


def evaluation_points(x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> np.ndarray:
    """Merged grid: both quantile grids, every atom, and the point just left of each atom."""
    atoms = np.concatenate([x.atoms()[0], y.atoms()[0]])
    left = np.nextafter(atoms, -np.inf)
    pts = np.concatenate([_points_for(x, cfg), _points_for(y, cfg), atoms, left])
    return np.unique(pts[np.isfinite(pts)])


def _require_nonnegative(x, y, cfg):
    for name, d in (("x", x), ("y", y)):
        if has_negative_mass(d, cfg.eps_ineq):
            raise NotNonnegative(f"{name} has probability mass below zero")


def _pointwise(lhs, rhs, where, tol, eps, reverify, label=""):
    """Shared three-valued reduction for ``lhs >= rhs`` checks.

    ``tol`` is the per-point error allowance on top of ``eps``.
    """
    gap = lhs - rhs
    margin = float(np.min(gap)) if gap.size else 0.0
    cand = gap < -eps
    if not np.any(cand):
        return holds(margin, label)
    confident = cand & (gap < -(eps + tol))
    order = np.argsort(gap)
    for i in order:
        if not confident[i]:
            continue
        loc = where[i]
        l2, r2 = reverify(loc)
        if l2 - r2 < -eps:
            return violated(margin, Witness(_loc(loc), l2, r2), label)
        break
    i = int(order[0])
    return inconclusive(margin, f"apparent violation at {_loc(where[i])} lies within numerical error", label)


def _loc(v):
    return float(v) if np.ndim(v) == 0 else v


def check_st(x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    """``X <=st Y``: ``F_X(t) >= F_Y(t)`` on the merged grid."""
    t = evaluation_points(x, y, cfg)
    Fx = np.asarray(x.cdf(t), float)
    Fy = np.asarray(y.cdf(t), float)
    tol = _grid_err(x) + _grid_err(y)
    return _pointwise(Fx, Fy, t, tol, cfg.eps_ineq, lambda s: (float(x.cdf(s)), float(y.cdf(s))))


def check_hr(x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    """``X <=hr Y``: ``r_X(t) >= r_Y(t)`` wherever both hazards are defined."""
    if not (x.is_continuous and y.is_continuous):
        return inconclusive(float("nan"), "hazard rates are undefined for distributions with atoms")
    t = evaluation_points(x, y, cfg)
    sx = np.asarray(x.sf(t), float)
    sy = np.asarray(y.sf(t), float)
    ok = (sx > cfg.eps_ineq) & (sy > cfg.eps_ineq)
    if isinstance(x, Grid) and not x.has_density_model() or isinstance(y, Grid) and not y.has_density_model():
        return inconclusive(float("nan"), "grid operand has no density column")
    if not np.any(ok):
        return inconclusive(float("nan"), "no point where both hazards are defined")
    t, sx, sy = t[ok], sx[ok], sy[ok]
    rx = np.asarray(x.density(t), float) / sx
    ry = np.asarray(y.density(t), float) / sy
    # density singularities (e.g. gamma shape < 1 at 0) are single points
    fin = np.isfinite(rx) & np.isfinite(ry)
    t, sx, sy, rx, ry = t[fin], sx[fin], sy[fin], rx[fin], ry[fin]
    # relative slack: hazards can be large, so scale eps with the compared value
    scale = 1.0 + np.abs(ry)
    ex, ey = _grid_err(x), _grid_err(y)
    err = (_pdf_err(x) + (rx * ex if ex else 0.0)) / sx + (_pdf_err(y) + (ry * ey if ey else 0.0)) / sy

    def reverify(s):
        try:
            return hazard(x, s, cfg), hazard(y, s, cfg)
        except HazardUndefined:
            return 0.0, 0.0

    v = _pointwise(rx / scale, ry / scale, t, err / scale, cfg.eps_ineq, lambda s: _scaled(reverify(s)))
    if v.violated:
        lhs, rhs = reverify(v.witness.location)
        v = violated(v.margin, Witness(v.witness.location, lhs, rhs))
    return v


def _scaled(pair):
    a, b = pair
    k = 1.0 + abs(b)
    return a / k, b / k


def check_moment(x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    """``X <=m Y``: ``E[X^m] <= E[Y^m]`` for ``m = 1..M``."""
    _require_nonnegative(x, y, cfg)
    M = cfg.moment_horizon
    label = f"up to horizon {M}"
    margin = np.inf
    first_bad = None
    for m in range(1, M + 1):
        ex, ey = x.moment(m), y.moment(m)
        if not (np.isfinite(ex) and np.isfinite(ey)):
            return inconclusive(float("nan"), f"moment of order {m} is not finite", label)
        rel = (ey - ex) / max(abs(ey), 1e-300)
        margin = min(margin, rel)
        if ex > ey + cfg.eps_rel * abs(ey) and first_bad is None:
            first_bad = (m, ex, ey)
    if first_bad is not None:
        m, ex, ey = first_bad
        return violated(margin, Witness({"m": m}, ex, ey), label)
    return holds(float(margin), label)


def check_lt(x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    """``X <=Lt Y``: ``L_X(s) >= L_Y(s)`` on the s-grid."""
    _require_nonnegative(x, y, cfg)
    if x == y:
        return holds(0.0)
    s = cfg.s_array
    lx, ex = laplace(x).evalf(s, cfg.quad_tail)
    ly, ey = laplace(y).evalf(s, cfg.quad_tail)

    def reverify(si):
        return float(laplace(x)(si)), float(laplace(y)(si))

    return _pointwise(lx, ly, s, ex + ey, cfg.eps_ineq, reverify)


def check_conv(x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    """``X <=conv Y`` via complete monotonicity of ``L_Y / L_X``."""
    _require_nonnegative(x, y, cfg)
    return complete_monotonicity_check(phi_ratio(x, y, cfg.eps_ineq), cfg)


def _width(d: Distribution) -> float:
    if isinstance(d, Grid):
        return float(d.points[-1] - d.points[0])
    return 0.0


def check_icx(x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    """``X <=icx Y``: stop-loss of X below that of Y at every grid point."""
    t = evaluation_points(x, y, cfg)
    px = np.asarray(x.stop_loss(t), float)
    py = np.asarray(y.stop_loss(t), float)
    tol = _grid_err(x) * _width(x) + _grid_err(y) * _width(y)
    v = _pointwise(py, px, t, tol, cfg.eps_ineq, lambda s: (float(y.stop_loss(s)), float(x.stop_loss(s))))
    if v.violated:
        w = v.witness
        v = violated(v.margin, Witness(w.location, w.rhs, w.lhs))
    return v


_CHECKERS = {
    OrderKind.ST: check_st,
    OrderKind.HR: check_hr,
    OrderKind.MOMENT: check_moment,
    OrderKind.LT: check_lt,
    OrderKind.CONV: check_conv,
    OrderKind.ICX: check_icx,
}


def check(order, x: Distribution, y: Distribution, cfg: ToleranceConfig = DEFAULT) -> OrderVerdict:
    return _CHECKERS[OrderKind.parse(order)](x, y, cfg)
