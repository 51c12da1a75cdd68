"""Real-valued distributions and their basic functionals.

Every family implements vectorised ``cdf``/``sf``/``density`` plus atoms,
moments, quantiles and the stop-loss transform ``x -> E[(X - x)^+]``.
Distributions are immutable values.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special as sc

from . import _accel
from .config import DEFAULT, ToleranceConfig
from .errors import DensityUndefined, HazardUndefined, InvalidDistribution, MomentDiverges

WEIGHT_TOL = 1e-9


def _arr(t):
    return np.asarray(t, dtype=float)


def _ret(val, like):
    """Return a python float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(np.asarray(val).reshape(()))
    return val


class Distribution:
    """Common interface.  Subclasses are frozen dataclasses."""

    # -- required by subclasses --------------------------------------------
    def cdf(self, t):
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def moment(self, m: int) -> float:
        raise NotImplementedError

    def stop_loss(self, x):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    # -- defaults --------------------------------------------------------------
    def sf(self, t):
        return _ret(1.0 - _arr(self.cdf(t)), t)

    def density(self, t):
        return _ret(np.zeros(np.shape(t)), t)

    def atoms(self) -> tuple[np.ndarray, np.ndarray]:
        return np.empty(0), np.empty(0)

    @property
    def atom_mass(self) -> float:
        return float(self.atoms()[1].sum())

    @property
    def is_continuous(self) -> bool:
        return self.atoms()[1].size == 0

    def atom_at(self, t):
        locs, masses = self.atoms()
        tt = _arr(t)
        out = np.zeros(tt.shape)
        for a, m in zip(locs, masses):
            out = out + np.where(tt == a, m, 0.0)
        return _ret(out, t)

    def atomic_cdf(self, t):
        locs, masses = self.atoms()
        tt = _arr(t)
        if locs.size == 0:
            return np.zeros(tt.shape)
        cm = np.concatenate([[0.0], np.cumsum(masses)])
        return cm[np.searchsorted(locs, tt, side="right")]

    def cont_cdf(self, t):
        """CDF of the absolutely continuous part (a sub-distribution)."""
        if self.is_continuous:
            return _arr(self.cdf(t))
        return np.maximum(_arr(self.cdf(t)) - self.atomic_cdf(t), 0.0)

    def cont_sf(self, t):
        if self.is_continuous:
            return _arr(self.sf(t))
        mass = 1.0 - self.atom_mass
        return np.maximum(mass - self.cont_cdf(t), 0.0)

    def breaks(self) -> np.ndarray:
        """Finite points where the density may be discontinuous or kinked."""
        lo, hi = self.support()
        return np.array([v for v in (lo, hi) if np.isfinite(v)], dtype=float)

    def mean(self) -> float:
        return self.moment(1)

    def variance(self) -> float:
        mu = self.moment(1)
        return max(self.moment(2) - mu * mu, 0.0)

    def is_nonnegative(self, eps: float = 0.0) -> bool:
        return self.support()[0] >= -eps

    def _bracket(self, q):
        lo, hi = self.support()
        return np.full(np.shape(q), lo, dtype=float), np.full(np.shape(q), hi, dtype=float)

    def quantile(self, q):
        """Generalised inverse ``inf{t : F(t) >= q}`` by bisection."""
        qq = _arr(q)
        lo, hi = self._bracket(qq)
        lo, hi = np.broadcast_to(lo, qq.shape).copy(), np.broadcast_to(hi, qq.shape).copy()
        done = _arr(self.cdf(lo)) >= qq
        res = np.where(done, lo, hi)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            # run to adjacent floats; quantiles near 0 need relative precision
            active = ~done & (mid > lo) & (mid < hi)
            if not np.any(active):
                break
            up = _arr(self.cdf(mid)) >= qq
            hi = np.where(active & up, mid, hi)
            lo = np.where(active & ~up, mid, lo)
        res = np.where(done, res, hi)
        return _ret(res, q)

    def isf(self, q):
        """Upper-tail quantile: the point with ``q`` of the mass above it."""
        return self.quantile(1.0 - _arr(q)) if np.ndim(q) else self.quantile(1.0 - q)


# ----------------------------------------------------------------- families


@dataclass(frozen=True)
class PointMass(Distribution):
    c: float

    def __post_init__(self):
        if not np.isfinite(self.c):
            raise InvalidDistribution("pointmass: c must be finite")

    def cdf(self, t):
        return _ret((_arr(t) >= self.c).astype(float), t)

    def sf(self, t):
        return _ret((_arr(t) < self.c).astype(float), t)

    def atoms(self):
        return np.array([float(self.c)]), np.array([1.0])

    def support(self):
        return float(self.c), float(self.c)

    def quantile(self, q):
        return _ret(np.full(np.shape(q), float(self.c)), q)

    def isf(self, q):
        return self.quantile(q)

    def moment(self, m):
        return float(self.c) ** m

    def stop_loss(self, x):
        return _ret(np.maximum(self.c - _arr(x), 0.0), x)

    def breaks(self):
        return np.empty(0)

    def to_json(self):
        return {"type": "pointmass", "c": float(self.c)}


@dataclass(frozen=True)
class Bernoulli(Distribution):
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidDistribution("bernoulli: p must lie in [0, 1]")

    def atoms(self):
        locs = np.array([0.0, 1.0])
        masses = np.array([1.0 - self.p, float(self.p)])
        keep = masses > 0
        return locs[keep], masses[keep]

    def cdf(self, t):
        tt = _arr(t)
        return _ret(np.where(tt < 0, 0.0, np.where(tt < 1, 1.0 - self.p, 1.0)), t)

    def sf(self, t):
        tt = _arr(t)
        return _ret(np.where(tt < 0, 1.0, np.where(tt < 1, float(self.p), 0.0)), t)

    def support(self):
        locs, _ = self.atoms()
        return float(locs[0]), float(locs[-1])

    def quantile(self, q):
        return _ret(np.where(_arr(q) <= 1.0 - self.p, 0.0, 1.0), q)

    def moment(self, m):
        return float(self.p) if m >= 1 else 1.0

    def stop_loss(self, x):
        xx = _arr(x)
        return _ret(self.p * np.maximum(1 - xx, 0.0) + (1 - self.p) * np.maximum(-xx, 0.0), x)

    def breaks(self):
        return np.empty(0)

    def to_json(self):
        return {"type": "bernoulli", "p": float(self.p)}


@dataclass(frozen=True)
class Normal(Distribution):
    mean_: float = field(metadata={"json": "mean"})
    var: float = field(metadata={"json": "variance"})

    def __post_init__(self):
        if not (np.isfinite(self.mean_) and np.isfinite(self.var) and self.var > 0):
            raise InvalidDistribution("normal: need finite mean and positive variance")

    @property
    def sd(self) -> float:
        return math.sqrt(self.var)

    def _z(self, t):
        return (_arr(t) - self.mean_) / self.sd

    def cdf(self, t):
        return _ret(sc.ndtr(self._z(t)), t)

    def sf(self, t):
        return _ret(sc.ndtr(-self._z(t)), t)

    def density(self, t):
        z = self._z(t)
        return _ret(np.exp(-0.5 * z * z) / (self.sd * math.sqrt(2 * math.pi)), t)

    def support(self):
        return -math.inf, math.inf

    def quantile(self, q):
        return _ret(self.mean_ + self.sd * sc.ndtri(_arr(q)), q)

    def isf(self, q):
        return _ret(self.mean_ - self.sd * sc.ndtri(_arr(q)), q)

    def moment(self, m):
        total = 0.0
        for k in range(0, m + 1, 2):
            dfact = float(np.prod(np.arange(k - 1, 0, -2))) if k > 0 else 1.0
            total += math.comb(m, k) * self.mean_ ** (m - k) * self.sd**k * dfact
        return total

    def stop_loss(self, x):
        z = self._z(x)
        val = self.sd * np.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) - self.sd * z * sc.ndtr(-z)
        return _ret(np.maximum(val, 0.0), x)

    def is_nonnegative(self, eps=0.0):
        return False

    def to_json(self):
        return {"type": "normal", "mean": float(self.mean_), "variance": float(self.var)}


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise InvalidDistribution("exponential: rate must be positive")

    def cdf(self, t):
        tt = _arr(t)
        return _ret(np.where(tt < 0, 0.0, -np.expm1(-self.rate * np.maximum(tt, 0.0))), t)

    def sf(self, t):
        return _ret(np.exp(-self.rate * np.maximum(_arr(t), 0.0)), t)

    def density(self, t):
        tt = _arr(t)
        return _ret(np.where(tt < 0, 0.0, self.rate * np.exp(-self.rate * np.maximum(tt, 0.0))), t)

    def support(self):
        return 0.0, math.inf

    def quantile(self, q):
        return _ret(-np.log1p(-_arr(q)) / self.rate, q)

    def isf(self, q):
        return _ret(-np.log(_arr(q)) / self.rate, q)

    def moment(self, m):
        return math.factorial(m) / self.rate**m

    def stop_loss(self, x):
        xx = _arr(x)
        return _ret(np.where(xx <= 0, 1 / self.rate - xx, np.exp(-self.rate * np.maximum(xx, 0)) / self.rate), x)

    def to_json(self):
        return {"type": "exponential", "rate": float(self.rate)}


@dataclass(frozen=True)
class Uniform(Distribution):
    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b) and self.a < self.b):
            raise InvalidDistribution("uniform: need finite a < b")

    def cdf(self, t):
        return _ret(np.clip((_arr(t) - self.a) / (self.b - self.a), 0.0, 1.0), t)

    def sf(self, t):
        return _ret(np.clip((self.b - _arr(t)) / (self.b - self.a), 0.0, 1.0), t)

    def density(self, t):
        tt = _arr(t)
        return _ret(np.where((tt >= self.a) & (tt < self.b), 1.0 / (self.b - self.a), 0.0), t)

    def support(self):
        return float(self.a), float(self.b)

    def quantile(self, q):
        return _ret(self.a + _arr(q) * (self.b - self.a), q)

    def isf(self, q):
        return _ret(self.b - _arr(q) * (self.b - self.a), q)

    def moment(self, m):
        return (self.b ** (m + 1) - self.a ** (m + 1)) / ((m + 1) * (self.b - self.a))

    def stop_loss(self, x):
        xx = _arr(x)
        inside = (self.b - np.clip(xx, self.a, self.b)) ** 2 / (2 * (self.b - self.a))
        return _ret(np.where(xx < self.a, 0.5 * (self.a + self.b) - xx, inside), x)

    def to_json(self):
        return {"type": "uniform", "a": float(self.a), "b": float(self.b)}


@dataclass(frozen=True)
class Gamma(Distribution):
    shape: float
    rate: float

    def __post_init__(self):
        if not (self.shape > 0 and self.rate > 0 and np.isfinite(self.shape) and np.isfinite(self.rate)):
            raise InvalidDistribution("gamma: shape and rate must be positive")

    @property
    def integer_shape(self) -> int | None:
        k = round(self.shape)
        return int(k) if k >= 1 and self.shape == k else None

    def cdf(self, t):
        tt = np.maximum(_arr(t), 0.0)
        return _ret(sc.gammainc(self.shape, self.rate * tt), t)

    def sf(self, t):
        tt = np.maximum(_arr(t), 0.0)
        return _ret(sc.gammaincc(self.shape, self.rate * tt), t)

    def density(self, t):
        tt = _arr(t)
        pos = tt > 0
        safe = np.where(pos, tt, 1.0)
        logd = self.shape * math.log(self.rate) + (self.shape - 1) * np.log(safe) - self.rate * safe - sc.gammaln(self.shape)
        at0 = math.inf if self.shape < 1 else (self.rate if self.shape == 1 else 0.0)
        return _ret(np.where(pos, np.exp(logd), np.where(tt == 0, at0, 0.0)), t)

    def support(self):
        return 0.0, math.inf

    def quantile(self, q):
        return _ret(sc.gammaincinv(self.shape, _arr(q)) / self.rate, q)

    def isf(self, q):
        return _ret(sc.gammainccinv(self.shape, _arr(q)) / self.rate, q)

    def moment(self, m):
        return float(np.prod(self.shape + np.arange(m))) / self.rate**m

    def stop_loss(self, x):
        xx = _arr(x)
        y = self.rate * np.maximum(xx, 0.0)
        k = self.shape
        pos = (k / self.rate) * sc.gammaincc(k + 1, y) - np.maximum(xx, 0.0) * sc.gammaincc(k, y)
        return _ret(np.where(xx <= 0, k / self.rate - xx, np.maximum(pos, 0.0)), x)

    def to_json(self):
        return {"type": "gamma", "shape": float(self.shape), "rate": float(self.rate)}


def _merge_atoms(locs, masses):
    locs = np.asarray(locs, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if locs.size == 0:
        return np.empty(0), np.empty(0)
    order = np.argsort(locs, kind="stable")
    locs, masses = locs[order], masses[order]
    uniq, inv = np.unique(locs, return_inverse=True)
    tot = np.zeros(uniq.size)
    np.add.at(tot, inv, masses)
    keep = tot > 0
    return uniq[keep], tot[keep]


@dataclass(frozen=True)
class Mixture(Distribution):
    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), d) for w, d in self.components)
        if not comps:
            raise InvalidDistribution("mixture: needs at least one component")
        ws = np.array([w for w, _ in comps])
        if np.any(ws < 0) or abs(ws.sum() - 1.0) > WEIGHT_TOL:
            raise InvalidDistribution("mixture: weights must be nonnegative and sum to 1")
        for _, d in comps:
            if not isinstance(d, Distribution):
                raise InvalidDistribution("mixture: components must be distributions")
        object.__setattr__(self, "components", comps)

    def _sum(self, fn, t):
        tt = _arr(t)
        out = np.zeros(tt.shape)
        for w, d in self.components:
            out = out + w * _arr(fn(d, tt))
        return out

    def cdf(self, t):
        return _ret(np.clip(self._sum(lambda d, x: d.cdf(x), t), 0.0, 1.0), t)

    def sf(self, t):
        return _ret(np.clip(self._sum(lambda d, x: d.sf(x), t), 0.0, 1.0), t)

    def density(self, t):
        return _ret(self._sum(lambda d, x: d.density(x), t), t)

    def cont_cdf(self, t):
        return self._sum(lambda d, x: d.cont_cdf(x), t)

    def cont_sf(self, t):
        return self._sum(lambda d, x: d.cont_sf(x), t)

    def atoms(self):
        locs, masses = [], []
        for w, d in self.components:
            l, m = d.atoms()
            locs.append(l)
            masses.append(w * m)
        return _merge_atoms(np.concatenate(locs), np.concatenate(masses))

    def support(self):
        sup = [d.support() for w, d in self.components if w > 0]
        return min(s[0] for s in sup), max(s[1] for s in sup)

    def breaks(self):
        parts = [d.breaks() for w, d in self.components if w > 0]
        return np.unique(np.concatenate(parts)) if parts else np.empty(0)

    def _bracket(self, q):
        qs = [_arr(d.quantile(q)) for w, d in self.components if w > 0]
        return np.minimum.reduce(qs), np.maximum.reduce(qs)

    def moment(self, m):
        return sum(w * d.moment(m) for w, d in self.components)

    def stop_loss(self, x):
        return _ret(self._sum(lambda d, y: d.stop_loss(y), x), x)

    def is_nonnegative(self, eps=0.0):
        return all(d.is_nonnegative(eps) for w, d in self.components if w > 0)

    def to_json(self):
        return {"type": "mixture", "components": [[w, d.to_json()] for w, d in self.components]}


@dataclass(frozen=True)
class Affine(Distribution):
    """Law of ``shift + scale * base``."""

    base: Distribution
    shift: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.scale == 0 or not (np.isfinite(self.scale) and np.isfinite(self.shift)):
            raise InvalidDistribution("affine: scale must be finite and nonzero")

    def _u(self, t):
        return (_arr(t) - self.shift) / self.scale

    def cdf(self, t):
        u = self._u(t)
        if self.scale > 0:
            return _ret(_arr(self.base.cdf(u)), t)
        return _ret(np.clip(_arr(self.base.sf(u)) + _arr(self.base.atom_at(u)), 0.0, 1.0), t)

    def sf(self, t):
        u = self._u(t)
        if self.scale > 0:
            return _ret(_arr(self.base.sf(u)), t)
        return _ret(np.clip(_arr(self.base.cdf(u)) - _arr(self.base.atom_at(u)), 0.0, 1.0), t)

    def density(self, t):
        return _ret(_arr(self.base.density(self._u(t))) / abs(self.scale), t)

    def cont_cdf(self, t):
        u = self._u(t)
        return self.base.cont_cdf(u) if self.scale > 0 else self.base.cont_sf(u)

    def cont_sf(self, t):
        u = self._u(t)
        return self.base.cont_sf(u) if self.scale > 0 else self.base.cont_cdf(u)

    def atoms(self):
        l, m = self.base.atoms()
        return _merge_atoms(self.shift + self.scale * l, m)

    def support(self):
        lo, hi = self.base.support()
        ends = sorted([self.shift + self.scale * lo, self.shift + self.scale * hi])
        return ends[0], ends[1]

    def breaks(self):
        return np.sort(self.shift + self.scale * self.base.breaks())

    def quantile(self, q):
        if self.scale > 0:
            return _ret(self.shift + self.scale * _arr(self.base.quantile(q)), q)
        if self.base.is_continuous:
            return _ret(self.shift + self.scale * _arr(self.base.isf(q)), q)
        return Distribution.quantile(self, q)

    def isf(self, q):
        if self.scale > 0:
            return _ret(self.shift + self.scale * _arr(self.base.isf(q)), q)
        if self.base.is_continuous:
            return _ret(self.shift + self.scale * _arr(self.base.quantile(q)), q)
        return Distribution.isf(self, q)

    def moment(self, m):
        return sum(
            math.comb(m, k) * self.shift ** (m - k) * self.scale**k * (self.base.moment(k) if k else 1.0)
            for k in range(m + 1)
        )

    def stop_loss(self, x):
        u = self._u(x)
        if self.scale > 0:
            return _ret(self.scale * _arr(self.base.stop_loss(u)), x)
        s = abs(self.scale)
        return _ret(s * (u - self.base.mean() + _arr(self.base.stop_loss(u))), x)

    def to_json(self):
        return {"type": "affine", "base": self.base.to_json(), "shift": float(self.shift), "scale": float(self.scale)}


@dataclass(frozen=True, eq=False)
class Grid(Distribution):
    """Tabulated distribution.

    ``atoms[i]`` is the jump of the CDF at ``points[i]`` (0 where continuous).
    Between knots the CDF is a monotone cubic Hermite interpolant when a
    density column is present, piecewise linear otherwise.  ``err`` is an
    estimate of the absolute CDF error (nonzero for grids built by
    quadrature); ``transform`` optionally carries an exact Laplace transform.
    """

    points: np.ndarray
    cdf_values: np.ndarray
    atom_masses: np.ndarray = None
    pdf_values: np.ndarray = None
    err: float = 0.0
    pdf_err: float = 0.0
    transform: object = field(default=None, repr=False)

    def __post_init__(self):
        t = np.array(self.points, dtype=float)
        F = np.array(self.cdf_values, dtype=float)
        if t.ndim != 1 or t.size < 2 or F.shape != t.shape:
            raise InvalidDistribution("grid: need >= 2 points and matching cdf values")
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise InvalidDistribution("grid: points must be finite and strictly increasing")
        if np.any(F < -1e-12) or np.any(F > 1 + 1e-12) or np.any(np.diff(F) < -1e-12):
            raise InvalidDistribution("grid: cdf values must be nondecreasing within [0, 1]")
        if abs(F[-1] - 1.0) > 1e-9:
            raise InvalidDistribution("grid: final cdf value must equal 1")
        F = np.maximum.accumulate(np.clip(F, 0.0, 1.0))
        F[-1] = 1.0
        A = np.zeros_like(t) if self.atom_masses is None else np.array(self.atom_masses, dtype=float)
        if A.shape != t.shape or np.any(A < 0):
            raise InvalidDistribution("grid: atom masses must be nonnegative, one per point")
        prev = np.concatenate([[0.0], F[:-1]])
        if np.any(A > F - prev + 1e-12):
            raise InvalidDistribution("grid: atom mass exceeds the cdf jump at its point")
        A = np.minimum(A, F - prev)
        A[0] = F[0]
        L = F - A
        if self.pdf_values is not None:
            D = np.array(self.pdf_values, dtype=float)
            if D.shape != t.shape or np.any(D < 0) or not np.all(np.isfinite(D)):
                raise InvalidDistribution("grid: density values must be finite and nonnegative")
            h = np.diff(t)
            delta = L[1:] - F[:-1]
            with np.errstate(divide="ignore", invalid="ignore"):
                al = D[:-1] * h / delta
                be = D[1:] * h / delta
            herm = (delta > 0) & (al * al + be * be <= 9.0)
        else:
            D = None
            herm = np.zeros(t.size - 1, dtype=bool)
        for name, val in (("points", t), ("cdf_values", F), ("atom_masses", A)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        if D is not None:
            D.setflags(write=False)
        object.__setattr__(self, "pdf_values", D)
        object.__setattr__(self, "_L", L)
        object.__setattr__(self, "_D", D if D is not None else np.zeros_like(t))
        object.__setattr__(self, "_herm", herm)

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        same_pdf = (self.pdf_values is None) == (other.pdf_values is None) and (
            self.pdf_values is None or np.array_equal(self.pdf_values, other.pdf_values)
        )
        return (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.cdf_values, other.cdf_values)
            and np.array_equal(self.atom_masses, other.atom_masses)
            and same_pdf
        )

    def __hash__(self):
        return hash((self.points.tobytes(), self.cdf_values.tobytes(), self.atom_masses.tobytes()))

    def _eval(self, t):
        return _accel.grid_eval(_arr(t), self.points, self.cdf_values, self._L, self._D, self._herm)

    def cdf(self, t):
        return _ret(self._eval(t)[0], t)

    def density(self, t):
        return _ret(self._eval(t)[1], t)

    def atoms(self):
        keep = self.atom_masses > 0
        return self.points[keep].copy(), self.atom_masses[keep].copy()

    def support(self):
        return float(self.points[0]), float(self.points[-1])

    def breaks(self):
        return np.array([self.points[0], self.points[-1]])

    def _bracket(self, q):
        return np.full(np.shape(q), self.points[0]), np.full(np.shape(q), self.points[-1])

    def has_density_model(self) -> bool:
        return self.pdf_values is not None

    def kink_at(self, t: float) -> bool:
        """True when ``t`` is an interior knot whose one-sided slopes differ (no density column)."""
        if self.pdf_values is not None:
            return False
        i = np.searchsorted(self.points, t)
        if i <= 0 or i >= self.points.size - 1 or self.points[i] != t:
            return False
        h = np.diff(self.points)
        left = (self._L[i] - self.cdf_values[i - 1]) / h[i - 1]
        right = (self._L[i + 1] - self.cdf_values[i]) / h[i]
        return not np.isclose(left, right, rtol=1e-9, atol=1e-15)

    def _segment_nodes(self, n_gl=8):
        x, w = np.polynomial.legendre.leggauss(n_gl)
        a, b = self.points[:-1], self.points[1:]
        half = 0.5 * (b - a)
        nodes = (0.5 * (a + b))[:, None] + half[:, None] * x[None, :]
        weights = half[:, None] * w[None, :]
        return nodes.ravel(), weights.ravel()

    def moment(self, m):
        nodes, weights = self._segment_nodes()
        dens = self._eval(nodes)[1]
        total = float(np.sum(weights * dens * nodes**m))
        total += float(np.sum(self.atom_masses * self.points**m))
        return total

    def stop_loss(self, x):
        pts, F = self.points, self.cdf_values
        return _ret(_accel.grid_stop_loss(_arr(x), pts, F, self._L, self._D, self._herm), x)

    def to_json(self):
        out = {
            "type": "grid",
            "t": self.points.tolist(),
            "cdf": self.cdf_values.tolist(),
            "atom": self.atom_masses.tolist(),
        }
        if self.pdf_values is not None:
            out["pdf"] = self.pdf_values.tolist()
        return out

    def to_csv(self, path):
        cols = ["t", "cdf", "atom"] + (["pdf"] if self.pdf_values is not None else [])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for i in range(self.points.size):
                row = [repr(float(self.points[i])), repr(float(self.cdf_values[i])), repr(float(self.atom_masses[i]))]
                if self.pdf_values is not None:
                    row.append(repr(float(self.pdf_values[i])))
                w.writerow(row)

    @classmethod
    def from_csv(cls, path) -> Grid:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or not {"t", "cdf", "atom"} <= set(rows[0]):
            raise InvalidDistribution(f"grid csv {path}: header must contain t,cdf,atom")
        try:
            t = [float(r["t"]) for r in rows]
            F = [float(r["cdf"]) for r in rows]
            A = [float(r["atom"]) for r in rows]
            D = [float(r["pdf"]) for r in rows] if "pdf" in rows[0] and rows[0]["pdf"] not in (None, "") else None
        except (TypeError, ValueError) as exc:
            raise InvalidDistribution(f"grid csv {path}: non-numeric entry ({exc})") from None
        return cls(np.array(t), np.array(F), np.array(A), None if D is None else np.array(D))


# ------------------------------------------------------------ module-level API


@dataclass(frozen=True)
class AtomMass:
    """Marker returned by :func:`pdf` at an atom: a point mass, not a density."""

    mass: float


def cdf(d: Distribution, t):
    return d.cdf(t)


def survival(d: Distribution, t):
    """``1 - F(t)``; computed as exactly that difference."""
    return _ret(1.0 - _arr(d.cdf(t)), t)


def pdf(d: Distribution, t: float):
    """Density of the continuous part at ``t``, or :class:`AtomMass` at an atom."""
    m = float(d.atom_at(t))
    if m > 0:
        return AtomMass(m)
    if isinstance(d, Grid) and d.kink_at(float(t)):
        raise DensityUndefined(f"grid has a slope discontinuity at t={t} and no density column")
    return float(d.density(t))


def hazard(d: Distribution, t: float, cfg: ToleranceConfig = DEFAULT) -> float:
    if float(d.atom_at(t)) > 0:
        raise HazardUndefined(f"atom at t={t}")
    s = float(d.sf(t))
    if s <= cfg.eps_ineq:
        raise HazardUndefined(f"survival {s:.3g} <= eps at t={t}")
    try:
        f = pdf(d, t)
    except DensityUndefined as exc:
        raise HazardUndefined(str(exc)) from None
    return f / s


def moment(d: Distribution, m: int) -> float:
    if int(m) != m or m < 1:
        raise ValueError("moment order must be a positive integer")
    val = d.moment(int(m))
    if not np.isfinite(val):
        raise MomentDiverges(f"moment of order {m} is not finite")
    return val


def quantile(d: Distribution, q: float):
    qq = _arr(q)
    if np.any((qq <= 0) | (qq >= 1)):
        raise ValueError("quantile level must lie strictly between 0 and 1")
    return d.quantile(q)


def stop_loss(d: Distribution, x):
    """Integrated survival ``x -> integral_x^inf (1 - F(t)) dt = E[(X - x)^+]``."""
    return d.stop_loss(x)


def has_negative_mass(d: Distribution, eps: float) -> bool:
    """True when ``P(X < -eps) > eps``."""
    return float(d.cdf(-eps)) > eps


def quantile_points(d: Distribution, n: int, tail_lo: float, tail_hi: float) -> np.ndarray:
    """Evaluation grid resolving both the bulk and the tails of ``d``.

    Union of quantiles at uniformly spaced levels, quantiles at logit-spaced
    levels, uniform points in ``t``, atoms and finite support ends.
    """
    lo_t = float(d.quantile(tail_lo))
    hi_t = float(d.isf(tail_hi))
    n1 = max(n // 2, 2)
    n2 = max(n // 4, 2)
    u = np.linspace(tail_lo, 1 - tail_hi, n1)
    lg = sc.expit(np.linspace(sc.logit(tail_lo), -sc.logit(tail_hi), n2))
    pts = [
        _arr(d.quantile(u[(u > 0) & (u < 1)])),
        _arr(d.quantile(lg[lg <= 0.5])),
        _arr(d.isf(1 - lg[lg > 0.5])),
        np.linspace(lo_t, hi_t, max(n - n1 - n2, 2)),
        d.atoms()[0],
        d.breaks(),
    ]
    out = np.unique(np.concatenate(pts))
    return out[np.isfinite(out)]


# ------------------------------------------------------------------ JSON specs

_FAMILY_FIELDS = {
    "pointmass": (PointMass, ("c",)),
    "bernoulli": (Bernoulli, ("p",)),
    "normal": (Normal, ("mean", "variance")),
    "exponential": (Exponential, ("rate",)),
    "uniform": (Uniform, ("a", "b")),
    "gamma": (Gamma, ("shape", "rate")),
}


def _num(obj, key, kind):
    if key not in obj:
        raise InvalidDistribution(f"{kind}: missing field '{key}'")
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidDistribution(f"{kind}: field '{key}' must be a number")
    return float(v)


def from_json(obj, base_dir: str | Path | None = None) -> Distribution:
    """Build a distribution from its JSON spec (dict or JSON text)."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise InvalidDistribution(f"malformed JSON spec: {exc}") from None
    if not isinstance(obj, dict) or "type" not in obj:
        raise InvalidDistribution("distribution spec must be an object with a 'type' field")
    kind = str(obj["type"]).lower()
    if kind in _FAMILY_FIELDS:
        cls, keys = _FAMILY_FIELDS[kind]
        return cls(*[_num(obj, k, kind) for k in keys])
    if kind == "mixture":
        comps = obj.get("components")
        if not isinstance(comps, list) or not comps:
            raise InvalidDistribution("mixture: 'components' must be a nonempty list of [weight, spec]")
        parsed = []
        for c in comps:
            if not isinstance(c, (list, tuple)) or len(c) != 2:
                raise InvalidDistribution("mixture: each component must be [weight, spec]")
            w = c[0]
            if isinstance(w, bool) or not isinstance(w, (int, float)):
                raise InvalidDistribution("mixture: component weight must be a number")
            parsed.append((float(w), from_json(c[1], base_dir)))
        return Mixture(tuple(parsed))
    if kind == "affine":
        if "base" not in obj:
            raise InvalidDistribution("affine: missing field 'base'")
        return Affine(from_json(obj["base"], base_dir), float(obj.get("shift", 0.0)), float(obj.get("scale", 1.0)))
    if kind == "grid":
        if "file" in obj:
            path = Path(obj["file"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            if not path.exists():
                raise InvalidDistribution(f"grid: file '{obj['file']}' not found")
            return Grid.from_csv(path)
        for key in ("t", "cdf"):
            if key not in obj:
                raise InvalidDistribution(f"grid: missing field '{key}' (or 'file')")
        t = np.asarray(obj["t"], dtype=float)
        return Grid(t, np.asarray(obj["cdf"], dtype=float),
                    np.asarray(obj.get("atom", np.zeros_like(t)), dtype=float),
                    None if obj.get("pdf") is None else np.asarray(obj["pdf"], dtype=float))
    raise InvalidDistribution(f"unknown distribution type '{obj['type']}'")


def to_json(d: Distribution) -> dict:
    return d.to_json()
