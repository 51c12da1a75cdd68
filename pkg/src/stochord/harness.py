"""Experiments: order preservation, axioms and the worked counterexamples.

Every experiment is premise-gated: ``X <= Y`` is checked first and the
conclusion only counts as evidence when the premise holds.  A Refuted outcome
is re-checked at four times the grid resolution before it is reported.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from . import combinators as cb
from .config import DEFAULT, ToleranceConfig
from .distributions import (
    Bernoulli,
    Distribution,
    Exponential,
    Gamma,
    Grid,
    Normal,
    PointMass,
    Uniform,
    has_negative_mass,
)
from .errors import NegativeScaler, NotNonnegative
from .orders import OrderKind, check, check_st, evaluation_points
from .transforms import derivative, phi_ratio
from .verdict import OrderVerdict, Status, Witness, holds, inconclusive, violated


class PropertyKind(str, Enum):
    ADDITIVITY = "Additivity"
    MULTIPLICATIVITY = "Multiplicativity"
    REFLEXIVITY = "Reflexivity"
    ANTISYMMETRY = "Antisymmetry"
    TRANSITIVITY = "Transitivity"
    MONOTONE_MAP = "MonotoneMapPreservation"


class Outcome(str, Enum):
    CONFIRMED = "Confirmed"
    REFUTED = "Refuted"
    SKIPPED = "Skipped"
    INCONCLUSIVE = "Inconclusive"


def _describe(d) -> object:
    if isinstance(d, Distribution):
        if isinstance(d, Grid):
            return {"type": "grid", "points": int(d.points.size)}
        return d.to_json()
    return d


@dataclass(frozen=True)
class PropertyReport:
    property: PropertyKind
    order: OrderKind
    triple: tuple
    premise_verdict: OrderVerdict | None
    conclusion_verdict: OrderVerdict | None
    outcome: Outcome
    note: str = ""

    def to_json(self) -> dict:
        out = {
            "property": self.property.value,
            "order": self.order.name,
            "triple": [_describe(d) for d in self.triple],
            "premise": self.premise_verdict.to_json() if self.premise_verdict else None,
            "conclusion": self.conclusion_verdict.to_json() if self.conclusion_verdict else None,
            "outcome": self.outcome.value,
        }
        if self.note:
            out["note"] = self.note
        return out


def _outcome(premise: OrderVerdict, conclusion: OrderVerdict) -> Outcome:
    if premise.status is not Status.HOLDS:
        return Outcome.SKIPPED
    if conclusion.status is Status.HOLDS:
        return Outcome.CONFIRMED
    if conclusion.status is Status.VIOLATED:
        return Outcome.REFUTED
    return Outcome.INCONCLUSIVE


def _safe_check(order, x, y, cfg) -> OrderVerdict:
    try:
        return check(order, x, y, cfg)
    except NotNonnegative as exc:
        return inconclusive(float("nan"), f"not applicable: {exc}")


def _finer(cfg: ToleranceConfig) -> ToleranceConfig:
    return cfg.replace(grid_size=4 * cfg.grid_size)


def _preserve(prop: PropertyKind, order, x, y, z, cfg: ToleranceConfig, combine) -> PropertyReport:
    order = OrderKind.parse(order)
    premise = _safe_check(order, x, y, cfg)
    if premise.status is not Status.HOLDS:
        return PropertyReport(prop, order, (x, y, z), premise, None, Outcome.SKIPPED, "premise does not hold")
    xz, yz = combine(x, z, cfg), combine(y, z, cfg)
    concl = _safe_check(order, xz, yz, cfg)
    note = ""
    if concl.status is Status.VIOLATED:
        fine = _finer(cfg)
        both_closed = not isinstance(xz, Grid) and not isinstance(yz, Grid)
        xz2, yz2 = (xz, yz) if both_closed else (combine(x, z, fine), combine(y, z, fine))
        again = _safe_check(order, xz2, yz2, fine)
        if again.status is not Status.VIOLATED:
            note = "violation did not persist at 4x grid resolution"
            concl = inconclusive(concl.margin, note, concl.label)
        else:
            note = "violation re-verified at 4x grid resolution"
    return PropertyReport(prop, order, (x, y, z), premise, concl, _outcome(premise, concl), note)


@lru_cache(maxsize=512)
def _sum_cached(x, z, cfg):
    return cb.sum_of_independent(x, z, cfg)


@lru_cache(maxsize=512)
def _prod_cached(x, z, cfg):
    return cb.product_of_independent(x, z, cfg)



def verify_additivity(order, x: Distribution, y: Distribution, z: Distribution,
                      cfg: ToleranceConfig = DEFAULT) -> PropertyReport:
    """Does ``X <= Y`` carry over to ``X + Z <= Y + Z`` for independent Z?"""
    return _preserve(PropertyKind.ADDITIVITY, order, x, y, z, cfg, _sum_cached)


def verify_multiplicativity(order, x: Distribution, y: Distribution, z: Distribution,
                            cfg: ToleranceConfig = DEFAULT) -> PropertyReport:
    """Does ``X <= Y`` carry over to ``XZ <= YZ`` for independent nonnegative Z?"""
    if has_negative_mass(z, cfg.eps_ineq):
        raise NegativeScaler("multiplicativity needs a nonnegative Z")
    return _preserve(PropertyKind.MULTIPLICATIVITY, order, x, y, z, cfg, _prod_cached)


def verify_monotone_map(x: Distribution, y: Distribution, fn: Callable,
                        cfg: ToleranceConfig = DEFAULT, name: str = "phi") -> PropertyReport:
    """``X <=st Y`` implies ``phi(X) <=st phi(Y)`` for increasing ``phi``."""
    premise = check_st(x, y, cfg)
    if premise.status is not Status.HOLDS:
        return PropertyReport(PropertyKind.MONOTONE_MAP, OrderKind.ST, (x, y, name), premise, None,
                              Outcome.SKIPPED, "premise does not hold")
    gx, gy = cb.monotone_map(x, fn, cfg), cb.monotone_map(y, fn, cfg)
    concl = check_st(gx, gy, cfg)
    if concl.status is Status.VIOLATED:
        fine = _finer(cfg)
        again = check_st(cb.monotone_map(x, fn, fine), cb.monotone_map(y, fn, fine), fine)
        if again.status is not Status.VIOLATED:
            concl = inconclusive(concl.margin, "violation did not persist at 4x grid resolution")
    return PropertyReport(PropertyKind.MONOTONE_MAP, OrderKind.ST, (x, y, name), premise, concl,
                          _outcome(premise, concl))


# ------------------------------------------------------------------ axioms


def _applicable(order: OrderKind, d: Distribution, cfg: ToleranceConfig) -> bool:
    if order.needs_nonnegative and has_negative_mass(d, cfg.eps_ineq):
        return False
    if order is OrderKind.HR and not d.is_continuous:
        return False
    return True


def _functional_gap(order: OrderKind, x, y, cfg) -> tuple[float, object, float, float]:
    """Sup distance between the functionals that define ``order``."""
    if order in (OrderKind.LT, OrderKind.CONV, OrderKind.MOMENT):
        from .transforms import laplace

        s = cfg.s_array
        a, b = laplace(x)(s), laplace(y)(s)
        where = s
    elif order is OrderKind.ICX:
        where = evaluation_points(x, y, cfg)
        a, b = np.asarray(x.stop_loss(where)), np.asarray(y.stop_loss(where))
    else:
        where = evaluation_points(x, y, cfg)
        a, b = np.asarray(x.cdf(where)), np.asarray(y.cdf(where))
    i = int(np.argmax(np.abs(a - b)))
    return float(abs(a[i] - b[i])), float(where[i]), float(a[i]), float(b[i])


def verify_axioms(order, pool: list, cfg: ToleranceConfig = DEFAULT) -> list[PropertyReport]:
    """Reflexivity, antisymmetry (surrogate) and transitivity over ``pool``."""
    order = OrderKind.parse(order)
    if not pool:
        raise ValueError("pool must be nonempty")
    items = [d for d in pool if _applicable(order, d, cfg)]
    reports: list[PropertyReport] = []
    n = len(items)
    for d in items:
        v = check(order, d, d, cfg)
        out = {Status.HOLDS: Outcome.CONFIRMED, Status.VIOLATED: Outcome.REFUTED}.get(v.status, Outcome.INCONCLUSIVE)
        reports.append(PropertyReport(PropertyKind.REFLEXIVITY, order, (d,), None, v, out))
    rel = {(i, j): check(order, items[i], items[j], cfg) for i in range(n) for j in range(n) if i != j}
    if order is not OrderKind.MOMENT:
        for i, j in itertools.combinations(range(n), 2):
            if rel[i, j].holds and rel[j, i].holds:
                gap, loc, a, b = _functional_gap(order, items[i], items[j], cfg)
                bound = 2 * cfg.eps_ineq
                concl = holds(bound - gap) if gap <= bound else violated(bound - gap, Witness(loc, a, b))
                reports.append(PropertyReport(PropertyKind.ANTISYMMETRY, order, (items[i], items[j]), rel[i, j], concl,
                                              Outcome.CONFIRMED if concl.holds else Outcome.REFUTED))
    for i, j, k in itertools.permutations(range(n), 3):
        if not (rel[i, j].holds and rel[j, k].holds):
            continue
        concl = rel[i, k]
        premise = holds(min(rel[i, j].margin, rel[j, k].margin))
        if concl.violated:
            again = check(order, items[i], items[k], _finer(cfg))
            if not again.violated:
                concl = inconclusive(concl.margin, "violation did not persist at 4x grid resolution")
        reports.append(PropertyReport(PropertyKind.TRANSITIVITY, order, (items[i], items[j], items[k]), premise, concl,
                                      _outcome(premise, concl)))
    return reports


def binomial_moment_oracle(x: Distribution, z: Distribution, m: int) -> float:
    """``E[(X+Z)^m]`` from the operands' own moments via the binomial theorem."""
    from math import comb

    mx = [1.0] + [x.moment(k) for k in range(1, m + 1)]
    mz = [1.0] + [z.moment(k) for k in range(1, m + 1)]
    return float(sum(comb(m, k) * mx[k] * mz[m - k] for k in range(m + 1)))


# --------------------------------------------------------- worked examples


@dataclass
class Remark2Result:
    report: PropertyReport
    premise: OrderVerdict
    conclusion: OrderVerdict
    reverse: OrderVerdict
    curves: dict
    reproduced: bool

    def to_json(self) -> dict:
        return {
            "reproduced": self.reproduced,
            "report": self.report.to_json(),
            "reverse_check": {"x": "N(1,1)", "y": "PointMass(0)", "verdict": self.reverse.to_json()},
        }


def remark2_distributions():
    x, y = Normal(0.0, 0.5), Normal(1.0, 0.5)
    # Z = -X is dependent on X: X+Z = 0 and Y+Z = Y-X, whose law is N(1, 1)
    diff = cb.sum_of_independent(y, cb.negate(x))
    return x, y, PointMass(0.0), diff


def figure_curves(dists: dict, t: np.ndarray) -> dict:
    out = {"t": np.asarray(t, float)}
    for name, d in dists.items():
        out[name] = np.asarray(d.cdf(t), float)
    return out


def reproduce_remark2(cfg: ToleranceConfig = DEFAULT, t=None) -> Remark2Result:
    """Independence cannot be dropped from ST additivity: Z = -X breaks it."""
    x, y, zero, diff = remark2_distributions()
    premise = check_st(x, y, cfg)
    concl = check_st(zero, diff, cfg)
    reverse = check_st(diff, zero, cfg)
    report = PropertyReport(PropertyKind.ADDITIVITY, OrderKind.ST, (x, y, "Z = -X (dependent)"), premise, concl,
                            _outcome(premise, concl), "X+Z = 0 and Y+Z ~ N(1,1) are not ST-comparable")
    t = np.round(np.arange(-3.0, 4.0 + 1e-9, 0.01), 10) if t is None else t
    curves = figure_curves({"F_X": x, "F_Y": y, "F_0": zero, "F_Y-X": diff}, t)
    ok = premise.holds and concl.violated and reverse.violated
    return Remark2Result(report, premise, concl, reverse, curves, ok)


@dataclass
class Remark5Result:
    report: PropertyReport
    phi_xy: tuple
    phi_xzyz: tuple
    coefficient_error: float
    dphi_half: float
    dphi_two: float
    reproduced: bool

    def to_json(self) -> dict:
        return {
            "reproduced": self.reproduced,
            "phi_xy": {"num": self.phi_xy[0], "den": self.phi_xy[1]},
            "phi_xz_yz": {"num": self.phi_xzyz[0], "den": self.phi_xzyz[1]},
            "coefficient_error": self.coefficient_error,
            "dphi(0.5)": self.dphi_half,
            "dphi(2)": self.dphi_two,
            "report": self.report.to_json(),
        }


def reproduce_remark5(cfg: ToleranceConfig = DEFAULT) -> Remark5Result:
    """Exp(1) <=conv Exp(1/2), but multiplying both by Bernoulli(1/2) breaks it."""
    x, y, z = Exponential(1.0), Exponential(0.5), Bernoulli(0.5)
    r = phi_ratio(x, y)
    xz, yz = cb.product_of_independent(x, z, cfg), cb.product_of_independent(y, z, cfg)
    r2 = phi_ratio(xz, yz)
    num, den = r2.coefficients()
    target = ([1.0, 2.0, 1.0], [1.0, 2.5, 1.0])
    err = max(abs(a - b) for a, b in zip(num + den, target[0] + target[1])) if (len(num), len(den)) == (3, 3) else np.inf
    d1 = derivative(r2, 1, cfg=cfg)
    report = verify_multiplicativity(OrderKind.CONV, x, y, z, cfg)
    c = report.conclusion_verdict
    wit_ok = (c is not None and c.violated and c.witness.location["n"] == 1 and 1 < c.witness.location["s"] <= 1000)
    ok = report.premise_verdict.holds and err <= 1e-10 and wit_ok
    return Remark5Result(report, r.coefficients(), (num, den), float(err), float(d1(0.5)), float(d1(2.0)), bool(ok))


# ------------------------------------------------------------------ preservation table

PUBLISHED_TABLE = {
    OrderKind.ST: ("Yes", "Yes"),
    OrderKind.HR: ("SpecialCaseYes", "SpecialCaseYes"),
    OrderKind.MOMENT: ("Yes", "Yes"),
    OrderKind.LT: ("Yes", "Yes"),
    OrderKind.CONV: ("Yes", "No"),
    OrderKind.ICX: ("Yes", "SpecialCaseYes"),
}

SPECIAL_CASE_CELLS = {(OrderKind.HR, "additivity"), (OrderKind.HR, "multiplicativity"), (OrderKind.ICX, "multiplicativity")}

DEFAULT_FAMILIES = {
    "normal": {"mean": [-2.0, 2.0], "variance": [0.2, 2.0], "shift": [0.0, 1.5]},
    "exponential": {"rate": [0.25, 4.0]},
    "gamma": {"shape": [1, 4], "rate": [0.25, 4.0]},
    "bernoulli": {"p": [0.05, 0.95]},
    "pointmass": {"c": [0.0, 3.0]},
    "uniform": {"low": [0.0, 1.0], "width": [0.5, 3.0]},
}

_PAIR_FAMILIES = {
    OrderKind.ST: ("normal", "exponential", "gamma", "bernoulli", "pointmass"),
    OrderKind.HR: ("normal", "exponential", "gamma"),
    OrderKind.MOMENT: ("exponential", "gamma", "bernoulli", "pointmass"),
    OrderKind.LT: ("exponential", "gamma", "bernoulli", "pointmass"),
    OrderKind.CONV: ("exponential", "gamma", "pointmass"),
    OrderKind.ICX: ("normal", "exponential", "gamma", "bernoulli", "pointmass"),
}

_Z_FAMILIES = {
    "additivity": {
        OrderKind.ST: ("normal", "exponential", "gamma", "bernoulli", "pointmass"),
        # the proved special case: Z with increasing failure rate
        OrderKind.HR: ("normal", "exponential", "gamma", "uniform"),
        OrderKind.MOMENT: ("exponential", "gamma", "bernoulli", "pointmass"),
        OrderKind.LT: ("exponential", "gamma", "bernoulli", "pointmass"),
        OrderKind.CONV: ("exponential", "gamma", "bernoulli", "pointmass"),
        OrderKind.ICX: ("normal", "exponential", "gamma", "bernoulli", "pointmass"),
    },
    "multiplicativity": {
        OrderKind.ST: ("bernoulli", "pointmass", "exponential", "gamma"),
        # positive Z whose logarithm has a log-concave density
        OrderKind.HR: ("pointmass", "exponential", "gamma", "uniform"),
        OrderKind.MOMENT: ("bernoulli", "pointmass"),
        OrderKind.LT: ("bernoulli", "pointmass", "exponential", "gamma"),
        OrderKind.CONV: ("bernoulli", "pointmass", "exponential", "gamma"),
        # the proved special case: 0 <=st Z
        OrderKind.ICX: ("bernoulli", "pointmass", "exponential", "gamma"),
    },
}


@dataclass(frozen=True)
class SuiteSpec:
    """Seeded description of the preservation table experiment."""

    orders: tuple = tuple(OrderKind)
    properties: tuple = ("additivity", "multiplicativity")
    families: dict = field(default_factory=lambda: json.loads(json.dumps(DEFAULT_FAMILIES)))
    count: int = 100
    seed: int = 42
    grid_budget: int = 2
    hr_ifr_only: bool = True
    icx_nonnegative_z: bool = True

    @classmethod
    def from_json(cls, obj) -> SuiteSpec:
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict):
            raise ValueError("suite spec must be a JSON object")
        kw = {}
        if "orders" in obj:
            kw["orders"] = tuple(OrderKind.parse(o) for o in obj["orders"])
        if "property" in obj or "properties" in obj:
            props = obj.get("properties", obj.get("property"))
            props = [props] if isinstance(props, str) else list(props)
            for p in props:
                if p not in ("additivity", "multiplicativity"):
                    raise ValueError(f"unknown property '{p}'")
            kw["properties"] = tuple(props)
        if "families" in obj:
            fam = json.loads(json.dumps(DEFAULT_FAMILIES))
            for k, v in obj["families"].items():
                if k not in fam:
                    raise ValueError(f"unknown family '{k}'")
                fam[k].update(v)
            kw["families"] = fam
        for k in ("count", "seed", "grid_budget"):
            if k in obj:
                kw[k] = int(obj[k])
        for k in ("hr_ifr_only", "icx_nonnegative_z"):
            if k in obj:
                kw[k] = bool(obj[k])
        return cls(**kw)


def _u(rng, lo_hi):
    lo, hi = lo_hi
    return float(round(rng.uniform(lo, hi), 6))


def draw_pair(rng, family: str, fam: dict):
    """An ordered pair ``X <= Y`` of the given family (constructed, not filtered)."""
    if family == "normal":
        r = fam["normal"]
        mu, var, d = _u(rng, r["mean"]), _u(rng, r["variance"]), _u(rng, r["shift"])
        return Normal(mu, var), Normal(round(mu + d, 6), var)
    if family == "exponential":
        a, b = sorted((_u(rng, fam["exponential"]["rate"]), _u(rng, fam["exponential"]["rate"])))
        return Exponential(b), Exponential(a)
    if family == "gamma":
        r = fam["gamma"]
        k = int(rng.integers(int(r["shape"][0]), int(r["shape"][1]) + 1))
        a, b = sorted((_u(rng, r["rate"]), _u(rng, r["rate"])))
        return Gamma(k, b), Gamma(k, a)
    if family == "bernoulli":
        p, q = sorted((_u(rng, fam["bernoulli"]["p"]), _u(rng, fam["bernoulli"]["p"])))
        return Bernoulli(p), Bernoulli(q)
    if family == "pointmass":
        a, b = sorted((_u(rng, fam["pointmass"]["c"]), _u(rng, fam["pointmass"]["c"])))
        return PointMass(a), PointMass(b)
    raise ValueError(f"unknown family '{family}'")


def draw_z(rng, family: str, fam: dict, positive: bool = False):
    if family == "normal":
        r = fam["normal"]
        return Normal(_u(rng, r["mean"]), _u(rng, r["variance"]))
    if family == "exponential":
        return Exponential(_u(rng, fam["exponential"]["rate"]))
    if family == "gamma":
        r = fam["gamma"]
        return Gamma(int(rng.integers(int(r["shape"][0]), int(r["shape"][1]) + 1)), _u(rng, r["rate"]))
    if family == "bernoulli":
        return Bernoulli(_u(rng, fam["bernoulli"]["p"]))
    if family == "uniform":
        lo = _u(rng, fam["uniform"]["low"])
        return Uniform(lo, round(lo + _u(rng, fam["uniform"]["width"]), 6))
    if family == "pointmass":
        c = _u(rng, fam["pointmass"]["c"])
        return PointMass(max(c, 0.05) if positive else c)
    raise ValueError(f"unknown family '{family}'")


def _needs_grid(prop: str, x, y, z) -> bool:
    fn = cb._sum_closed if prop == "additivity" else cb._product_closed
    return fn(x, z) is None or fn(y, z) is None


def suite_triples(order: OrderKind, prop: str, spec: SuiteSpec, rng) -> list:
    """``spec.count`` premise-satisfying triples for one preservation table cell."""
    pairs = _PAIR_FAMILIES[order]
    zs = _Z_FAMILIES[prop][order]
    if not spec.hr_ifr_only and order is OrderKind.HR and prop == "additivity":
        zs = ("normal", "exponential", "gamma", "uniform", "bernoulli", "pointmass")
    out = []
    grids = 0
    budget = 0 if (order is OrderKind.MOMENT and prop == "multiplicativity") else spec.grid_budget
    while len(out) < spec.count:
        x, y = draw_pair(rng, pairs[int(rng.integers(len(pairs)))], spec.families)
        z = draw_z(rng, zs[int(rng.integers(len(zs)))], spec.families, positive=order is OrderKind.HR)
        if _needs_grid(prop, x, y, z):
            if grids >= budget:
                continue
            grids += 1
        out.append((x, y, z))
    return out


@dataclass
class Table1Result:
    matrix: dict
    counts: dict
    reports: dict
    evidence: dict

    @property
    def matches_published(self) -> bool:
        for order, (add, mul) in PUBLISHED_TABLE.items():
            row = self.matrix.get(order)
            if row is None:
                continue
            if row.get("additivity", add) != add or row.get("multiplicativity", mul) != mul:
                return False
        return True

    def to_json(self, include_reports: bool = False) -> dict:
        out = {
            "matrix": {o.name: dict(v) for o, v in self.matrix.items()},
            "published": {o.name: {"additivity": a, "multiplicativity": m} for o, (a, m) in PUBLISHED_TABLE.items()},
            "matches_published": self.matches_published,
            "counts": {f"{o.name}/{p}": c for (o, p), c in self.counts.items()},
            "evidence": {f"{o.name}/{p}": e for (o, p), e in self.evidence.items()},
        }
        if include_reports:
            out["reports"] = {f"{o.name}/{p}": [r.to_json() for r in rs] for (o, p), rs in self.reports.items()}
        return out


def _cell_label(order: OrderKind, prop: str, counts: dict) -> str:
    if counts["Refuted"] > 0:
        return "No"
    return "SpecialCaseYes" if (order, prop) in SPECIAL_CASE_CELLS else "Yes"


def reproduce_table1(spec: SuiteSpec | None = None, cfg: ToleranceConfig = DEFAULT) -> Table1Result:
    """Run every (order, property) cell of the preservation table."""
    spec = SuiteSpec() if spec is None else spec
    matrix: dict = {}
    counts: dict = {}
    reports: dict = {}
    evidence: dict = {}
    for oi, order in enumerate(spec.orders):
        for pi, prop in enumerate(spec.properties):
            rng = np.random.default_rng([spec.seed, oi, pi])
            triples = suite_triples(order, prop, spec, rng)
            if order is OrderKind.CONV and prop == "multiplicativity":
                triples = [(Exponential(1.0), Exponential(0.5), Bernoulli(0.5))] + triples[:-1]
            fn = verify_additivity if prop == "additivity" else verify_multiplicativity
            rs = [fn(order, x, y, z, cfg) for x, y, z in triples]
            c = {o.value: 0 for o in Outcome}
            for r in rs:
                c[r.outcome.value] += 1
            matrix.setdefault(order, {})[prop] = _cell_label(order, prop, c)
            counts[order, prop] = c
            reports[order, prop] = rs
            refuted = [r for r in rs if r.outcome is Outcome.REFUTED]
            evidence[order, prop] = [r.to_json() for r in refuted[:3]]
    return Table1Result(matrix, counts, reports, evidence)
