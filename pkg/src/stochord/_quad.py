"""Quadrature over the continuous part of a distribution.

Panels are placed at quantiles spaced uniformly in logit(level), so both
tails are resolved down to ``tail``.  Each panel carries a Gauss-Legendre
rule whose weights are renormalised to the exact panel mass.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special as sc

from .distributions import Affine, Distribution, Grid, Mixture, _merge_atoms


@lru_cache(maxsize=16)
def gauss_legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def logit_levels(n: int, tail: float) -> np.ndarray:
    return sc.expit(np.linspace(sc.logit(tail), -sc.logit(tail), n))


def cont_edges(d: Distribution, tail: float, n: int = 65) -> np.ndarray:
    """Sorted panel edges covering the continuous part of ``d``."""
    if isinstance(d, Mixture):
        parts = [cont_edges(c, tail, n) for w, c in d.components if w > 0]
        parts = [p for p in parts if p.size]
        return np.unique(np.concatenate(parts)) if parts else np.empty(0)
    if isinstance(d, Affine):
        e = cont_edges(d.base, tail, n)
        return np.sort(d.shift + d.scale * e)
    if isinstance(d, Grid):
        if d.atom_mass >= 1.0 - 1e-15:
            return np.empty(0)
        return d.points.copy()
    if not d.is_continuous:
        # purely atomic families (point mass, Bernoulli)
        if d.atom_mass >= 1.0 - 1e-15:
            return np.empty(0)
    lev = logit_levels(n, tail)
    lo = lev[lev <= 0.5]
    hi = lev[lev > 0.5]
    e = np.concatenate([np.asarray(d.quantile(lo), float), np.asarray(d.isf(1.0 - hi), float), d.breaks()])
    e = np.unique(e[np.isfinite(e)])
    a, b = float(d.quantile(tail)), float(d.isf(tail))
    return e[(e >= a) & (e <= b)]


def _panel_mass(d: Distribution, a, b):
    """Continuous mass of ``d`` in ``[a, b]``, using the tail that keeps precision."""
    mid = 0.5 * (a + b)
    lower = np.asarray(d.cont_cdf(b), float) - np.asarray(d.cont_cdf(a), float)
    upper = np.asarray(d.cont_sf(a), float) - np.asarray(d.cont_sf(b), float)
    use_upper = np.asarray(d.cont_sf(mid), float) < np.asarray(d.cont_cdf(mid), float)
    return np.maximum(np.where(use_upper, upper, lower), 0.0)


def panel_rule(d: Distribution, edges: np.ndarray, n_gl: int = 8, renormalise: bool = True):
    """Nodes and weights for ``integral g dF_c`` on panels between ``edges``.

    ``edges`` may be 1-D or batched (leading axes broadcast); the rule is
    returned with shape ``edges.shape[:-1] + (panels, n_gl)``.
    """
    x, w = gauss_legendre(n_gl)
    a = edges[..., :-1]
    b = edges[..., 1:]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b))[..., None] + half[..., None] * x
    with np.errstate(invalid="ignore"):
        raw = half[..., None] * w * np.asarray(d.density(nodes), float)
    # nodes rounded onto a density pole: the panel is too thin to carry mass
    raw = np.where((half[..., None] > 0) & np.isfinite(raw), raw, 0.0)
    if renormalise and not isinstance(d, Grid):
        mass = _panel_mass(d, a, b)
        tot = raw.sum(axis=-1)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            fac = np.where(tot > 0, mass / tot, 0.0)
        raw = raw * fac[..., None]
    return nodes, raw


def cont_rule(d: Distribution, tail: float, n_panels: int = 65, n_gl: int = 8):
    """Flat nodes/weights for the continuous part of ``d``."""
    e = cont_edges(d, tail, n_panels)
    if e.size < 2:
        return np.empty(0), np.empty(0)
    if isinstance(d, Mixture):
        nodes, weights = [], []
        for wc, c in d.components:
            if wc <= 0:
                continue
            n_, w_ = cont_rule(c, tail, n_panels, n_gl)
            nodes.append(n_)
            weights.append(wc * w_)
        return np.concatenate(nodes), np.concatenate(weights)
    nodes, w = panel_rule(d, e, n_gl)
    return nodes.ravel(), w.ravel()


def expectation(d: Distribution, g, tail: float = 1e-15, n_panels: int = 65, n_gl: int = 8):
    """``E[g(X)]`` with the atoms summed exactly and the continuous part by quadrature."""
    locs, masses = d.atoms()
    nodes, w = cont_rule(d, tail, n_panels, n_gl)
    total = np.sum(masses * g(locs)) if locs.size else 0.0
    if nodes.size:
        total = total + np.sum(w * g(nodes))
    return float(total)


def laplace_values(d: Distribution, s: np.ndarray, tail: float = 1e-15, n_panels: int = 97, n_gl: int = 10):
    """``L(s) = E[exp(-sX)]`` by quadrature, vectorised over ``s``."""
    s = np.atleast_1d(np.asarray(s, float))
    locs, masses = d.atoms()
    nodes, w = cont_rule(d, tail, n_panels, n_gl)
    out = np.zeros(s.shape)
    if locs.size:
        out += np.exp(-np.outer(s, locs)) @ masses
    if nodes.size:
        out += np.exp(-np.outer(s, nodes)) @ w
    return out


# -------------------------------------------------------------- convolution


def _resolution_points(d: Distribution, tail: float, n: int = 25) -> np.ndarray:
    """Points where ``F_c`` of ``d`` changes; used as moving panel edges."""
    e = cont_edges(d, tail, n)
    if isinstance(d, Grid) and e.size > n:
        idx = np.unique(np.linspace(0, e.size - 1, n).round().astype(int))
        e = e[idx]
    return np.unique(np.concatenate([e, d.breaks()]))


def _atomic_parts(locs, masses, t):
    """Atomic CDF (right-continuous) and atomic survival at ``t``."""
    if locs.size == 0:
        z = np.zeros(t.shape)
        return z, z
    le = (locs[None, :] <= t[:, None]) @ masses
    gt = (locs[None, :] > t[:, None]) @ masses
    return le, gt


def convolve_sum(x: Distribution, z: Distribution, t: np.ndarray, tail: float, n_gl: int = 8, chunk: int = 128):
    """CDF, survival and density of ``X + Z`` at ``t`` (independent operands).

    Returns ``(F, S, f, atom_locs, atom_masses)``.
    """
    t = np.asarray(t, float)
    # integrate over the operand with the cheaper measure
    if isinstance(z, Grid) and not isinstance(x, Grid):
        x, z = z, x
    ax, px = x.atoms()
    az, pz = z.atoms()
    Ez = cont_edges(z, tail)
    Px = _resolution_points(x, tail)
    xc_mass = 1.0 - px.sum()
    zc_mass = 1.0 - pz.sum()
    F = np.zeros(t.shape)
    S = np.zeros(t.shape)
    f = np.zeros(t.shape)
    gl = 4 if isinstance(z, Grid) else n_gl
    if Ez.size >= 2 and xc_mass > 0 and zc_mass > 0:
        for lo in range(0, t.size, chunk):
            tc = t[lo:lo + chunk]
            mv = np.clip(tc[:, None] - Px[None, :], Ez[0], Ez[-1])
            edges = np.sort(np.concatenate([np.broadcast_to(Ez, (tc.size, Ez.size)), mv], axis=1), axis=1)
            nodes, w = panel_rule(z, edges, gl)
            arg = tc[:, None, None] - nodes
            F[lo:lo + chunk] = np.sum(w * x.cont_cdf(arg), axis=(1, 2))
            S[lo:lo + chunk] = np.sum(w * x.cont_sf(arg), axis=(1, 2))
            # zero-width panels can sit on a density singularity: 0 * inf -> 0
            with np.errstate(invalid="ignore"):
                f[lo:lo + chunk] = np.sum(np.where(w > 0, w * np.asarray(x.density(arg), float), 0.0), axis=(1, 2))
    for b, q in zip(az, pz):
        if xc_mass > 0:
            F += q * x.cont_cdf(t - b)
            S += q * x.cont_sf(t - b)
            f += q * np.asarray(x.density(t - b), float)
    for a, p in zip(ax, px):
        if zc_mass > 0:
            F += p * z.cont_cdf(t - a)
            S += p * z.cont_sf(t - a)
            f += p * np.asarray(z.density(t - a), float)
    locs, masses = _merge_atoms(np.add.outer(ax, az).ravel(), np.multiply.outer(px, pz).ravel())
    Fa, Sa = _atomic_parts(locs, masses, t)
    return F + Fa, S + Sa, f, locs, masses


def convolve_product(x: Distribution, z: Distribution, t: np.ndarray, tail: float, n_gl: int = 8, chunk: int = 128):
    """CDF, survival and density of ``X * Z`` at ``t`` for ``Z >= 0``."""
    t = np.asarray(t, float)
    if isinstance(z, Grid) and not isinstance(x, Grid) and x.is_nonnegative():
        x, z = z, x
    ax, px = x.atoms()
    az, pz = z.atoms()
    Ez = cont_edges(z, tail)
    Ez = Ez[Ez > 0] if Ez.size else Ez
    Px = _resolution_points(x, tail)
    Px = Px[Px != 0]
    xc_mass = 1.0 - px.sum()
    zc_mass = 1.0 - pz.sum()
    F = np.zeros(t.shape)
    S = np.zeros(t.shape)
    f = np.zeros(t.shape)
    gl = 4 if isinstance(z, Grid) else n_gl
    if Ez.size >= 2 and xc_mass > 0 and zc_mass > 0:
        for lo in range(0, t.size, chunk):
            tc = t[lo:lo + chunk]
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                mv = tc[:, None] / Px[None, :]
            mv = np.where(np.isfinite(mv) & (mv > 0), mv, Ez[0])
            mv = np.clip(mv, Ez[0], Ez[-1])
            edges = np.sort(np.concatenate([np.broadcast_to(Ez, (tc.size, Ez.size)), mv], axis=1), axis=1)
            nodes, w = panel_rule(z, edges, gl)
            arg = tc[:, None, None] / nodes
            F[lo:lo + chunk] = np.sum(w * x.cont_cdf(arg), axis=(1, 2))
            S[lo:lo + chunk] = np.sum(w * x.cont_sf(arg), axis=(1, 2))
            with np.errstate(invalid="ignore"):
                f[lo:lo + chunk] = np.sum(np.where(w > 0, w * np.asarray(x.density(arg), float) / nodes, 0.0),
                                          axis=(1, 2))
    extra_locs, extra_mass = [], []
    for b, q in zip(az, pz):
        if xc_mass <= 0:
            continue
        if b > 0:
            F += q * x.cont_cdf(t / b)
            S += q * x.cont_sf(t / b)
            f += q * np.asarray(x.density(t / b), float) / b
        else:
            extra_locs.append(0.0)
            extra_mass.append(q * xc_mass)
    for a, p in zip(ax, px):
        if zc_mass <= 0:
            continue
        if a > 0:
            F += p * z.cont_cdf(t / a)
            S += p * z.cont_sf(t / a)
            f += p * np.asarray(z.density(t / a), float) / a
        elif a < 0:
            F += p * z.cont_sf(t / a)
            S += p * z.cont_cdf(t / a)
            f += p * np.asarray(z.density(t / a), float) / abs(a)
        else:
            extra_locs.append(0.0)
            extra_mass.append(p * zc_mass)
    locs, masses = _merge_atoms(
        np.concatenate([np.multiply.outer(ax, az).ravel(), extra_locs]),
        np.concatenate([np.multiply.outer(px, pz).ravel(), extra_mass]),
    )
    Fa, Sa = _atomic_parts(locs, masses, t)
    return F + Fa, S + Sa, f, locs, masses
