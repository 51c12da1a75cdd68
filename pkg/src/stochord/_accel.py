"""Hot kernels for tabulated (grid) distributions.

Each kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version with identical semantics.  Set ``STOCHORD_DISABLE_NUMBA=1`` (or run
without numba installed) to use the numpy path.

Grid layout shared by all kernels:
  ``pts``   strictly increasing knots
  ``F``     right-continuous CDF values at the knots
  ``L``     left limits at the knots (``F - atom_mass``)
  ``dens``  density of the continuous part at the knots
  ``herm``  per-segment flag: cubic Hermite (True) or linear (False)
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("STOCHORD_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:  # pragma: no cover - exercised implicitly
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


# ---------------------------------------------------------------- numpy path


def grid_eval_np(tq, pts, F, L, dens, herm):
    tq = np.asarray(tq, dtype=float)
    n = pts.size
    i = np.searchsorted(pts, tq, side="right") - 1
    out_F = np.zeros(tq.shape)
    out_d = np.zeros(tq.shape)
    right = i >= n - 1
    out_F[right] = 1.0
    at_last = tq == pts[-1]
    out_d[at_last] = dens[-1]
    inner = (i >= 0) & ~right
    if np.any(inner):
        j = i[inner]
        t = tq[inner]
        a = pts[j]
        h = pts[j + 1] - a
        u = (t - a) / h
        y0 = F[j]
        y1 = L[j + 1]
        m0 = dens[j] * h
        m1 = dens[j + 1] * h
        u2 = u * u
        u3 = u2 * u
        Fh = (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1
        dh = ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * y1 + (3 * u2 - 2 * u) * m1) / h
        Fl = y0 + u * (y1 - y0)
        dl = (y1 - y0) / h
        hm = herm[j]
        Fv = np.where(hm, Fh, Fl)
        out_F[inner] = np.minimum(np.maximum(Fv, y0), y1)
        out_d[inner] = np.maximum(np.where(hm, dh, dl), 0.0)
    return out_F, out_d


def _segment_int_F(u, y0, y1, m0, m1, hm):
    """Integral of the interpolated CDF over ``[u, 1]`` of a unit segment."""
    u2 = u * u
    u3 = u2 * u
    u4 = u3 * u
    # antiderivatives of the Hermite basis, evaluated at 1 minus at u
    H00 = 0.5 - (u4 / 2 - u3 + u)
    H10 = (1 / 12) - (u4 / 4 - 2 * u3 / 3 + u2 / 2)
    H01 = 0.5 - (-u4 / 2 + u3)
    H11 = (-1 / 12) - (u4 / 4 - u3 / 3)
    herm_val = H00 * y0 + H10 * m0 + H01 * y1 + H11 * m1
    lin_val = (1 - u) * y0 + (1 - u2) / 2 * (y1 - y0)
    return np.where(hm, herm_val, lin_val)


def grid_stop_loss_np(xq, pts, F, L, dens, herm):
    xq = np.asarray(xq, dtype=float)
    h = np.diff(pts)
    y0 = F[:-1]
    y1 = L[1:]
    m0 = dens[:-1] * h
    m1 = dens[1:] * h
    seg_F = h * _segment_int_F(np.zeros_like(h), y0, y1, m0, m1, herm)
    seg_S = h - seg_F
    # tail[i] = integral of survival from pts[i] to pts[-1]
    tail = np.concatenate([np.cumsum(seg_S[::-1])[::-1], [0.0]])
    i = np.searchsorted(pts, xq, side="right") - 1
    out = np.zeros(xq.shape)
    left = i < 0
    out[left] = tail[0] + (pts[0] - xq[left])
    inner = (i >= 0) & (i < pts.size - 1)
    if np.any(inner):
        j = i[inner]
        u = (xq[inner] - pts[j]) / h[j]
        partF = h[j] * _segment_int_F(u, y0[j], y1[j], m0[j], m1[j], herm[j])
        out[inner] = h[j] * (1 - u) - partF + tail[j + 1]
    return out


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _grid_eval_nb(tq, pts, F, L, dens, herm):  # pragma: no cover - compiled
        n = pts.size
        m = tq.size
        out_F = np.zeros(m)
        out_d = np.zeros(m)
        for k in range(m):
            t = tq[k]
            i = np.searchsorted(pts, t, side="right") - 1
            if i < 0:
                continue
            if i >= n - 1:
                out_F[k] = 1.0
                if t == pts[n - 1]:
                    out_d[k] = dens[n - 1]
                continue
            a = pts[i]
            h = pts[i + 1] - a
            u = (t - a) / h
            y0 = F[i]
            y1 = L[i + 1]
            if herm[i]:
                m0 = dens[i] * h
                m1 = dens[i + 1] * h
                u2 = u * u
                u3 = u2 * u
                v = (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * m1
                d = ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * y1
                     + (3 * u2 - 2 * u) * m1) / h
            else:
                v = y0 + u * (y1 - y0)
                d = (y1 - y0) / h
            if v < y0:
                v = y0
            if v > y1:
                v = y1
            out_F[k] = v
            out_d[k] = d if d > 0.0 else 0.0
        return out_F, out_d

    @njit(cache=True)
    def _seg_int_nb(u, y0, y1, m0, m1, hm):  # pragma: no cover - compiled
        u2 = u * u
        u3 = u2 * u
        u4 = u3 * u
        if hm:
            H00 = 0.5 - (u4 / 2 - u3 + u)
            H10 = (1.0 / 12.0) - (u4 / 4 - 2 * u3 / 3 + u2 / 2)
            H01 = 0.5 - (-u4 / 2 + u3)
            H11 = (-1.0 / 12.0) - (u4 / 4 - u3 / 3)
            return H00 * y0 + H10 * m0 + H01 * y1 + H11 * m1
        return (1 - u) * y0 + (1 - u2) / 2 * (y1 - y0)

    @njit(cache=True)
    def _grid_stop_loss_nb(xq, pts, F, L, dens, herm):  # pragma: no cover - compiled
        n = pts.size
        tail = np.zeros(n)
        for i in range(n - 2, -1, -1):
            h = pts[i + 1] - pts[i]
            segF = h * _seg_int_nb(0.0, F[i], L[i + 1], dens[i] * h, dens[i + 1] * h, herm[i])
            tail[i] = tail[i + 1] + (h - segF)
        out = np.zeros(xq.size)
        for k in range(xq.size):
            x = xq[k]
            i = np.searchsorted(pts, x, side="right") - 1
            if i < 0:
                out[k] = tail[0] + (pts[0] - x)
            elif i < n - 1:
                h = pts[i + 1] - pts[i]
                u = (x - pts[i]) / h
                partF = h * _seg_int_nb(u, F[i], L[i + 1], dens[i] * h, dens[i + 1] * h, herm[i])
                out[k] = h * (1 - u) - partF + tail[i + 1]
        return out


def grid_eval(tq, pts, F, L, dens, herm):
    """Interpolated CDF and density of a grid distribution at ``tq``."""
    tq = np.asarray(tq, dtype=float)
    if HAVE_NUMBA:
        shape = tq.shape
        Fv, dv = _grid_eval_nb(np.ascontiguousarray(tq.ravel()), pts, F, L, dens, herm)
        return Fv.reshape(shape), dv.reshape(shape)
    return grid_eval_np(tq, pts, F, L, dens, herm)


def grid_stop_loss(xq, pts, F, L, dens, herm):
    """``x -> integral_x^inf (1 - F(t)) dt`` for a grid distribution."""
    xq = np.asarray(xq, dtype=float)
    if HAVE_NUMBA:
        shape = xq.shape
        return _grid_stop_loss_nb(np.ascontiguousarray(xq.ravel()), pts, F, L, dens, herm).reshape(shape)
    return grid_stop_loss_np(xq, pts, F, L, dens, herm)
