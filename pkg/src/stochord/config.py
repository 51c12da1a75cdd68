"""Numeric policy shared by every check."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np


def _default_s_grid() -> tuple[float, ...]:
    return tuple(np.logspace(-3, 3, 64))


@dataclass(frozen=True)
class ToleranceConfig:
    """Discretisation and tolerance settings.

    ``trunc_lo``/``trunc_hi`` are the quantile levels that bound evaluation
    grids of unbounded distributions.  ``quad_tail`` is the (much smaller)
    tail mass dropped by the quadratures that build combined distributions, so
    that their tails stay accurate in relative terms.
    """

    eps_ineq: float = 1e-6
    eps_rel: float = 1e-6
    grid_size: int = 2048
    trunc_lo: float = 1e-9
    trunc_hi: float = 1 - 1e-9
    quad_tail: float = 1e-15
    s_grid: tuple[float, ...] = field(default_factory=_default_s_grid)
    max_deriv_order: int = 8
    moment_horizon: int = 10
    fd_step: float = 0.05

    def __post_init__(self):
        s = np.asarray(self.s_grid, dtype=float)
        object.__setattr__(self, "s_grid", tuple(float(v) for v in s))
        if self.eps_ineq <= 0 or self.eps_rel <= 0 or self.fd_step <= 0:
            raise ValueError("tolerances must be positive")
        if self.grid_size < 16:
            raise ValueError("grid_size must be at least 16")
        if not 0 < self.trunc_lo < self.trunc_hi < 1:
            raise ValueError("need 0 < trunc_lo < trunc_hi < 1")
        if not 0 < self.quad_tail < 0.5:
            raise ValueError("quad_tail must be in (0, 0.5)")
        if s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
            raise ValueError("s_grid must be strictly increasing and positive")
        if self.max_deriv_order < 0 or self.moment_horizon < 1:
            raise ValueError("max_deriv_order >= 0 and moment_horizon >= 1 required")

    @property
    def tail_lo(self) -> float:
        """Lower-tail mass ignored by evaluation grids."""
        return self.trunc_lo

    @property
    def tail_hi(self) -> float:
        """Upper-tail mass ignored by evaluation grids."""
        return 1.0 - self.trunc_hi

    @property
    def s_array(self) -> np.ndarray:
        return np.asarray(self.s_grid)

    def replace(self, **changes) -> ToleranceConfig:
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


DEFAULT = ToleranceConfig()
