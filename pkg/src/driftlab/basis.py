"""Trigonometric orthonormal basis on [0, T] and its complexity functionals.

The family is indexed from 1 to match the estimator's nested truncations:

    phi_1      = T^(-1/2)
    phi_{2j}   = sqrt(2/T) * cos(2*pi*j*t / T)
    phi_{2j+1} = sqrt(2/T) * sin(2*pi*j*t / T)

It is orthonormal in L2([0, T], dt).  The two complexity functionals are
the cumulative squared sup-norms of the basis functions and of their
derivatives; for this family they have closed forms, affine and cubic in
the dimension respectively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import TimeGrid

__all__ = ["TrigBasis", "complexity_l", "complexity_lbar"]


def _check_dim(m, max_dim):
    if int(m) != m or not 1 <= m <= max_dim:
        raise ValueError(f"basis index/dimension must be an integer in [1, {max_dim}], got {m!r}")


def _check_horizon(horizon):
    if horizon <= 0 or not np.isfinite(horizon):
        raise ValueError(f"horizon must be positive, got {horizon!r}")


@dataclass(frozen=True)
class TrigBasis:
    """Trigonometric basis of dimension max_dim on [0, horizon]."""

    horizon: float
    max_dim: int

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon!r}")
        if int(self.max_dim) != self.max_dim or self.max_dim < 1:
            raise ValueError(f"max_dim must be a positive integer, got {self.max_dim!r}")

    def _check_time(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0.0) or np.any(t > self.horizon):
            raise ValueError(f"time must lie in [0, {self.horizon}]")
        return t

    def eval_basis(self, j: int, t):
        """Value of phi_j at time(s) t; j is 1-based, t in [0, horizon]."""
        _check_dim(j, self.max_dim)
        t = self._check_time(t)
        T = self.horizon
        if j == 1:
            out = np.full_like(t, 1.0 / np.sqrt(T))
        else:
            freq = 2.0 * np.pi * (j // 2) / T
            wave = np.cos if j % 2 == 0 else np.sin
            out = np.sqrt(2.0 / T) * wave(freq * t)
        return out if out.ndim else float(out)

    def eval_basis_derivative(self, j: int, t):
        """Analytic derivative of phi_j at time(s) t."""
        _check_dim(j, self.max_dim)
        t = self._check_time(t)
        T = self.horizon
        if j == 1:
            out = np.zeros_like(t)
        else:
            freq = 2.0 * np.pi * (j // 2) / T
            if j % 2 == 0:
                out = -np.sqrt(2.0 / T) * freq * np.sin(freq * t)
            else:
                out = np.sqrt(2.0 / T) * freq * np.cos(freq * t)
        return out if out.ndim else float(out)

    def sample(self, grid: TimeGrid, m: int | None = None) -> np.ndarray:
        """Matrix of basis values on the grid, shape (m, grid.size)."""
        m = self.max_dim if m is None else m
        _check_dim(m, self.max_dim)
        return np.vstack([self.eval_basis(j, grid.points) for j in range(1, m + 1)])

    def sample_derivatives(self, grid: TimeGrid, m: int | None = None) -> np.ndarray:
        """Matrix of basis derivative values on the grid, shape (m, grid.size)."""
        m = self.max_dim if m is None else m
        _check_dim(m, self.max_dim)
        return np.vstack([self.eval_basis_derivative(j, grid.points) for j in range(1, m + 1)])


def complexity_l(m: int, horizon: float) -> float:
    """Cumulative squared sup-norms of phi_1..phi_m: (2m - 1) / T."""
    _check_dim(m, np.inf)
    _check_horizon(horizon)
    return (2.0 * m - 1.0) / horizon


def complexity_lbar(m: int, horizon: float) -> float:
    """Cumulative squared sup-norms of the derivatives of phi_1..phi_m.

    phi_1 contributes 0; each oscillating phi_j contributes
    (2/T) * (2*pi*floor(j/2)/T)^2.  Grows like m^3.
    """
    _check_dim(m, np.inf)
    _check_horizon(horizon)
    j = np.arange(2, m + 1)
    if j.size == 0:
        return 0.0
    freqs = 2.0 * np.pi * (j // 2) / horizon
    return float(np.sum((2.0 / horizon) * freqs**2))
