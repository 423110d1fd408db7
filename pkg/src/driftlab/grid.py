"""Uniform time grids, sampled paths and discrete integration kernels.

Everything downstream works with functions and trajectories sampled on a
uniform dissection {l*T/n : l = 0..n} of [0, T].  This module provides the
containers (TimeGrid, SampledPath, PathEnsemble) and the few numerical
primitives the estimators are built from:

* trapezoid quadrature for L2([0, T]) inner products and cumulative
  integrals (exact on affine integrands, second order otherwise), and
* left-point Riemann-Stieltjes sums for integrals against a sampled path,
  with an integration-by-parts variant as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "TimeGrid",
    "SampledPath",
    "PathEnsemble",
    "l2_inner",
    "l2_norm_sq",
    "cumulative_integral",
    "riemann_stieltjes",
    "rs_by_parts",
    "mean_path",
]


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, horizon] with `subintervals` equal steps.

    Parameters
    ----------
    horizon : float
        Right endpoint T of the observation window, strictly positive.
    subintervals : int
        Number n of subintervals; the grid has n + 1 points.
    """

    horizon: float
    subintervals: int
    points: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be a positive real, got {self.horizon!r}")
        if int(self.subintervals) != self.subintervals or self.subintervals < 1:
            raise ValueError(f"subintervals must be a positive integer, got {self.subintervals!r}")
        pts = np.linspace(0.0, float(self.horizon), int(self.subintervals) + 1)
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def step(self) -> float:
        """Spacing T/n between consecutive grid points."""
        return self.horizon / self.subintervals

    @property
    def size(self) -> int:
        """Number of grid points, n + 1."""
        return self.subintervals + 1


def _frozen_array(values, expected_len, what):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != expected_len:
        raise ValueError(f"{what} must be a 1-d vector of length {expected_len}, got shape {arr.shape}")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class SampledPath:
    """A real-valued function sampled on a TimeGrid (one value per grid point)."""

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, self.grid.size, "path values"))


@dataclass(frozen=True)
class PathEnsemble:
    """N trajectories sharing one grid, stored as an (N, n + 1) array."""

    grid: TimeGrid
    paths: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.paths, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != self.grid.size:
            raise ValueError(
                f"paths must be a 2-d array with {self.grid.size} columns, got shape {arr.shape}"
            )
        if arr.shape[0] < 1:
            raise ValueError("an ensemble needs at least one path")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "paths", arr)

    @property
    def n_paths(self) -> int:
        return self.paths.shape[0]

    def path(self, i: int) -> SampledPath:
        return SampledPath(self.grid, self.paths[i])


def _require_same_grid(*objs):
    grid = objs[0].grid
    for other in objs[1:]:
        if other.grid != grid:
            raise GridMismatchError(
                f"operands live on different grids: {grid} vs {other.grid}"
            )
    return grid


def _trapezoid(values: np.ndarray, dt: float) -> float:
    return float(dt * (values.sum() - 0.5 * (values[0] + values[-1])))


def l2_inner(f: SampledPath, g: SampledPath) -> float:
    """Trapezoid approximation of the L2([0, T]) inner product of f and g."""
    grid = _require_same_grid(f, g)
    return _trapezoid(f.values * g.values, grid.step)


def l2_norm_sq(f: SampledPath) -> float:
    """Trapezoid approximation of the squared L2([0, T]) norm of f."""
    return l2_inner(f, f)


def cumulative_integral(f: SampledPath) -> SampledPath:
    """Running trapezoid integral t -> integral of f over [0, t], zero at t = 0."""
    dt = f.grid.step
    inner = np.cumsum(0.5 * dt * (f.values[:-1] + f.values[1:]))
    return SampledPath(f.grid, np.concatenate([[0.0], inner]))


def riemann_stieltjes(phi: SampledPath, x: SampledPath) -> float:
    """Left-point Riemann-Stieltjes sum of phi against the increments of x.

    Computes sum_{l<n} phi(t_l) * (x(t_{l+1}) - x(t_l)), the discrete
    evaluation of the pathwise (Young) integral of phi against x.  Linear
    in both arguments; telescopes to x(T) - x(0) for phi constant 1.
    """
    _require_same_grid(phi, x)
    return float(np.dot(phi.values[:-1], np.diff(x.values)))


def rs_by_parts(phi: SampledPath, dphi: SampledPath, x: SampledPath) -> float:
    """Integration-by-parts evaluation of the same integral as riemann_stieltjes.

    Uses phi(T)x(T) - phi(0)x(0) - <phi', x>, with the inner product by
    trapezoid quadrature.  For continuously differentiable phi and Holder
    continuous x the two routes agree up to discretization error, which
    makes this a cross-check rather than a second estimator.
    """
    _require_same_grid(phi, dphi, x)
    boundary = phi.values[-1] * x.values[-1] - phi.values[0] * x.values[0]
    return float(boundary - l2_inner(dphi, x))


def mean_path(ensemble: PathEnsemble) -> SampledPath:
    """Pointwise arithmetic mean across the ensemble's paths."""
    return SampledPath(ensemble.grid, ensemble.paths.mean(axis=0))
