"""Drift estimators for ensembles of copies X^i = b0 + Z^i.

Three layers:

* the mean-path estimate of b0 (``estimate_b``),
* the projection estimate of the derivative b0' obtained by integrating
  trigonometric basis functions against the mean path
  (``compute_coefficients`` / ``derivative_estimate``),
* scenario back-transforms recovering the underlying model drift from b0
  (``gbm_drift_estimate`` for the log-price shift, ``ips_backtransform``
  for the mean-field convolution), plus ``mise`` for integrated squared
  error on a grid.

Thin scikit-learn-style wrappers (``MeanDriftEstimator``,
``ProjectionDerivativeEstimator``) expose the same computations through a
fit/predict interface with ``get_params`` support.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .basis import TrigBasis
from .errors import AliasingError, GridMismatchError
from .grid import (
    PathEnsemble,
    SampledPath,
    TimeGrid,
    l2_norm_sq,
    mean_path,
    riemann_stieltjes,
)
from .validation import check_ensemble, check_eval_points

__all__ = [
    "CoefficientVector",
    "EstimateFn",
    "estimate_b",
    "compute_coefficients",
    "derivative_estimate",
    "gbm_drift_estimate",
    "ips_backtransform",
    "mise",
    "MeanDriftEstimator",
    "ProjectionDerivativeEstimator",
]


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """Projection coefficients a_1..a_M of the mean path's derivative.

    a_j is the left-point Riemann-Stieltjes integral of basis function
    phi_j against the mean path.  The vector is prefix-stable: truncating
    to the first m entries gives the coefficients of the m-dimensional
    projection estimate for every m <= M.
    """

    values: np.ndarray
    basis: TrigBasis
    grid: TimeGrid

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("coefficient values must be a nonempty 1-d array")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def max_dim(self) -> int:
        return self.values.size

    def coefficient(self, j: int) -> float:
        """a_j with 1-based index j."""
        if not 1 <= j <= self.max_dim:
            raise ValueError(f"coefficient index must be in [1, {self.max_dim}], got {j}")
        return float(self.values[j - 1])


@dataclass(frozen=True, eq=False)
class EstimateFn:
    """A drift estimate: values sampled on the grid plus how they were made.

    ``kind`` records how the estimate was produced ("mean-path",
    "projection", "shifted", "backtransform").  Projection estimates keep
    their generating coefficients so they can be evaluated in closed form
    at arbitrary times; other kinds evaluate by linear interpolation.
    """

    grid: TimeGrid
    values: np.ndarray
    kind: str = "sampled"
    coeffs: CoefficientVector | None = field(default=None, repr=False)
    dim: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.grid.size,):
            raise ValueError(
                f"values must have one entry per grid point ({self.grid.size}), "
                f"got shape {values.shape}"
            )
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def as_path(self) -> SampledPath:
        return SampledPath(self.grid, self.values)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "projection" and self.coeffs is not None and self.dim is not None:
            basis = self.coeffs.basis
            total = np.zeros_like(t, dtype=float)
            for j in range(1, self.dim + 1):
                total = total + self.coeffs.coefficient(j) * basis.eval_basis(j, t)
            return total
        return np.interp(t, self.grid.points, self.values)


def estimate_b(ensemble: PathEnsemble) -> EstimateFn:
    """Mean-path estimate of the drift-in-mean b0: the average of the copies."""
    check_ensemble(ensemble)
    mean = mean_path(ensemble)
    return EstimateFn(ensemble.grid, mean.values, kind="mean-path")


def _as_mean_path(data) -> SampledPath:
    if isinstance(data, PathEnsemble):
        check_ensemble(data)
        return mean_path(data)
    if isinstance(data, EstimateFn):
        return data.as_path()
    if isinstance(data, SampledPath):
        return data
    raise TypeError(
        "expected a PathEnsemble, SampledPath or EstimateFn, got " f"{type(data)!r}"
    )


def compute_coefficients(data, basis: TrigBasis, m_max: int) -> CoefficientVector:
    """First M projection coefficients of the mean path's derivative.

    a_j = left-point Riemann-Stieltjes integral of phi_j against the mean
    path.  Requires M <= the basis capacity and M < n/2 so the top basis
    frequency stays below the grid's Nyquist limit.
    """
    path = _as_mean_path(data)
    grid = path.grid
    if not 1 <= m_max <= basis.max_dim:
        raise ValueError(f"m_max must be in [1, {basis.max_dim}], got {m_max}")
    if not np.isclose(basis.horizon, grid.horizon, rtol=1e-12, atol=0.0):
        raise ValueError(
            f"basis horizon {basis.horizon} does not match grid horizon {grid.horizon}"
        )
    if m_max >= grid.subintervals / 2:
        raise AliasingError(
            f"m_max={m_max} needs at least {2 * m_max + 1} subintervals to keep the "
            f"top basis frequency below the Nyquist limit; grid has {grid.subintervals}"
        )
    sampled = basis.sample(grid, m_max)
    values = np.array(
        [riemann_stieltjes(SampledPath(grid, sampled[j]), path) for j in range(m_max)]
    )
    return CoefficientVector(values, basis, grid)


def derivative_estimate(coeffs: CoefficientVector, m: int) -> EstimateFn:
    """The m-dimensional projection estimate sum_{j<=m} a_j phi_j on the grid."""
    if not 1 <= m <= coeffs.max_dim:
        raise ValueError(f"m must be in [1, {coeffs.max_dim}], got {m}")
    sampled = coeffs.basis.sample(coeffs.grid, m)
    values = coeffs.values[:m] @ sampled
    return EstimateFn(coeffs.grid, values, kind="projection", coeffs=coeffs, dim=m)


def gbm_drift_estimate(bprime: EstimateFn, sigma: float) -> EstimateFn:
    """Recover the price-equation drift from b0': pointwise shift by sigma^2/2."""
    return EstimateFn(
        bprime.grid, bprime.values + 0.5 * float(sigma) ** 2, kind="shifted"
    )


def ips_backtransform(bhat) -> EstimateFn:
    """Recover the particle drift from b0 via the exponential convolution.

    output(t) = bhat(t) - integral over [0, t] of exp(-(t - s)) bhat(s) ds,
    with the convolution computed by trapezoid quadrature at every grid
    point (O(n^2) overall).
    """
    path = bhat.as_path() if isinstance(bhat, EstimateFn) else bhat
    if not isinstance(path, SampledPath):
        raise TypeError(f"expected an EstimateFn or SampledPath, got {type(bhat)!r}")
    grid = path.grid
    t = grid.points
    dt = grid.step
    size = grid.size
    kernel = np.exp(-np.maximum(t[:, None] - t[None, :], 0.0))
    weights = np.tril(np.full((size, size), dt))
    weights[:, 0] *= 0.5
    weights[np.diag_indices(size)] *= 0.5
    weights[0, 0] = 0.0
    conv = (kernel * weights) @ path.values
    return EstimateFn(grid, path.values - conv, kind="backtransform")


def mise(estimate, truth, grid: TimeGrid | None = None) -> float:
    """Integrated squared error between an estimate and a truth on a grid.

    ``estimate`` may be an EstimateFn, SampledPath or array of grid values;
    ``truth`` a callable of time or an array/SampledPath on the same grid.
    Uses trapezoid quadrature; zero iff the two agree at every grid point.
    """
    if isinstance(estimate, EstimateFn):
        est_path = estimate.as_path()
    elif isinstance(estimate, SampledPath):
        est_path = estimate
    else:
        if grid is None:
            raise ValueError("grid is required when the estimate is a bare array")
        est_path = SampledPath(grid, np.asarray(estimate, dtype=float))
    if grid is None:
        grid = est_path.grid
    elif grid != est_path.grid:
        raise GridMismatchError(f"estimate lives on {est_path.grid}, not {grid}")
    if isinstance(truth, SampledPath):
        if truth.grid != grid:
            raise GridMismatchError(f"truth lives on {truth.grid}, not {grid}")
        truth_values = truth.values
    elif callable(truth):
        truth_values = np.asarray(truth(grid.points), dtype=float)
        truth_values = np.broadcast_to(truth_values, (grid.size,))
    else:
        truth_values = np.asarray(truth, dtype=float)
        if truth_values.shape != (grid.size,):
            raise ValueError(
                f"truth values must have shape ({grid.size},), got {truth_values.shape}"
            )
    diff = SampledPath(grid, est_path.values - truth_values)
    return l2_norm_sq(diff)


class MeanDriftEstimator(BaseEstimator):
    """Scikit-learn-style wrapper around the mean-path drift estimate.

    ``fit`` takes a PathEnsemble and stores the mean path; ``predict``
    evaluates it at arbitrary times by linear interpolation.
    """

    def fit(self, ensemble: PathEnsemble, y=None):
        check_ensemble(ensemble)
        self.estimate_ = estimate_b(ensemble)
        self.grid_ = ensemble.grid
        return self

    def predict(self, t):
        check_is_fitted(self)
        t = check_eval_points(t, self.grid_.horizon)
        return self.estimate_(t)


class ProjectionDerivativeEstimator(BaseEstimator):
    """Scikit-learn-style wrapper around the fixed-dimension projection estimate.

    Parameters
    ----------
    dim : int
        Projection dimension m (number of basis functions kept).
    max_dim : int or None
        Number of coefficients to compute; defaults to ``dim``.
    """

    def __init__(self, dim: int = 5, max_dim: int | None = None):
        self.dim = dim
        self.max_dim = max_dim

    def fit(self, ensemble: PathEnsemble, y=None):
        check_ensemble(ensemble)
        m_max = self.dim if self.max_dim is None else self.max_dim
        if m_max < self.dim:
            raise ValueError(f"max_dim={m_max} must be at least dim={self.dim}")
        basis = TrigBasis(ensemble.grid.horizon, m_max)
        self.coefficients_ = compute_coefficients(ensemble, basis, m_max)
        self.estimate_ = derivative_estimate(self.coefficients_, self.dim)
        self.grid_ = ensemble.grid
        return self

    def predict(self, t):
        check_is_fitted(self)
        t = check_eval_points(t, self.grid_.horizon)
        return self.estimate_(t)
