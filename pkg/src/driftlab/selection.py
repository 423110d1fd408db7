"""Penalized selection of the projection dimension for the derivative estimate.

The data-driven dimension is

    m_hat = argmin over candidates m of  -sum_{j<=m} a_j^2 + c * m * R_N,

where the a_j are the projection coefficients, R_N is the risk rate of the
scenario (``scenarios.risk_rate``), and c > 0 is a calibration constant.
The first term is the empirical contrast evaluated at the m-dimensional
projection estimate; the penalty grows linearly in the dimension so richer
models must earn their keep.  Ties are broken by the smallest dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .basis import TrigBasis
from .estimators import CoefficientVector, compute_coefficients, derivative_estimate
from .validation import check_ensemble, check_eval_points

__all__ = [
    "DEFAULT_PENALTY_CONST",
    "SelectionResult",
    "objective_gamma",
    "penalty",
    "select_m",
    "adaptive_estimate",
    "AdaptiveDerivativeEstimator",
]

# Default calibration constant for the penalty; see montecarlo.calibrate_penalty
# for the sweep that picks one per experiment family.
DEFAULT_PENALTY_CONST = 2.0


@dataclass(frozen=True, eq=False)
class SelectionResult:
    """Outcome of the penalized dimension choice.

    ``criterion[i]`` is the penalized contrast at ``candidates[i]``;
    ``chosen`` attains the minimum, smallest dimension first on ties.
    """

    chosen: int
    candidates: tuple
    criterion: np.ndarray
    penalty_const: float
    rate: float

    def __post_init__(self):
        criterion = np.asarray(self.criterion, dtype=float)
        criterion = criterion.copy()
        criterion.setflags(write=False)
        object.__setattr__(self, "criterion", criterion)
        object.__setattr__(self, "candidates", tuple(int(m) for m in self.candidates))
        if len(self.candidates) != self.criterion.size:
            raise ValueError("criterion must have one value per candidate")
        if self.chosen not in self.candidates:
            raise ValueError(f"chosen dimension {self.chosen} not among candidates")


def objective_gamma(coeffs: CoefficientVector, m: int) -> float:
    """Empirical contrast at the m-dimensional projection: -sum_{j<=m} a_j^2."""
    if not 1 <= m <= coeffs.max_dim:
        raise ValueError(f"m must be in [1, {coeffs.max_dim}], got {m}")
    return float(-np.sum(coeffs.values[:m] ** 2))


def penalty(m: int, rate: float, penalty_const: float) -> float:
    """Dimension penalty c * m * R_N, linear in each argument."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if rate < 0:
        raise ValueError(f"rate must be nonnegative, got {rate!r}")
    if penalty_const <= 0:
        raise ValueError(f"penalty_const must be positive, got {penalty_const!r}")
    return float(penalty_const * m * rate)


def select_m(
    coeffs: CoefficientVector,
    candidates,
    rate: float,
    penalty_const: float = DEFAULT_PENALTY_CONST,
) -> SelectionResult:
    """Minimize the penalized contrast over the candidate dimensions.

    Returns the full criterion trace; the chosen dimension is the smallest
    minimizer.
    """
    candidates = sorted(int(m) for m in candidates)
    if not candidates:
        raise ValueError("candidate set must be nonempty")
    if candidates[0] < 1 or candidates[-1] > coeffs.max_dim:
        raise ValueError(
            f"candidates must lie in [1, {coeffs.max_dim}], got "
            f"[{candidates[0]}, {candidates[-1]}]"
        )
    criterion = np.array(
        [objective_gamma(coeffs, m) + penalty(m, rate, penalty_const) for m in candidates]
    )
    chosen = candidates[int(np.argmin(criterion))]
    return SelectionResult(chosen, tuple(candidates), criterion, float(penalty_const), float(rate))


def adaptive_estimate(
    coeffs: CoefficientVector,
    candidates,
    rate: float,
    penalty_const: float = DEFAULT_PENALTY_CONST,
):
    """Select the dimension and build the corresponding projection estimate."""
    result = select_m(coeffs, candidates, rate, penalty_const)
    return derivative_estimate(coeffs, result.chosen), result


class AdaptiveDerivativeEstimator(BaseEstimator):
    """Scikit-learn-style wrapper around the adaptive derivative estimate.

    Parameters
    ----------
    rate : float
        Risk rate R_N sizing the penalty (``scenarios.risk_rate`` of the
        generative scenario, or a user-supplied value).
    max_dim : int
        Number of projection coefficients to compute.
    candidates : iterable of int or None
        Candidate dimensions; defaults to 1..max_dim.
    penalty_const : float
        Calibration constant c > 0.
    """

    def __init__(
        self,
        rate: float = 0.0,
        max_dim: int = 12,
        candidates=None,
        penalty_const: float = DEFAULT_PENALTY_CONST,
    ):
        self.rate = rate
        self.max_dim = max_dim
        self.candidates = candidates
        self.penalty_const = penalty_const

    def fit(self, ensemble, y=None):
        check_ensemble(ensemble)
        candidates = (
            range(1, self.max_dim + 1) if self.candidates is None else self.candidates
        )
        basis = TrigBasis(ensemble.grid.horizon, self.max_dim)
        self.coefficients_ = compute_coefficients(ensemble, basis, self.max_dim)
        self.estimate_, self.selection_ = adaptive_estimate(
            self.coefficients_, candidates, self.rate, self.penalty_const
        )
        self.m_hat_ = self.selection_.chosen
        self.grid_ = ensemble.grid
        return self

    def predict(self, t):
        check_is_fitted(self)
        t = check_eval_points(t, self.grid_.horizon)
        return self.estimate_(t)
