"""The four generative models producing ensembles of drifted Gaussian copies.

Every scenario yields N copies X^i = b0 + Z^i on [0, T], where b0 is a
deterministic drift-in-mean and the Z^i are centered, possibly correlated
noises:

* GbmCorrelated: X^i is the log of a geometric Brownian motion driven by
  correlated Brownian motions, b0(t) = integral of (drift(u) - sigma^2/2).
* FractionalRandomEffect: Z^i_t = phi^i t + sigma B^i_t with Gaussian
  random slopes and independent fBm copies, b0 = integral of drift.
* InteractingParticles: mean-field particles simulated by an explicit
  Euler scheme, then transformed path by path so the transformed copies
  have drift-in-mean b0(t) = drift(t) + integral of drift.
* SegmentedFbm: one long fBm observation with a periodic drift, cut into
  N windows of length T separated by a forgetting gap Delta = delta * T.

Each scenario also exposes the entrywise bound matrix Gamma on the
integrated noise covariances, |integral of E(Z^i_s Z^k_s) ds| <= Gamma[i,k],
whose normalized sum risk_rate(Gamma) = sum(Gamma) / N^2 bounds the risk
of the mean-path estimator and drives the model-selection penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import GridAlignmentError, InconsistentInitialConditionError
from .grid import PathEnsemble, SampledPath, TimeGrid, cumulative_integral
from .noise import (
    FbmParams,
    _as_generator,
    check_correlation_matrix,
    correlated_bm_ensemble,
    random_effect_fbm_ensemble,
    sample_fbm_paths,
)

__all__ = [
    "GbmCorrelated",
    "FractionalRandomEffect",
    "InteractingParticles",
    "SegmentedFbm",
    "ScenarioConfig",
    "polynomial_drift",
    "simulate_gbm_copies",
    "simulate_fractional_copies",
    "simulate_ips",
    "ips_transform",
    "segment_long_path",
    "simulate_segmented_copies",
    "simulate_scenario",
    "true_mean_path",
    "gamma_matrix",
    "risk_rate",
]


def polynomial_drift(coefficients):
    """Return (p, p', P) for a polynomial drift, P the antiderivative with P(0)=0.

    Coefficients are in ascending degree order, e.g. (0, 0, 1) is t^2.
    """
    p = np.polynomial.Polynomial(coefficients)
    return p, p.deriv(), p.integ()


def _check_sigma(sigma, allow_zero=False):
    if not np.isfinite(sigma):
        raise ValueError(f"sigma must be finite, got {sigma!r}")
    if sigma == 0.0 and not allow_zero:
        raise ValueError("sigma must be nonzero")


@dataclass(frozen=True, eq=False)
class GbmCorrelated:
    """Correlated geometric Brownian motions observed through their log.

    `drift` is the instantaneous drift of the price equation; the copies
    X^i = log(S^i / S0) then have drift-in-mean
    b0(t) = integral of (drift(u) - sigma^2 / 2) over [0, t].
    `drift_integral` is an optional closed-form antiderivative of `drift`
    (P(0) = 0) used to evaluate truths without quadrature error.
    """

    initial: float
    sigma: float
    drift: Callable
    correlation: np.ndarray
    drift_integral: Callable | None = None

    def __post_init__(self):
        _check_sigma(self.sigma)
        if self.initial <= 0:
            raise ValueError(f"initial price must be positive, got {self.initial!r}")
        object.__setattr__(self, "correlation", check_correlation_matrix(self.correlation))

    @property
    def n_copies(self) -> int:
        return self.correlation.shape[0]


@dataclass(frozen=True, eq=False)
class FractionalRandomEffect:
    """Independent copies with a Gaussian random slope and fBm noise.

    Z^i_t = phi^i t + sigma B^i_t, phi^i ~ N(0, sigma_phi^2), B^i fBm with
    Hurst index in (1/2, 1); b0 = integral of `drift`.
    """

    initial: float
    sigma: float
    sigma_phi: float
    hurst: float
    drift: Callable
    drift_integral: Callable | None = None

    def __post_init__(self):
        _check_sigma(self.sigma)
        if not 0.5 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (1/2, 1), got {self.hurst!r}")
        if self.sigma_phi <= 0:
            raise ValueError(f"sigma_phi must be positive, got {self.sigma_phi!r}")


@dataclass(frozen=True, eq=False)
class InteractingParticles:
    """Mean-field particle system with attraction to the empirical mean.

    Particles follow dY^i = (drift'(s) - (Y^i - Ybar)) ds + sigma dW^i from
    Y^i_0 = start; `drift` must be C^1 with drift(0) = 0 and its derivative
    supplied explicitly.  sigma = 0 is allowed as a deterministic test mode.
    The transformed copies have drift-in-mean
    b0(t) = drift(t) + integral of drift over [0, t].
    """

    start: float
    sigma: float
    drift: Callable
    drift_derivative: Callable
    drift_integral: Callable | None = None

    def __post_init__(self):
        _check_sigma(self.sigma, allow_zero=True)
        if abs(float(self.drift(0.0))) > 1e-12:
            raise ValueError("drift must vanish at 0 for the particle scenario")


@dataclass(frozen=True, eq=False)
class SegmentedFbm:
    """Copies cut from one long fBm path with a periodic drift.

    The long process has drift-in-mean equal to the T-periodic extension of
    `periodic_drift` (defined on [0, T), vanishing at 0) plus sigma * fBm.
    Window i starts at (i - 1) * (T + Delta) with Delta = delta * T, so
    consecutive windows are separated by a forgetting gap of delta periods.
    """

    hurst: float
    sigma: float
    delta: int
    periodic_drift: Callable

    def __post_init__(self):
        _check_sigma(self.sigma)
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst!r}")
        if int(self.delta) != self.delta or self.delta < 1:
            raise ValueError(f"delta must be a positive integer, got {self.delta!r}")
        if abs(float(self.periodic_drift(0.0))) > 1e-12:
            raise ValueError("periodic_drift must vanish at 0")


ScenarioConfig = Union[GbmCorrelated, FractionalRandomEffect, InteractingParticles, SegmentedFbm]


def _integral_values(cfg, grid: TimeGrid) -> np.ndarray:
    """Antiderivative of cfg.drift on the grid: closed form if available."""
    if cfg.drift_integral is not None:
        vals = np.asarray(cfg.drift_integral(grid.points), dtype=float)
        return vals - vals[0]
    sampled = SampledPath(grid, np.asarray(cfg.drift(grid.points), dtype=float))
    return cumulative_integral(sampled).values


def _periodic_values(cfg: SegmentedFbm, grid: TimeGrid, n_periods: int) -> np.ndarray:
    """Periodic drift sampled on a grid spanning `n_periods` periods.

    Evaluated by index arithmetic (offset l mod n within the period) so the
    period boundaries are hit exactly, where the periodic extension takes
    the value periodic_drift(0) = 0.
    """
    n = grid.subintervals // n_periods
    period_offsets = grid.points[:n]
    one_period = np.asarray(cfg.periodic_drift(period_offsets), dtype=float)
    return np.concatenate([np.tile(one_period, n_periods), one_period[:1]])


def true_mean_path(cfg: ScenarioConfig, grid: TimeGrid) -> SampledPath:
    """The drift-in-mean b0 of the scenario's copies, sampled on the grid."""
    if isinstance(cfg, GbmCorrelated):
        values = _integral_values(cfg, grid) - 0.5 * cfg.sigma**2 * grid.points
    elif isinstance(cfg, FractionalRandomEffect):
        values = _integral_values(cfg, grid)
    elif isinstance(cfg, InteractingParticles):
        values = np.asarray(cfg.drift(grid.points), dtype=float) + _integral_values(cfg, grid)
    elif isinstance(cfg, SegmentedFbm):
        values = _periodic_values(cfg, grid, 1)
    else:
        raise TypeError(f"unknown scenario config {type(cfg)!r}")
    return SampledPath(grid, values)


def simulate_gbm_copies(cfg: GbmCorrelated, grid: TimeGrid, n_copies: int, rng):
    """Simulate the GBM scenario; returns (log-copies X, prices S).

    X^i = b0 + sigma W^i with b0 the trapezoid cumulative integral of
    drift - sigma^2/2, and S^i = initial * exp(X^i).
    """
    if n_copies != cfg.n_copies:
        raise ValueError(
            f"n_copies={n_copies} does not match correlation matrix size {cfg.n_copies}"
        )
    noise = correlated_bm_ensemble(grid, cfg.correlation, cfg.sigma, rng)
    integrand = SampledPath(
        grid, np.asarray(cfg.drift(grid.points), dtype=float) - 0.5 * cfg.sigma**2
    )
    b0 = cumulative_integral(integrand).values
    x = PathEnsemble(grid, b0[None, :] + noise.paths)
    s = PathEnsemble(grid, cfg.initial * np.exp(x.paths))
    return x, s


def simulate_fractional_copies(
    cfg: FractionalRandomEffect, grid: TimeGrid, n_copies: int, rng
) -> PathEnsemble:
    """Simulate the random-effect scenario: X^i = b0 + phi^i t + sigma B^i."""
    noise = random_effect_fbm_ensemble(
        cfg.hurst, cfg.sigma, cfg.sigma_phi, grid, n_copies, rng
    )
    integrand = SampledPath(grid, np.asarray(cfg.drift(grid.points), dtype=float))
    b0 = cumulative_integral(integrand).values
    return PathEnsemble(grid, b0[None, :] + noise.paths)


def simulate_ips(
    cfg: InteractingParticles, grid: TimeGrid, n_copies: int, rng
) -> PathEnsemble:
    """Explicit Euler simulation of the particle system on the grid.

    Y^i_{l+1} = Y^i_l + (drift'(t_l) - (Y^i_l - Ybar_l)) dt + sigma dW^i_l,
    coupled through the empirical mean at every step.
    """
    if n_copies < 1:
        raise ValueError("need at least one particle")
    gen = _as_generator(rng)
    n, dt = grid.subintervals, grid.step
    slope = np.asarray(cfg.drift_derivative(grid.points[:-1]), dtype=float)
    slope = np.broadcast_to(slope, (n,))
    shocks = None
    if cfg.sigma != 0.0:
        shocks = cfg.sigma * np.sqrt(dt) * gen.standard_normal((n_copies, n))
    y = np.empty((n_copies, n + 1))
    y[:, 0] = cfg.start
    for step in range(n):
        current = y[:, step]
        pull = current - current.mean()
        y[:, step + 1] = current + (slope[step] - pull) * dt
        if shocks is not None:
            y[:, step + 1] += shocks[:, step]
    return PathEnsemble(grid, y)


def ips_transform(ensemble: PathEnsemble, start: float) -> PathEnsemble:
    """Per-path transform X = Y + integral of Y - start * (1 + t).

    Turns the particle paths into copies X^i = b0 + Z^i starting at 0; the
    running integral uses trapezoid quadrature on the grid.
    """
    if not np.allclose(ensemble.paths[:, 0], start, atol=1e-9, rtol=0.0):
        raise InconsistentInitialConditionError(
            f"every particle must start at {start}, got values "
            f"in [{ensemble.paths[:, 0].min()}, {ensemble.paths[:, 0].max()}]"
        )
    grid = ensemble.grid
    dt = grid.step
    inner = np.cumsum(0.5 * dt * (ensemble.paths[:, :-1] + ensemble.paths[:, 1:]), axis=1)
    running = np.concatenate([np.zeros((ensemble.n_paths, 1)), inner], axis=1)
    x = ensemble.paths + running - start * (1.0 + grid.points)[None, :]
    return PathEnsemble(grid, x)


def segment_long_path(long: SampledPath, horizon: float, delta: int, n_copies: int) -> PathEnsemble:
    """Cut a long observation into N increment windows of length `horizon`.

    Window i covers [(i-1)(1+delta)T, (i-1)(1+delta)T + T] and is shifted
    to start at zero.  The long grid must consist of exactly
    N * (1 + delta) * n subintervals of the per-window step T / n.
    """
    if int(delta) != delta or delta < 1:
        raise ValueError(f"delta must be a positive integer, got {delta!r}")
    if n_copies < 1:
        raise ValueError("need at least one window")
    total = long.grid.subintervals
    blocks = n_copies * (1 + delta)
    if total % blocks != 0:
        raise GridAlignmentError(
            f"long path has {total} subintervals; windowing requires a multiple of "
            f"n * (1 + delta) * N = n * {blocks} so each window start falls on the grid"
        )
    n = total // blocks
    expected_horizon = n_copies * (1 + delta) * horizon
    if not np.isclose(long.grid.horizon, expected_horizon, rtol=1e-12, atol=0.0):
        raise GridAlignmentError(
            f"long path horizon {long.grid.horizon} does not equal N(T + Delta) = {expected_horizon}"
        )
    stride = n * (1 + delta)
    starts = stride * np.arange(n_copies)
    idx = starts[:, None] + np.arange(n + 1)[None, :]
    windows = long.values[idx]
    windows = windows - windows[:, :1]
    return PathEnsemble(TimeGrid(horizon, n), windows)


def simulate_segmented_copies(
    cfg: SegmentedFbm, grid: TimeGrid, n_copies: int, rng
) -> PathEnsemble:
    """Simulate one long periodic-drift fBm path and segment it into copies."""
    blocks = n_copies * (1 + cfg.delta)
    long_grid = TimeGrid(blocks * grid.horizon, blocks * grid.subintervals)
    fbm = sample_fbm_paths(FbmParams(cfg.hurst, cfg.sigma), long_grid, 1, rng)
    drift = _periodic_values(cfg, long_grid, blocks)
    long = SampledPath(long_grid, drift + fbm.paths[0])
    return segment_long_path(long, grid.horizon, cfg.delta, n_copies)


def simulate_scenario(cfg: ScenarioConfig, grid: TimeGrid, n_copies: int, rng) -> PathEnsemble:
    """Produce the scenario's copies X^i = b0 + Z^i (the estimation input)."""
    if isinstance(cfg, GbmCorrelated):
        x, _ = simulate_gbm_copies(cfg, grid, n_copies, rng)
        return x
    if isinstance(cfg, FractionalRandomEffect):
        return simulate_fractional_copies(cfg, grid, n_copies, rng)
    if isinstance(cfg, InteractingParticles):
        y = simulate_ips(cfg, grid, n_copies, rng)
        return ips_transform(y, cfg.start)
    if isinstance(cfg, SegmentedFbm):
        return simulate_segmented_copies(cfg, grid, n_copies, rng)
    raise TypeError(f"unknown scenario config {type(cfg)!r}")


def gamma_matrix(cfg: ScenarioConfig, n_copies: int, horizon: float) -> np.ndarray:
    """Entrywise bound matrix on the integrated noise covariances.

    Gamma[i, k] bounds |integral over [0, T] of E(Z^i_s Z^k_s) ds|.  The
    closed forms are scenario specific; all entries are nonnegative and the
    matrix is symmetric.
    """
    if n_copies < 1:
        raise ValueError("n_copies must be at least 1")
    T = float(horizon)
    if T <= 0:
        raise ValueError("horizon must be positive")
    if isinstance(cfg, GbmCorrelated):
        if n_copies != cfg.n_copies:
            raise ValueError(
                f"n_copies={n_copies} does not match correlation matrix size {cfg.n_copies}"
            )
        return (cfg.sigma * T) ** 2 * np.abs(cfg.correlation)
    if isinstance(cfg, FractionalRandomEffect):
        sig_sq = T * (cfg.sigma_phi**2 * T**2 + cfg.sigma**2 * T ** (2 * cfg.hurst))
        return sig_sq * np.eye(n_copies)
    if isinstance(cfg, InteractingParticles):
        scale = T * max(1.0, T) ** 3 * cfg.sigma**2
        return scale * (np.eye(n_copies) + 3.0 / n_copies)
    if isinstance(cfg, SegmentedFbm):
        gap = cfg.delta * T
        if gap < T:
            raise ValueError("the segmentation bound requires Delta >= T")
        h = cfg.hurst
        diag = T ** (2 * h + 1)
        lag = np.abs(np.subtract.outer(np.arange(n_copies), np.arange(n_copies)))
        off = np.zeros((n_copies, n_copies))
        mask = lag > 0
        if h != 0.5:
            coef = 4.0 * h * abs(2 * h - 1) * T**3
            off[mask] = coef * lag[mask] ** (2 * h - 2.0) * gap ** (2 * h - 2.0)
        # the closed form covers unit-scale noise; sigma^2 rescales it to sigma * fBm
        return cfg.sigma**2 * (diag * np.eye(n_copies) + off)
    raise TypeError(f"unknown scenario config {type(cfg)!r}")


def risk_rate(gamma: np.ndarray) -> float:
    """Normalized mass of the bound matrix: sum of entries / N^2.

    This is the rate that bounds the expected integrated squared error of
    the mean-path estimator and sizes the model-selection penalty.
    """
    gamma = np.asarray(gamma, dtype=float)
    if gamma.ndim != 2 or gamma.shape[0] != gamma.shape[1]:
        raise ValueError(f"gamma must be a square matrix, got shape {gamma.shape}")
    if np.any(gamma < 0):
        raise ValueError("gamma entries must be nonnegative")
    n = gamma.shape[0]
    return float(gamma.sum() / n**2)
