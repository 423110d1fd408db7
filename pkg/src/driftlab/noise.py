"""Exact generation of the Gaussian noise families.

Three generators cover every scenario in the library:

* fractional Brownian motion (fBm) paths with Hurst index H in (0, 1),
  sampled exactly on the grid either through a Cholesky factorization of
  the grid covariance (small grids) or through circulant embedding of the
  stationary increments (fractional Gaussian noise spectral method, large
  grids),
* ensembles of correlated Brownian motions obtained by mixing independent
  increments with the principal square root of a correlation matrix, and
* random-effect fractional noises Z_t = phi * t + sigma * B_t with a
  Gaussian random slope phi.

Both fBm methods are exact in law; there is no time-discretization bias
beyond observing the process on the grid itself.

Reproducibility: every generator is a deterministic function of its
parameters and an RngStream (or an explicit numpy Generator), so results
never depend on scheduling or thread count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveSemidefiniteError
from .grid import PathEnsemble, TimeGrid

__all__ = [
    "RngStream",
    "FbmParams",
    "fbm_covariance",
    "fbm_grid_covariance",
    "fbm_cholesky_factor",
    "matrix_sqrt",
    "sample_fbm_paths",
    "correlated_bm_ensemble",
    "random_effect_fbm_ensemble",
    "toeplitz_corr",
    "check_correlation_matrix",
]

#: Grid sizes up to this many points use the O(n^3) Cholesky route; larger
#: grids switch to the O(n log n) circulant embedding of the increments.
CHOLESKY_MAX_POINTS = 4096

_EIG_TOL = 1e-10


@dataclass(frozen=True)
class RngStream:
    """Named random stream: a deterministic function of (master_seed, stream_id).

    Replication r of an experiment draws from RngStream(master_seed, r),
    so any scheduling of replications across threads reproduces the same
    numbers bit for bit.
    """

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh numpy Generator seeded from this stream's identity."""
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        return np.random.default_rng(seq)


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"rng must be an RngStream or numpy Generator, got {type(rng)!r}")


@dataclass(frozen=True)
class FbmParams:
    """Hurst index and scale of a fractional Brownian motion sigma * B^H."""

    hurst: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ValueError(f"hurst must lie in (0, 1), got {self.hurst!r}")
        if self.scale == 0.0 or not np.isfinite(self.scale):
            raise ValueError(f"scale must be a nonzero real, got {self.scale!r}")


def fbm_covariance(hurst: float, s, t):
    """Covariance of standard fBm: (s^2H + t^2H - |t-s|^2H) / 2.

    Accepts scalars or broadcastable arrays of nonnegative times; H = 1/2
    reduces to min(s, t).
    """
    if not 0.0 < hurst < 1.0:
        raise ValueError(f"hurst must lie in (0, 1), got {hurst!r}")
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s < 0) or np.any(t < 0):
        raise ValueError("times must be nonnegative")
    h2 = 2.0 * hurst
    out = 0.5 * (s**h2 + t**h2 - np.abs(t - s) ** h2)
    return out if out.ndim else float(out)


def fbm_grid_covariance(params: FbmParams, grid: TimeGrid) -> np.ndarray:
    """Covariance matrix of sigma * B^H on the positive grid points t_1..t_n."""
    t = grid.points[1:]
    return params.scale**2 * fbm_covariance(params.hurst, t[:, None], t[None, :])


def fbm_cholesky_factor(params: FbmParams, grid: TimeGrid) -> np.ndarray:
    """Lower-triangular factor L with L @ L.T equal to fbm_grid_covariance.

    This is the factor the Cholesky sampling route actually uses.  A
    failed factorization is retried once with a jitter of 1e-12 times the
    largest diagonal entry; if that also fails the covariance is reported
    as not positive semidefinite.
    """
    cov = fbm_grid_covariance(params, grid)
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        jitter = 1e-12 * float(np.max(np.diag(cov)))
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(cov.shape[0]))
        except np.linalg.LinAlgError as exc:
            raise NotPositiveSemidefiniteError(
                f"fBm grid covariance (H={params.hurst}, {grid.size} points) is not PSD"
            ) from exc


def matrix_sqrt(m: np.ndarray) -> np.ndarray:
    """Principal square root of a symmetric positive semidefinite matrix.

    Computed by symmetric eigendecomposition.  Eigenvalues in
    [-1e-10, 0) are clamped to zero; anything below -1e-10 raises
    NotPositiveSemidefiniteError.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix_sqrt needs a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, atol=1e-12, rtol=0.0):
        raise ValueError("matrix_sqrt needs a symmetric matrix")
    eigval, eigvec = np.linalg.eigh(m)
    if eigval.min() < -_EIG_TOL:
        raise NotPositiveSemidefiniteError(
            f"matrix has eigenvalue {eigval.min():.3e} below -{_EIG_TOL:g}"
        )
    root = (eigvec * np.sqrt(np.clip(eigval, 0.0, None))) @ eigvec.T
    return 0.5 * (root + root.T)


def check_correlation_matrix(corr: np.ndarray) -> np.ndarray:
    """Validate symmetry, unit diagonal and entry range of a correlation matrix."""
    corr = np.asarray(corr, dtype=float)
    if corr.ndim != 2 or corr.shape[0] != corr.shape[1]:
        raise ValueError(f"correlation matrix must be square, got shape {corr.shape}")
    if not np.allclose(corr, corr.T, atol=1e-12, rtol=0.0):
        raise ValueError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(corr), 1.0, atol=1e-12, rtol=0.0):
        raise ValueError("correlation matrix must have unit diagonal")
    if np.any(np.abs(corr) > 1.0 + 1e-12):
        raise ValueError("correlation entries must lie in [-1, 1]")
    return corr


def toeplitz_corr(gamma: float, n: int) -> np.ndarray:
    """Toeplitz correlation matrix with entries gamma^|i-k|, for 0 <= gamma < 1."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError(f"gamma must lie in [0, 1), got {gamma!r}")
    if n < 1:
        raise ValueError("matrix size must be at least 1")
    idx = np.arange(n)
    return gamma ** np.abs(idx[:, None] - idx[None, :])


def _fgn_spectrum(hurst: float, n: int) -> np.ndarray:
    """Eigenvalues of the circulant embedding of unit-spacing fGn covariance."""
    k = np.arange(n + 1, dtype=float)
    h2 = 2.0 * hurst
    rho = 0.5 * ((k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)
    circ = np.concatenate([rho, rho[-2:0:-1]])
    return np.fft.fft(circ).real


def _sample_fgn_circulant(hurst: float, n: int, count: int, gen: np.random.Generator):
    """`count` rows of unit-spacing fGn of length n, or None if embedding fails."""
    lam = _fgn_spectrum(hurst, n)
    if lam.min() < -1e-8 * lam.max():
        return None
    lam = np.clip(lam, 0.0, None)
    m = 2 * n
    a = gen.standard_normal((count, n + 1))
    b = gen.standard_normal((count, n - 1))
    w = np.zeros((count, m), dtype=complex)
    w[:, 0] = np.sqrt(lam[0] / m) * a[:, 0]
    w[:, n] = np.sqrt(lam[n] / m) * a[:, n]
    w[:, 1:n] = np.sqrt(lam[1:n] / (2.0 * m)) * (a[:, 1:n] + 1j * b)
    w[:, n + 1 :] = np.conj(w[:, n - 1 : 0 : -1])
    return np.fft.fft(w, axis=1).real[:, :n]


def sample_fbm_paths(
    params: FbmParams,
    grid: TimeGrid,
    count: int,
    rng,
    method: str = "auto",
) -> PathEnsemble:
    """Sample `count` independent fBm paths exactly on the grid.

    Parameters
    ----------
    params : FbmParams
        Hurst index H and scale sigma; paths have covariance
        sigma^2 * fbm_covariance(H, s, t) at grid times.
    grid : TimeGrid
    count : int
        Number of independent paths, at least 1.
    rng : RngStream or numpy Generator
    method : {"auto", "cholesky", "circulant"}
        "auto" uses Cholesky up to 4096 grid points and the circulant
        embedding beyond; the embedding falls back to Cholesky if its
        spectrum turns out negative.

    Returns
    -------
    PathEnsemble
        Paths start at 0 at t = 0.
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")
    if method not in ("auto", "cholesky", "circulant"):
        raise ValueError(f"unknown method {method!r}")
    gen = _as_generator(rng)
    n = grid.subintervals
    if method == "auto":
        method = "cholesky" if grid.size <= CHOLESKY_MAX_POINTS else "circulant"
    if method == "circulant":
        fgn = _sample_fgn_circulant(params.hurst, n, count, gen)
        if fgn is None:
            method = "cholesky"  # negative embedding spectrum: exact fallback
        else:
            increments = params.scale * grid.step**params.hurst * fgn
            paths = np.concatenate(
                [np.zeros((count, 1)), np.cumsum(increments, axis=1)], axis=1
            )
            return PathEnsemble(grid, paths)
    factor = fbm_cholesky_factor(params, grid)
    z = gen.standard_normal((count, n))
    paths = np.concatenate([np.zeros((count, 1)), z @ factor.T], axis=1)
    return PathEnsemble(grid, paths)


def correlated_bm_ensemble(
    grid: TimeGrid, corr: np.ndarray, sigma: float, rng
) -> PathEnsemble:
    """Ensemble of N Brownian motions with E(Z^i_s Z^k_t) = sigma^2 corr[i,k] min(s,t).

    Realized by mixing N independent Gaussian increment vectors with the
    principal square root of the correlation matrix at every time step.
    """
    if sigma == 0.0 or not np.isfinite(sigma):
        raise ValueError(f"sigma must be a nonzero real, got {sigma!r}")
    corr = check_correlation_matrix(corr)
    root = matrix_sqrt(corr)
    gen = _as_generator(rng)
    n = grid.subintervals
    dw = gen.standard_normal((corr.shape[0], n)) * np.sqrt(grid.step)
    dz = sigma * (root @ dw)
    paths = np.concatenate([np.zeros((corr.shape[0], 1)), np.cumsum(dz, axis=1)], axis=1)
    return PathEnsemble(grid, paths)


def random_effect_fbm_ensemble(
    hurst: float,
    sigma: float,
    sigma_phi: float,
    grid: TimeGrid,
    count: int,
    rng,
) -> PathEnsemble:
    """N independent copies of Z_t = phi * t + sigma * B_t.

    phi ~ N(0, sigma_phi^2) i.i.d. across copies, B i.i.d. fBm with Hurst
    index `hurst`, phi independent of B.
    """
    if sigma_phi <= 0.0 or not np.isfinite(sigma_phi):
        raise ValueError(f"sigma_phi must be positive, got {sigma_phi!r}")
    gen = _as_generator(rng)
    slopes = sigma_phi * gen.standard_normal(count)
    fbm = sample_fbm_paths(FbmParams(hurst, sigma), grid, count, gen)
    paths = slopes[:, None] * grid.points[None, :] + fbm.paths
    return PathEnsemble(grid, paths)
