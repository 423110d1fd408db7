"""Input-validation helpers shared by the estimator classes and the CLI."""

from __future__ import annotations

import numpy as np

from .grid import PathEnsemble

__all__ = ["check_ensemble", "check_eval_points", "check_positive_scalar"]


def check_ensemble(ensemble) -> PathEnsemble:
    """Require a nonempty PathEnsemble with finite values."""
    if not isinstance(ensemble, PathEnsemble):
        raise TypeError(f"expected a PathEnsemble, got {type(ensemble)!r}")
    if ensemble.n_paths < 1:
        raise ValueError("ensemble must contain at least one path")
    if not np.all(np.isfinite(ensemble.paths)):
        raise ValueError("ensemble contains non-finite values")
    return ensemble


def check_eval_points(t, horizon: float, atol: float = 1e-9) -> np.ndarray:
    """Coerce evaluation times to a float array inside [0, horizon]."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.ndim != 1:
        raise ValueError(f"evaluation times must be scalar or 1-d, got shape {t.shape}")
    if t.size and (t.min() < -atol or t.max() > horizon + atol):
        raise ValueError(
            f"evaluation times must lie in [0, {horizon}], got range "
            f"[{t.min()}, {t.max()}]"
        )
    return np.clip(t, 0.0, horizon)


def check_positive_scalar(name: str, value) -> float:
    """Require a finite, strictly positive scalar."""
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value
