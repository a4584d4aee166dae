"""Frechet distance between Gaussian feature summaries.

Matrix square root via eigendecomposition of the symmetrized product with
eigenvalues clamped at zero (the usual stabilization); slightly negative
results from rounding are clamped to zero with a warning.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import NumericalError, RejectedInputError

PSD_TOL = 1e-6
NEG_TOL = -1e-6


@dataclass
class FeatureStats:
    mu: np.ndarray      # (F,)
    sigma: np.ndarray   # (F, F)
    count: int


def feature_stats(features: np.ndarray) -> FeatureStats:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise RejectedInputError(f"features must be (N, F), got {x.shape}")
    n, f = x.shape
    if n < f:
        warnings.warn(f"only {n} samples for {f}-dim feature stats; "
                      "covariance will be rank-deficient", stacklevel=2)
    mu = x.mean(axis=0)
    if n > 1:
        sigma = np.cov(x, rowvar=False, ddof=1)
    else:
        sigma = np.zeros((f, f))
    sigma = np.atleast_2d(sigma)
    return FeatureStats(mu=mu, sigma=(sigma + sigma.T) / 2.0, count=n)


def _psd_sqrt(mat: np.ndarray, what: str) -> np.ndarray:
    sym = (mat + mat.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    scale = max(1.0, float(np.abs(vals).max()) if vals.size else 1.0)
    if vals.min() < -PSD_TOL * scale:
        raise NumericalError(
            f"{what} is not PSD within tolerance: min eigenvalue "
            f"{vals.min():.3e} at scale {scale:.3e}")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def frechet_distance(a: FeatureStats, b: FeatureStats) -> float:
    """d^2 = ||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^{1/2})."""
    if a.mu.shape != b.mu.shape:
        raise RejectedInputError(
            f"feature dims differ: {a.mu.shape} vs {b.mu.shape}")
    sqrt_a = _psd_sqrt(a.sigma, "first covariance")
    _psd_sqrt(b.sigma, "second covariance")  # validation only
    inner = sqrt_a @ b.sigma @ sqrt_a
    inner = (inner + inner.T) / 2.0
    vals = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    tr_sqrt = float(np.sqrt(vals).sum())
    diff = a.mu - b.mu
    d2 = float(diff @ diff + np.trace(a.sigma) + np.trace(b.sigma) - 2.0 * tr_sqrt)
    if d2 < 0:
        if d2 < NEG_TOL:
            warnings.warn(f"frechet distance clamped from {d2:.3e} to 0",
                          stacklevel=2)
        d2 = 0.0
    return d2
