"""Gaussian two-class decision theory for metric vectors.

The two bit hypotheses are modelled as d-variate normals with class means
mu0, mu1 and a shared covariance.  Under equal priors the optimal decision
statistic is linear,

    G(z) = (mu1 - mu0)' S^-1 z - (mu1' S^-1 mu1 - mu0' S^-1 mu0) / 2,

decide 1 when G(z) >= 0.  Its error probability has the closed form
Phi(-sqrt(q)/2) with q = (mu1 - mu0)' S^-1 (mu1 - mu0), which is what
theoretical_ber returns.  Projecting z with any full-row-rank matrix can
only shrink q, so the d-dimensional detector never does worse than any
linear reduction of it; compare_dimensions exposes that comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtr

from .metrics import ReductionMatrix

_MIN_EIG = 1e-12
_RIDGE_REL = 1e-9


@dataclass(frozen=True)
class GaussianClassStats:
    """Class means and shared covariance of the metric vector.

    The covariance must be symmetric positive definite; the Cholesky
    factor is computed once at construction and reused by every solve.
    """

    mu0: np.ndarray
    mu1: np.ndarray
    sigma: np.ndarray

    def __post_init__(self) -> None:
        mu0 = np.asarray(self.mu0, dtype=float).ravel()
        mu1 = np.asarray(self.mu1, dtype=float).ravel()
        sigma = np.asarray(self.sigma, dtype=float)
        d = mu0.size
        if mu1.size != d or sigma.shape != (d, d):
            raise ValueError("mu0, mu1 and sigma dimensions disagree")
        if not (np.all(np.isfinite(mu0)) and np.all(np.isfinite(mu1)) and np.all(np.isfinite(sigma))):
            raise ValueError("stats must be finite")
        if not np.allclose(sigma, sigma.T, rtol=1e-8, atol=1e-12 * max(1.0, float(np.abs(sigma).max()))):
            raise ValueError("sigma must be symmetric")
        sigma = (sigma + sigma.T) / 2.0
        if float(np.linalg.eigvalsh(sigma).min()) <= _MIN_EIG:
            raise ValueError("sigma must be positive definite (min eigenvalue above 1e-12)")
        chol = cho_factor(sigma, lower=True)
        for arr in (mu0, mu1, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "mu1", mu1)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "_chol", chol)

    @property
    def d(self) -> int:
        return int(self.mu0.size)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """sigma^-1 @ rhs via the cached Cholesky factor."""
        return cho_solve(self._chol, rhs)

    @property
    def log_det(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self._chol[0]))))


@dataclass(frozen=True)
class BerReport:
    """Closed-form error probability and the quadratic separation q."""

    pe: float
    quadratic: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.pe <= 0.5):
            raise ValueError("pe must lie in [0, 0.5]")
        if self.quadratic < 0.0:
            raise ValueError("quadratic separation must be non-negative")


def estimate_stats(samples0: np.ndarray, samples1: np.ndarray) -> GaussianClassStats:
    """Class means plus pooled covariance from labelled metric vectors.

    The pooled covariance divides the summed within-class scatter by
    n0 + n1 - 2 and is stabilised with a ridge of 1e-9 * trace/d (floored
    at 1e-9 when the scatter is exactly zero, e.g. repeated identical
    samples) so downstream factorizations stay positive definite.
    """
    s0 = np.atleast_2d(np.asarray(samples0, dtype=float))
    s1 = np.atleast_2d(np.asarray(samples1, dtype=float))
    if s0.shape[1] != s1.shape[1]:
        raise ValueError("class samples disagree on dimension")
    n0, n1 = s0.shape[0], s1.shape[0]
    if n0 < 2 or n1 < 2:
        raise ValueError("need at least two samples per class")
    d = s0.shape[1]
    mu0 = s0.mean(axis=0)
    mu1 = s1.mean(axis=0)
    c0 = s0 - mu0
    c1 = s1 - mu1
    pooled = (c0.T @ c0 + c1.T @ c1) / (n0 + n1 - 2)
    ridge = _RIDGE_REL * float(np.trace(pooled)) / d
    if ridge <= 0.0:
        ridge = 1e-9
    return GaussianClassStats(mu0, mu1, pooled + ridge * np.eye(d))


def log_likelihood(z: np.ndarray, stats: GaussianClassStats, j: int) -> float:
    """Log density of z under class j in {0, 1}."""
    if j not in (0, 1):
        raise ValueError("class index must be 0 or 1")
    z = np.asarray(z, dtype=float).ravel()
    if z.size != stats.d:
        raise ValueError("vector dimension does not match the stats")
    mu = stats.mu1 if j == 1 else stats.mu0
    diff = z - mu
    maha = float(diff @ stats.solve(diff))
    return -0.5 * (stats.d * math.log(2.0 * math.pi) + stats.log_det + maha)


def discriminant(stats: GaussianClassStats) -> tuple[np.ndarray, float]:
    """Weights a and offset c of the linear statistic G(z) = a'z - c."""
    a = stats.solve(stats.mu1 - stats.mu0)
    c = 0.5 * (float(stats.mu1 @ stats.solve(stats.mu1)) - float(stats.mu0 @ stats.solve(stats.mu0)))
    return a, c


def decision_value(z: np.ndarray, stats: GaussianClassStats) -> float:
    z = np.asarray(z, dtype=float).ravel()
    if z.size != stats.d:
        raise ValueError("vector dimension does not match the stats")
    a, c = discriminant(stats)
    return float(a @ z - c)


def std_normal_cdf(x: float) -> float:
    return float(ndtr(x))


def quadratic_separation(stats: GaussianClassStats) -> float:
    diff = stats.mu1 - stats.mu0
    return max(float(diff @ stats.solve(diff)), 0.0)


def theoretical_ber(stats: GaussianClassStats) -> BerReport:
    """Equal-prior error probability of the optimal linear rule."""
    q = quadratic_separation(stats)
    return BerReport(pe=std_normal_cdf(-0.5 * math.sqrt(q)), quadratic=q)


def reduce_stats(stats: GaussianClassStats, A: ReductionMatrix) -> GaussianClassStats:
    """Class stats of the projected vector A z."""
    mat = A.matrix
    if mat.shape[1] != stats.d:
        raise ValueError("reduction matrix width does not match the stats")
    sig = mat @ stats.sigma @ mat.T
    return GaussianClassStats(mat @ stats.mu0, mat @ stats.mu1, (sig + sig.T) / 2.0)


def compare_dimensions(stats: GaussianClassStats, A: ReductionMatrix) -> tuple[float, float]:
    """(pe of the full vector, pe after projecting with A).

    The projection can only lose separation, so the first element never
    exceeds the second beyond numerical round-off (1e-12).
    """
    pe_full = theoretical_ber(stats).pe
    pe_reduced = theoretical_ber(reduce_stats(stats, A)).pe
    return pe_full, pe_reduced
