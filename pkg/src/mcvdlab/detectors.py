"""Symbol detectors for the diffusive OOK link.

Non-coherent detectors work on the per-symbol metric vectors and need no
channel knowledge beyond a labelled pilot block:

* PNN: a probabilistic neural network, i.e. a Parzen-window classifier.
  Every pilot metric vector becomes a pattern; a Gaussian kernel
  exp(-||z - p||^2 / (2*varsigma^2)) is summed per class and the larger
  sum wins (ties go to bit 1).  Training is a single pass over the pilot
  and the pattern-layer kernels are independent of each other, so they
  evaluate in parallel (vectorized here); per decision the cost is linear
  in the number of patterns.
* Gaussian plug-in: the linear decision statistic of bayes applied with
  pilot-estimated class stats.
* Linear threshold: the scalar sum of the three metrics against a
  threshold obtained from the 1-D plug-in rule on the pilot.

The coherent baseline is a MAP sequence detector: a Viterbi pass over the
2^(L-1) states spanned by the last L-1 bits, Gaussian branch metrics over
each symbol's M samples.  It consumes a DiscreteCIR, either the true one
(genie) or one recovered from the pilot by least squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bayes
from .channel import DiscreteCIR, ReceivedTrace, noiseless_rx
from .metrics import MetricConfig, extract_all

_SCORE_CHUNK = 2048


@dataclass(frozen=True)
class PilotBlock:
    """A labelled training transmission: known bits plus their trace."""

    bits: np.ndarray
    trace: ReceivedTrace

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits, dtype=np.int64)
        if not np.array_equal(bits, self.trace.bits):
            raise ValueError("pilot bits must match the trace bits")
        if bits.min() == bits.max():
            raise ValueError("pilot must contain both bit values")
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)


@dataclass(frozen=True)
class PatternLayer:
    """Trained PNN state: patterns, one-hot class indicators, kernel width."""

    patterns: np.ndarray
    class_indicator: np.ndarray
    varsigma2: float

    def __post_init__(self) -> None:
        P = np.asarray(self.patterns, dtype=float)
        ind = np.asarray(self.class_indicator, dtype=float)
        if P.ndim != 2 or P.shape[0] == 0:
            raise ValueError("patterns must be a non-empty (N, d) array")
        if ind.shape != (P.shape[0], 2):
            raise ValueError("class indicator must be (N, 2)")
        if not np.all((ind == 0.0) | (ind == 1.0)) or not np.all(ind.sum(axis=1) == 1.0):
            raise ValueError("indicator rows must be one-hot")
        if not self.varsigma2 > 0:
            raise ValueError("varsigma2 must be positive")
        P = P.copy()
        ind = ind.copy()
        P.setflags(write=False)
        ind.setflags(write=False)
        object.__setattr__(self, "patterns", P)
        object.__setattr__(self, "class_indicator", ind)

    @property
    def n_patterns(self) -> int:
        return int(self.patterns.shape[0])

    @classmethod
    def from_patterns(cls, patterns: np.ndarray, bits: np.ndarray) -> "PatternLayer":
        """Build the layer from labelled metric vectors.

        Both classes must appear (twice each, so the pooled covariance that
        sets the kernel width is defined).
        """
        P = np.asarray(patterns, dtype=float)
        b = np.asarray(bits, dtype=np.int64)
        if P.ndim != 2 or P.shape[0] != b.size:
            raise ValueError("patterns and bits disagree on length")
        stats = bayes.estimate_stats(P[b == 0], P[b == 1])
        ind = np.zeros((P.shape[0], 2))
        ind[np.arange(P.shape[0]), b] = 1.0
        return cls(P, ind, smooth_param(stats.sigma))


@dataclass(frozen=True)
class ViterbiConfig:
    """Everything the MAP sequence detector needs: CIR, noise power, memory."""

    cir: DiscreteCIR
    sigma2: float
    L: int

    def __post_init__(self) -> None:
        if not self.sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        if self.L != self.cir.L:
            raise ValueError("L must equal the CIR symbol span")


def smooth_param(sigma: np.ndarray) -> float:
    """Kernel width |sigma|^(1/d) from a covariance matrix.

    Computed from the Cholesky factor, so non-positive-definite input
    raises instead of producing a negative or complex width.
    """
    sigma = np.asarray(sigma, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError("sigma must be square")
    try:
        chol = np.linalg.cholesky((sigma + sigma.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise ValueError("sigma must be positive definite") from exc
    # |sigma|^(1/d) = exp(mean(log eig)) = exp(2 * mean(log diag chol))
    return float(math.exp(2.0 * np.mean(np.log(np.diag(chol)))))


def kernel(z: np.ndarray, pattern: np.ndarray, varsigma2: float) -> float:
    """Gaussian pattern kernel; equals 1 exactly when z is the pattern."""
    if not varsigma2 > 0:
        raise ValueError("varsigma2 must be positive")
    z = np.asarray(z, dtype=float).ravel()
    p = np.asarray(pattern, dtype=float).ravel()
    if z.size != p.size:
        raise ValueError("vector and pattern dimensions disagree")
    d2 = float(np.sum((z - p) ** 2))
    return math.exp(-d2 / (2.0 * varsigma2))


def class_scores(z: np.ndarray, layer: PatternLayer) -> tuple[float, float]:
    """Summed kernel activations (class 0, class 1) for one vector.

    The shared normalization constant of the Gaussian kernel is omitted;
    it cancels when the two sums are compared.
    """
    z = np.asarray(z, dtype=float).ravel()
    if z.size != layer.patterns.shape[1]:
        raise ValueError("vector dimension does not match the patterns")
    d2 = np.sum((layer.patterns - z) ** 2, axis=1)
    k = np.exp(-d2 / (2.0 * layer.varsigma2))
    s = k @ layer.class_indicator
    return float(s[0]), float(s[1])


def parzen_density(z: np.ndarray, patterns: np.ndarray, varsigma2: float) -> float:
    """Normalized Parzen window density estimate at z."""
    z = np.asarray(z, dtype=float).ravel()
    P = np.asarray(patterns, dtype=float)
    if P.ndim != 2 or P.shape[1] != z.size:
        raise ValueError("patterns must be (N, d) matching z")
    if not varsigma2 > 0:
        raise ValueError("varsigma2 must be positive")
    d = z.size
    d2 = np.sum((P - z) ** 2, axis=1)
    norm = (2.0 * math.pi * varsigma2) ** (d / 2.0)
    return float(np.mean(np.exp(-d2 / (2.0 * varsigma2))) / norm)


def pnn_train(pilot: PilotBlock, cfg: MetricConfig) -> PatternLayer:
    """One-pass PNN training: extract pilot metrics, store them as patterns.

    The kernel width is |S|^(1/d) of the pooled within-class covariance of
    the patterns.
    """
    return PatternLayer.from_patterns(extract_all(pilot.trace, cfg), pilot.bits)


def _scores_batch(Z: np.ndarray, layer: PatternLayer) -> np.ndarray:
    """(K, 2) kernel sums; chunked so the distance matrix stays small."""
    P = layer.patterns
    p_sq = np.sum(P**2, axis=1)
    out = np.empty((Z.shape[0], 2))
    for a in range(0, Z.shape[0], _SCORE_CHUNK):
        zc = Z[a : a + _SCORE_CHUNK]
        d2 = np.maximum(np.sum(zc**2, axis=1)[:, None] + p_sq[None, :] - 2.0 * zc @ P.T, 0.0)
        out[a : a + zc.shape[0]] = np.exp(-d2 / (2.0 * layer.varsigma2)) @ layer.class_indicator
    return out


def pnn_detect(trace: ReceivedTrace, layer: PatternLayer, cfg: MetricConfig) -> np.ndarray:
    """Classify every symbol of a trace; Delta1 >= Delta0 decides bit 1."""
    Z = extract_all(trace, cfg)
    if Z.shape[1] != layer.patterns.shape[1]:
        raise ValueError("metric dimension does not match the patterns")
    s = _scores_batch(Z, layer)
    return (s[:, 1] >= s[:, 0]).astype(np.int64)


def gaussian_plugin_detect(trace: ReceivedTrace, stats: bayes.GaussianClassStats, cfg: MetricConfig) -> np.ndarray:
    """Linear Gaussian rule with estimated stats; G(z) >= 0 decides bit 1."""
    Z = extract_all(trace, cfg)
    if Z.shape[1] != stats.d:
        raise ValueError("metric dimension does not match the stats")
    a, c = bayes.discriminant(stats)
    return (Z @ a - c >= 0.0).astype(np.int64)


def linear_detect(trace: ReceivedTrace, threshold: float, cfg: MetricConfig) -> np.ndarray:
    """Sum of the three metrics against a scalar threshold."""
    if math.isnan(threshold):
        raise ValueError("threshold must not be NaN")
    Z = extract_all(trace, cfg)
    return (Z.sum(axis=1) >= threshold).astype(np.int64)


def linear_threshold_from_pilot(pilot: PilotBlock, cfg: MetricConfig) -> float:
    """1-D plug-in threshold: midpoint of the class means of the metric sum.

    With a shared variance the 1-D Gaussian rule decides at the midpoint,
    so no variance estimate is needed.
    """
    sums = extract_all(pilot.trace, cfg).sum(axis=1)
    m0 = float(sums[pilot.bits == 0].mean())
    m1 = float(sums[pilot.bits == 1].mean())
    return 0.5 * (m0 + m1)


def map_viterbi_detect(trace: ReceivedTrace, cfg: ViterbiConfig) -> np.ndarray:
    """MAP sequence detection over the ISI trellis.

    State = the last L-1 bits; branch metric = Gaussian log-likelihood of
    the symbol's M samples given the bit window (terms common to all
    branches dropped).  Bits before the trace are zero, so the trellis
    starts in the all-zero state.  Survivor ties resolve toward the
    predecessor whose oldest bit is 0.
    """
    if cfg.cir.M != trace.timing.M:
        raise ValueError("cir and trace disagree on samples per bit")
    if cfg.cir.taps.size > trace.samples.size:
        raise ValueError("CIR span exceeds the trace length")
    M = trace.timing.M
    K = trace.n_symbols
    L = cfg.L
    W = 1 << L

    # window -> expected symbol mean: bit j of the window multiplies the
    # taps L segments j symbols back
    base = trace.Q * cfg.cir.taps.reshape(L, M)
    wbits = ((np.arange(W)[:, None] >> np.arange(L)[None, :]) & 1).astype(float)
    mu = wbits @ base
    Y = trace.samples.reshape(K, M)
    sse = np.sum(Y**2, axis=1)[:, None] - 2.0 * Y @ mu.T + np.sum(mu**2, axis=1)[None, :]
    llh = -0.5 * sse / cfg.sigma2

    if L == 1:
        return (llh[:, 1] > llh[:, 0]).astype(np.int64)

    S = 1 << (L - 1)
    half = S >> 1
    sprime = np.arange(S)
    newbit = sprime & 1
    pred0 = sprime >> 1
    pred1 = pred0 + half
    w0 = newbit + 2 * pred0
    w1 = newbit + 2 * pred1

    metric = np.full(S, -np.inf)
    metric[0] = 0.0
    choose = np.empty((K, S), dtype=bool)
    for k in range(K):
        cand0 = metric[pred0] + llh[k, w0]
        cand1 = metric[pred1] + llh[k, w1]
        pick1 = cand1 > cand0
        metric = np.where(pick1, cand1, cand0)
        choose[k] = pick1

    bits = np.empty(K, dtype=np.int64)
    s = int(np.argmax(metric))
    for k in range(K - 1, -1, -1):
        bits[k] = s & 1
        s = (s >> 1) + (half if choose[k, s] else 0)
    return bits


def cir_pilot_estimate(pilot: PilotBlock, L: int) -> DiscreteCIR:
    """Least-squares CIR taps from a labelled pilot.

    The model is linear in the taps, so the estimate is an ordinary
    least-squares solve of the stacked sample equations; negative solution
    entries are clamped to zero.  Needs a pilot at least 2L symbols long
    and a full-rank design (an all-one or otherwise degenerate pilot has
    unidentifiable taps).
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    if pilot.bits.size < 2 * L:
        raise ValueError("pilot must span at least 2L symbols")
    M = pilot.trace.timing.M
    n = pilot.bits.size * M
    p = L * M
    X = np.zeros((n, p))
    cols = np.arange(p)
    for l in np.flatnonzero(pilot.bits):
        span = min(p, n - l * M)
        X[l * M + cols[:span], cols[:span]] += pilot.trace.Q
    h, _, rank, _ = np.linalg.lstsq(X, pilot.trace.samples, rcond=None)
    if rank < p:
        raise ValueError("pilot design matrix is rank deficient")
    return DiscreteCIR(np.maximum(h, 0.0), M=M, L=L)


def pilot_noise_variance(pilot: PilotBlock, cir: DiscreteCIR) -> float:
    """Residual noise variance of a pilot under a fitted CIR."""
    clean = noiseless_rx(pilot.bits, pilot.trace.Q, cir)
    resid = pilot.trace.samples - clean
    dof = max(resid.size - cir.taps.size, 1)
    return float(resid @ resid) / dof
