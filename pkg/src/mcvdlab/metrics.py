"""Per-symbol detection metrics that need no channel state information.

Each received symbol k is summarized by a 3-vector z_k:

* z1, rising edge: mean over the w samples around the in-symbol maximum
  minus the mean over the first w samples.  Positive when the slot holds
  a fresh release, near zero or negative on a decaying tail.
* z2, inflexion: mean of the current symbol's first w samples minus the
  mean of the previous symbol's last w samples, a discrete slope across
  the boundary.
* z3, concentration difference: current symbol mean minus previous
  symbol mean.

w is a quarter of the samples per symbol.  Symbol 0 has no predecessor;
its "previous symbol" is all zeros, matching a channel that was empty
before the transmission began.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ReceivedTrace, TimingConfig


@dataclass(frozen=True)
class MetricConfig:
    M: int
    w: int | None = None

    def __post_init__(self) -> None:
        if self.M < 8 or self.M % 4 != 0:
            raise ValueError("M must be >= 8 and divisible by 4")
        if self.w is None:
            object.__setattr__(self, "w", self.M // 4)
        if self.w != self.M // 4 or self.w < 2:
            raise ValueError("w must equal M/4 and be at least 2")

    @classmethod
    def from_timing(cls, timing: TimingConfig) -> "MetricConfig":
        return cls(M=timing.M)


@dataclass(frozen=True)
class ReductionMatrix:
    """A d1 x d linear map of full row rank, for projecting metric vectors."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        A = np.asarray(self.matrix, dtype=float)
        if A.ndim == 1:
            A = A[None, :]
        if A.ndim != 2 or A.shape[0] > A.shape[1]:
            raise ValueError("matrix must be d1 x d with d1 <= d")
        if np.linalg.matrix_rank(A, tol=1e-10) != A.shape[0]:
            raise ValueError("matrix must have full row rank")
        A = A.copy()
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    @property
    def d1(self) -> int:
        return int(self.matrix.shape[0])


def _peak_window_start(symbol: np.ndarray, cfg: MetricConfig) -> int:
    # width-w window centered on the argmax (ties take the earliest sample),
    # shifted as needed to stay inside the symbol
    m = int(np.argmax(symbol))
    return min(max(m - cfg.w // 2, 0), cfg.M - cfg.w)


def rising_edge(symbol: np.ndarray, cfg: MetricConfig) -> float:
    y = np.asarray(symbol, dtype=float)
    if y.shape != (cfg.M,):
        raise ValueError("symbol must hold exactly M samples")
    start = _peak_window_start(y, cfg)
    return float(np.mean(y[start : start + cfg.w]) - np.mean(y[: cfg.w]))


def inflexion(prev_symbol: np.ndarray, symbol: np.ndarray, cfg: MetricConfig) -> float:
    prev = np.asarray(prev_symbol, dtype=float)
    cur = np.asarray(symbol, dtype=float)
    if prev.shape != (cfg.M,) or cur.shape != (cfg.M,):
        raise ValueError("symbols must hold exactly M samples")
    return float(np.mean(cur[: cfg.w]) - np.mean(prev[cfg.M - cfg.w :]))


def conc_diff(prev_symbol: np.ndarray, symbol: np.ndarray) -> float:
    prev = np.asarray(prev_symbol, dtype=float)
    cur = np.asarray(symbol, dtype=float)
    if prev.shape != cur.shape or prev.ndim != 1:
        raise ValueError("symbols must be vectors of equal length")
    return float(np.mean(cur) - np.mean(prev))


def extract(trace: ReceivedTrace, k: int, cfg: MetricConfig) -> np.ndarray:
    """Metric vector [z1, z2, z3] for symbol k of a trace."""
    if cfg.M != trace.timing.M:
        raise ValueError("metric config and trace disagree on M")
    if not 0 <= k < trace.n_symbols:
        raise IndexError(f"symbol index {k} out of range")
    cur = trace.symbol(k)
    prev = trace.symbol(k - 1) if k > 0 else np.zeros(cfg.M)
    return np.array(
        [rising_edge(cur, cfg), inflexion(prev, cur, cfg), conc_diff(prev, cur)]
    )


def extract_all(trace: ReceivedTrace, cfg: MetricConfig) -> np.ndarray:
    """Metric vectors for every symbol, as a (K, 3) array.

    Row k equals extract(trace, k, cfg); the batched form exists because
    detectors run over ten-thousand-symbol traces.
    """
    if cfg.M != trace.timing.M:
        raise ValueError("metric config and trace disagree on M")
    M, w = cfg.M, cfg.w
    y = trace.samples.reshape(trace.n_symbols, M)
    head = y[:, :w].mean(axis=1)
    tail = y[:, M - w :].mean(axis=1)
    full = y.mean(axis=1)
    am = y.argmax(axis=1)
    start = np.clip(am - w // 2, 0, M - w)
    idx = start[:, None] + np.arange(w)
    peak = np.take_along_axis(y, idx, axis=1).mean(axis=1)
    prev_tail = np.concatenate(([0.0], tail[:-1]))
    prev_full = np.concatenate(([0.0], full[:-1]))
    return np.column_stack([peak - head, head - prev_tail, full - prev_full])


def linear_combine(z: np.ndarray) -> float:
    """Collapse a 3-vector of metrics to their sum (the 1-D statistic)."""
    z = np.asarray(z, dtype=float)
    if z.shape != (3,):
        raise ValueError("expected a metric 3-vector")
    return float(z.sum())


def reduce(z: np.ndarray, A: ReductionMatrix) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if z.shape != (A.matrix.shape[1],):
        raise ValueError("vector length does not match the reduction matrix")
    return A.matrix @ z
