"""Diffusive molecular OOK link: impulse response, sampling, trace synthesis.

A point transmitter releases Q molecules per bit into a fluid medium with
diffusion coefficient D, optional bulk drift v toward the receiver, and
first-order molecule degradation at rate beta.  Two receiver types are
supported:

* ``passive``: a transparent sphere of volume V that reports the local
  concentration, so the impulse response is the Green's function of the
  advection-diffusion-decay equation scaled by V.
* ``absorbing``: a fully absorbing sphere of radius R at distance r; the
  impulse response is the first-hitting-time density scaled by R/(R+r).

Units are micrometres and seconds throughout (D in um^2/s, v in um/s).
Configuration layers that accept velocities in m/s must convert before
constructing :class:`ChannelParams`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PASSIVE = "passive"
ABSORBING = "absorbing"

# log of the smallest positive normal double; below this we flush to zero
_LOG_TINY = math.log(2.2250738585072014e-308)


@dataclass(frozen=True)
class ChannelParams:
    """Physical parameters of one transmitter/receiver pair.

    V defaults to the volume of the sphere of radius R, which is the usual
    choice for a passive receiver.  It is ignored by the absorbing branch.
    """

    mode: str
    R: float
    r: float
    D: float
    v: float = 0.0
    beta: float = 0.0
    V: float | None = None

    def __post_init__(self) -> None:
        if self.mode not in (PASSIVE, ABSORBING):
            raise ValueError(f"unknown receiver mode {self.mode!r}")
        if not (self.R > 0 and self.r > 0 and self.D > 0):
            raise ValueError("R, r and D must be positive")
        if self.v < 0 or self.beta < 0:
            raise ValueError("v and beta must be non-negative")
        if self.V is None:
            object.__setattr__(self, "V", 4.0 / 3.0 * math.pi * self.R**3)
        if self.mode == PASSIVE and not self.V > 0:
            raise ValueError("passive receiver needs V > 0")


@dataclass(frozen=True)
class TimingConfig:
    """Symbol interval Tb split into M uniform samples, Ts = Tb/M.

    M must be a multiple of 4 so the metric neighbourhood width M/4 is a
    whole number of samples.
    """

    Tb: float
    M: int

    def __post_init__(self) -> None:
        if not self.Tb > 0:
            raise ValueError("Tb must be positive")
        if self.M < 8 or self.M % 4 != 0:
            raise ValueError("M must be >= 8 and divisible by 4")

    @property
    def Ts(self) -> float:
        return self.Tb / self.M


@dataclass(frozen=True)
class DiscreteCIR:
    """Sampled impulse response covering L symbol intervals of M taps each.

    Tap i holds the response at t = (i+1)*Ts; the one-sample shift avoids
    evaluating the continuous response at t = 0 where it is singular.
    """

    taps: np.ndarray
    M: int
    L: int

    def __post_init__(self) -> None:
        taps = np.asarray(self.taps, dtype=float)
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if taps.ndim != 1 or taps.size != self.L * self.M:
            raise ValueError("taps must be a flat array of length L*M")
        if not np.all(np.isfinite(taps)) or np.any(taps < 0):
            raise ValueError("taps must be finite and non-negative")
        taps = taps.copy()
        taps.setflags(write=False)
        object.__setattr__(self, "taps", taps)


@dataclass(frozen=True)
class NoiseModel:
    """Additive receiver noise.

    kind="gaussian" adds i.i.d. zero-mean noise of variance sigma2.
    kind="poisson" replaces each sample with a Poisson count of mean
    sample*counting_scale, rescaled back to concentration units; the mean
    may be non-integer, which the count distribution handles directly.
    """

    kind: str = "gaussian"
    sigma2: float = 0.0
    counting_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "poisson"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        if self.kind == "poisson" and not self.counting_scale > 0:
            raise ValueError("counting_scale must be positive")


@dataclass(frozen=True)
class ReceivedTrace:
    """One simulated transmission: K*M samples plus the bits that made them."""

    samples: np.ndarray
    bits: np.ndarray
    Q: float
    timing: TimingConfig

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=float)
        bits = np.asarray(self.bits, dtype=np.int64)
        if not self.Q > 0:
            raise ValueError("Q must be positive")
        if bits.ndim != 1 or bits.size == 0:
            raise ValueError("bits must be a non-empty vector")
        if np.any((bits != 0) & (bits != 1)):
            raise ValueError("bits must be 0/1")
        if samples.ndim != 1 or samples.size != bits.size * self.timing.M:
            raise ValueError("samples must hold M samples per bit")
        samples = samples.copy()
        samples.setflags(write=False)
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "bits", bits)

    @property
    def n_symbols(self) -> int:
        return int(self.bits.size)

    def symbol(self, k: int) -> np.ndarray:
        if not 0 <= k < self.n_symbols:
            raise IndexError(f"symbol index {k} out of range")
        M = self.timing.M
        return self.samples[k * M : (k + 1) * M]


def cir_eval(params: ChannelParams, t: float) -> float:
    """Continuous impulse response h(t) for t > 0.

    Evaluated in log space so extreme arguments degrade gracefully: when the
    exponential underflows the result is exactly 0.0, never NaN or a
    division blow-up.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    log_decay = -((params.r - params.v * t) ** 2) / (4.0 * params.D * t) - params.beta * t
    if params.mode == PASSIVE:
        log_pref = math.log(params.V) - 1.5 * math.log(4.0 * math.pi * params.D * t)
    else:
        log_pref = (
            math.log(params.R / (params.R + params.r))
            + math.log(params.r)
            - 0.5 * (math.log(4.0 * math.pi * params.D) + 3.0 * math.log(t))
        )
    log_h = log_pref + log_decay
    if not math.isfinite(log_h) or log_h < _LOG_TINY:
        return 0.0
    return math.exp(log_h)


def discretize_cir(params: ChannelParams, timing: TimingConfig, L: int) -> DiscreteCIR:
    """Sample h at (i+1)*Ts for i = 0 .. L*M-1."""
    if L < 1:
        raise ValueError("L must be at least 1")
    Ts = timing.Ts
    taps = np.array([cir_eval(params, (i + 1) * Ts) for i in range(L * timing.M)])
    return DiscreteCIR(taps, M=timing.M, L=L)


def default_isi_length(
    params: ChannelParams,
    timing: TimingConfig,
    l_max: int = 10,
    rel_cutoff: float = 1e-6,
) -> int:
    """Number of symbol intervals the response meaningfully spans.

    The response is scanned out to l_max symbols and truncated after the
    last tap at or above rel_cutoff of the peak, rounded up to a whole
    symbol.  Heavy diffusive tails often exceed the cutoff everywhere, in
    which case the cap l_max applies.
    """
    if l_max < 1:
        raise ValueError("l_max must be at least 1")
    probe = discretize_cir(params, timing, l_max)
    peak = float(probe.taps.max())
    if peak <= 0.0:
        return 1
    above = np.flatnonzero(probe.taps >= rel_cutoff * peak)
    last = int(above[-1]) if above.size else 0
    return max(1, -(-(last + 1) // timing.M))


def noiseless_rx(bits: np.ndarray, Q: float, cir: DiscreteCIR, n_samples: int | None = None) -> np.ndarray:
    """Superpose Q-scaled CIR copies at each 1-bit; no noise."""
    bits = np.asarray(bits, dtype=np.int64)
    total = bits.size * cir.M if n_samples is None else int(n_samples)
    clean = np.zeros(total)
    span_full = cir.taps.size
    for l in np.flatnonzero(bits):
        start = l * cir.M
        if start >= total:
            break
        span = min(span_full, total - start)
        clean[start : start + span] += Q * cir.taps[:span]
    return clean


def simulate_rx(
    bits: np.ndarray,
    Q: float,
    cir: DiscreteCIR,
    noise: NoiseModel,
    timing: TimingConfig,
    seed,
) -> ReceivedTrace:
    """Synthesize the received trace for a bit vector.

    The noiseless part is linear in the bits: sample i collects
    Q*bits[l]*taps[i-l*M] over every l whose response window covers i.
    Identical (bits, Q, cir, noise, timing, seed) always produce the
    identical trace; seed is anything numpy's default_rng accepts.
    """
    if cir.M != timing.M:
        raise ValueError("cir and timing disagree on samples per bit")
    if not Q > 0:
        raise ValueError("Q must be positive")
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 1 or bits.size == 0:
        raise ValueError("bits must be a non-empty vector")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0/1")
    clean = noiseless_rx(bits, Q, cir)
    rng = np.random.default_rng(seed)
    if noise.kind == "gaussian":
        samples = clean + rng.normal(0.0, math.sqrt(noise.sigma2), clean.size)
    else:
        scale = noise.counting_scale
        samples = rng.poisson(clean * scale).astype(float) / scale
    return ReceivedTrace(samples, bits, Q, timing)


def snr_to_sigma(snr_db: float, Q: float, cir: DiscreteCIR) -> float:
    """Noise std for a target SNR.

    Signal power is the mean of (Q*taps[i])^2 over the first symbol
    interval, i.e. the power an isolated 1-bit delivers during its own
    slot.  SNR is the ratio of that power to the noise variance.
    """
    first = Q * cir.taps[: cir.M]
    p_sig = float(np.mean(first**2))
    if p_sig <= 0.0:
        raise ValueError("signal power is zero over the first symbol")
    return math.sqrt(p_sig * 10.0 ** (-snr_db / 10.0))
