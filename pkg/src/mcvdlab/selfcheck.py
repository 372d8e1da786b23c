"""Built-in verification suite behind the `selftest` CLI subcommand.

Each check pits a module against an independent oracle: the C library's
erfc for the closed-form BER, adaptive quadrature for the Gaussian
integral identity, seeded random fuzz for the dimensionality inequality
and whitening invariance, exhaustive enumeration for the Viterbi detector,
and synthetic Bernoulli data for interval coverage.  Checks are small
enough to finish in seconds; the pytest suite runs heavier versions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .bayes import (
    GaussianClassStats,
    compare_dimensions,
    std_normal_cdf,
    theoretical_ber,
)
from .channel import DiscreteCIR, NoiseModel, ReceivedTrace, TimingConfig, simulate_rx
from .detectors import ViterbiConfig, map_viterbi_detect
from .harness import wilson_interval
from .metrics import ReductionMatrix

_SEED = 0x5EED


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _phi_oracle(x: float) -> float:
    # Std normal CDF via the C library's complementary error function;
    # shares no code with scipy's ndtr path used by the package.
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _random_stats(rng: np.random.Generator, d: int, q_min: float = 1e-2) -> GaussianClassStats:
    basis, _ = np.linalg.qr(rng.normal(size=(d, d)))
    eigs = rng.uniform(0.1, 10.0, size=d)
    sigma = (basis * eigs) @ basis.T
    mu0 = rng.normal(size=d)
    while True:
        mu1 = mu0 + rng.normal(size=d)
        stats = GaussianClassStats(mu0, mu1, (sigma + sigma.T) / 2.0)
        if theoretical_ber(stats).quadratic >= q_min:
            return stats


def check_ber_formula(n_stats: int = 50) -> CheckResult:
    """Closed-form BER against the erfc oracle, scalar case."""
    rng = np.random.default_rng(_SEED)
    worst = 0.0
    for _ in range(n_stats):
        mu0 = rng.normal()
        mu1 = mu0 + rng.uniform(0.05, 5.0)
        var = rng.uniform(0.05, 5.0)
        stats = GaussianClassStats([mu0], [mu1], [[var]])
        expected = _phi_oracle(-abs(mu1 - mu0) / (2.0 * math.sqrt(var)))
        worst = max(worst, abs(theoretical_ber(stats).pe - expected))
    return CheckResult("ber-formula-oracle", worst <= 1e-10, f"max |err| = {worst:.3e}")


def check_ber_monte_carlo(n_stats: int = 5, n_draws: int = 200_000) -> CheckResult:
    """Closed-form BER against direct Monte Carlo classification in 2-D."""
    rng = np.random.default_rng(_SEED + 1)
    ok = True
    detail = []
    for i in range(n_stats):
        stats = _random_stats(rng, 2, q_min=0.05)
        pe = theoretical_ber(stats).pe
        chol = np.linalg.cholesky(stats.sigma)
        half = n_draws // 2
        a = stats.solve(stats.mu1 - stats.mu0)
        c = 0.5 * (stats.mu1 @ stats.solve(stats.mu1) - stats.mu0 @ stats.solve(stats.mu0))
        z0 = stats.mu0 + rng.normal(size=(half, 2)) @ chol.T
        z1 = stats.mu1 + rng.normal(size=(half, 2)) @ chol.T
        errors = int(np.sum(z0 @ a - c >= 0)) + int(np.sum(z1 @ a - c < 0))
        emp = errors / (2 * half)
        sd = math.sqrt(max(pe * (1 - pe), 1e-12) / (2 * half))
        if abs(emp - pe) > 3 * sd:
            ok = False
            detail.append(f"stats {i}: |{emp:.5f} - {pe:.5f}| > 3x{sd:.1e}")
    return CheckResult("ber-monte-carlo", ok, "; ".join(detail) or "all within 3 sigma")


def check_integral_identity(n_draws: int = 20) -> CheckResult:
    """integral of phi(z) Phi(a z + b) dz == Phi(b / sqrt(1 + a^2))."""
    rng = np.random.default_rng(_SEED + 2)
    worst = 0.0
    for _ in range(n_draws):
        a = rng.uniform(-4.0, 4.0)
        b = rng.uniform(-4.0, 4.0)
        val, _ = quad(
            lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * std_normal_cdf(a * z + b),
            -np.inf,
            np.inf,
        )
        worst = max(worst, abs(val - std_normal_cdf(b / math.sqrt(1 + a * a))))
    return CheckResult("integral-identity", worst <= 1e-8, f"max |err| = {worst:.3e}")


def check_dimension_monotonicity(n_draws: int = 200) -> CheckResult:
    """Projections never lower the closed-form error probability."""
    rng = np.random.default_rng(_SEED + 3)
    worst = -np.inf
    for _ in range(n_draws):
        d = int(rng.integers(2, 6))
        stats = _random_stats(rng, d)
        d1 = int(rng.integers(1, d + 1))
        A = ReductionMatrix(rng.normal(size=(d1, d)))
        pe_full, pe_reduced = compare_dimensions(stats, A)
        worst = max(worst, pe_full - pe_reduced)
    return CheckResult("dimension-monotonicity", worst <= 1e-12, f"max pe_full - pe_reduced = {worst:.3e}")


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def check_whitening_invariance(n_draws: int = 50) -> CheckResult:
    """q and pe are invariant under any invertible linear re-coordinate."""
    rng = np.random.default_rng(_SEED + 4)
    worst = 0.0
    for _ in range(n_draws):
        d = int(rng.integers(2, 5))
        stats = _random_stats(rng, d)
        eigs, basis = np.linalg.eigh(stats.sigma)
        white = basis / np.sqrt(eigs)  # columns scale to unit variance
        T = white.T
        wstats = GaussianClassStats(T @ stats.mu0, T @ stats.mu1, _sym(T @ stats.sigma @ T.T))
        worst = max(worst, abs(theoretical_ber(stats).pe - theoretical_ber(wstats).pe))
    return CheckResult("whitening-invariance", worst <= 1e-10, f"max |pe diff| = {worst:.3e}")


def _brute_force_map(trace: ReceivedTrace, cfg: ViterbiConfig) -> np.ndarray:
    """Enumerate every bit sequence; independent convolution, same ranking."""
    K = trace.n_symbols
    M = trace.timing.M
    best_bits, best_llh = None, -np.inf
    for code in range(1 << K):
        bits = np.array([(code >> k) & 1 for k in range(K)], dtype=np.int64)
        up = np.zeros(K * M)
        up[np.arange(K) * M] = trace.Q * bits
        clean = np.convolve(up, cfg.cir.taps)[: K * M]
        resid = trace.samples - clean
        llh = -0.5 * float(resid @ resid) / cfg.sigma2
        if llh > best_llh:
            best_bits, best_llh = bits, llh
    return best_bits


def check_viterbi_bruteforce(n_draws: int = 40) -> CheckResult:
    """Trellis search equals exhaustive enumeration on short traces."""
    rng = np.random.default_rng(_SEED + 5)
    timing = TimingConfig(Tb=1.0, M=8)
    mismatches = 0
    for _ in range(n_draws):
        K = int(rng.integers(1, 9))
        L = int(rng.integers(1, min(3, K) + 1))
        taps = rng.uniform(0.0, 1.0, size=L * timing.M)
        cir = DiscreteCIR(taps, M=timing.M, L=L)
        sigma2 = float(rng.uniform(0.05, 1.0))
        bits = rng.integers(0, 2, size=K)
        trace = simulate_rx(bits, 1.0, cir, NoiseModel("gaussian", sigma2), timing, rng.integers(2**32))
        vcfg = ViterbiConfig(cir, sigma2, L)
        if not np.array_equal(map_viterbi_detect(trace, vcfg), _brute_force_map(trace, vcfg)):
            mismatches += 1
    return CheckResult("viterbi-bruteforce", mismatches == 0, f"{mismatches} mismatches in {n_draws} draws")


def check_wilson_coverage(n_reps: int = 1000, n: int = 400, p: float = 0.05) -> CheckResult:
    """95% interval covers the true proportion in at least 93% of reps."""
    rng = np.random.default_rng(_SEED + 6)
    covered = 0
    for _ in range(n_reps):
        errors = int(rng.binomial(n, p))
        lo, hi = wilson_interval(errors, n)
        covered += int(lo <= p <= hi)
    rate = covered / n_reps
    return CheckResult("wilson-coverage", rate >= 0.93, f"coverage = {rate:.3f}")


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_ber_formula,
    check_ber_monte_carlo,
    check_integral_identity,
    check_dimension_monotonicity,
    check_whitening_invariance,
    check_viterbi_bruteforce,
    check_wilson_coverage,
)


def run_all() -> list[CheckResult]:
    return [check() for check in CHECKS]
