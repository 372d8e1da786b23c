"""Acceptance gate: one test per release criterion, each printing a
PASS/FAIL line with the realized numbers (run with -s to see them all).

Statistical conventions used throughout:

* sigma of a BER difference on independent counts is
  sqrt(pa(1-pa)/na + pb(1-pb)/nb).
* "non-increasing within 2 sigma" allows ber[i+1] <= ber[i] + 2 sigma.
* "lower by more than 2 sigma" requires the gap to exceed 2 sigma.

Every Monte Carlo run below uses master seed 1, the package default.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from mcvdlab import ChannelParams, TimingConfig
from mcvdlab.bayes import (
    GaussianClassStats,
    compare_dimensions,
    discriminant,
    std_normal_cdf,
    theoretical_ber,
)
from mcvdlab.channel import (
    DiscreteCIR,
    NoiseModel,
    default_isi_length,
    discretize_cir,
    simulate_rx,
    snr_to_sigma,
)
from mcvdlab.cli import main
from mcvdlab.detectors import ViterbiConfig, map_viterbi_detect
from mcvdlab.harness import ExperimentConfig, calibrate_stats, run_point, run_sweep
from mcvdlab.metrics import ReductionMatrix

MASTER_SEED = 1
Q = 1e4
SNR_GRID = (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0)
TB_GRID = (3e-4, 5e-4, 7e-4, 9e-4, 1.1e-3)
TRAIN_GRID = (10.0, 50.0, 100.0, 200.0, 500.0)
SMOOTH_GRID = (1e-3, 1.0, 1e3)
ALL_DETECTORS = ("pnn", "plugin", "linear", "map_genie", "map_pilot")


def report(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {criterion}] {status} - {detail}")
    assert ok, f"criterion {criterion}: {detail}"


def sigma_diff(ra, rb):
    va = ra.ber * (1 - ra.ber) / ra.symbols
    vb = rb.ber * (1 - rb.ber) / rb.symbols
    return math.sqrt(va + vb)


@pytest.fixture(scope="module")
def reference():
    params = ChannelParams(mode="passive", R=0.225, r=2.0, D=5e3, v=1e3, beta=100.0)
    timing = TimingConfig(Tb=3e-4, M=12)
    cir = discretize_cir(params, timing, default_isi_length(params, timing))
    return params, timing, cir


def experiment(reference, axis, values, detectors, trials):
    params, timing, _ = reference
    return ExperimentConfig(
        channel=params,
        timing=timing,
        Q=Q,
        noise_kind="gaussian",
        snr_db=10.0,
        detectors=detectors,
        sweep_axis=axis,
        sweep_values=values,
        pilot_len=200,
        data_len=10_000,
        trials=trials,
        master_seed=MASTER_SEED,
    )


@pytest.fixture(scope="module")
def pinned_rows(reference):
    """All five detectors at SNR 10 dB, Tb 3e-4 s, 100k symbols."""
    cfg = experiment(reference, "snr", (10.0,), ALL_DETECTORS, trials=10)
    return {r.detector: r for r in run_point(cfg, 10.0)}


@pytest.fixture(scope="module")
def train_rows(reference):
    cfg = experiment(reference, "train", TRAIN_GRID, ("pnn", "plugin"), trials=20)
    res = run_sweep(cfg)
    assert not res.failures
    return res.rows


@pytest.fixture(scope="module")
def smooth_rows(reference):
    cfg = experiment(reference, "smooth", SMOOTH_GRID, ("pnn",), trials=10)
    res = run_sweep(cfg)
    assert not res.failures
    return {r.axis: r for r in res.rows}


@pytest.fixture(scope="module")
def snr_rows(reference):
    cfg = experiment(reference, "snr", SNR_GRID, ALL_DETECTORS, trials=10)
    res = run_sweep(cfg)
    assert not res.failures
    table = {}
    for r in res.rows:
        table.setdefault(r.detector, {})[r.axis] = r
    return table


@pytest.fixture(scope="module")
def tb_rows(reference):
    cfg = experiment(reference, "tb", TB_GRID, ALL_DETECTORS, trials=10)
    res = run_sweep(cfg)
    assert not res.failures
    table = {}
    for r in res.rows:
        table.setdefault(r.detector, {})[r.axis] = r
    return table


def test_criterion_1_ber_formula_vs_oracle():
    from mpmath import mp, mpf, erfc

    mp.dps = 50

    def oracle_pe(delta, sd):
        x = -mpf(abs(delta)) / (2 * mpf(sd))
        return float(erfc(-x / mp.sqrt(2)) / 2)

    rng = np.random.default_rng(MASTER_SEED)
    worst = 0.0
    for _ in range(50):
        mu0, mu1 = rng.normal(0, 2, size=2)
        var = rng.uniform(0.1, 4.0)
        stats = GaussianClassStats(np.array([mu0]), np.array([mu1]), np.array([[var]]))
        pe = theoretical_ber(stats).pe
        worst = max(worst, abs(pe - oracle_pe(mu1 - mu0, math.sqrt(var))))
    ok_formula = worst <= 1e-10

    worst_sigmas = 0.0
    for _ in range(20):
        B = rng.normal(size=(2, 2))
        sigma = B @ B.T + 0.5 * np.eye(2)
        mu0 = rng.normal(size=2)
        while True:
            mu1 = mu0 + rng.normal(size=2)
            stats = GaussianClassStats(mu0, mu1, sigma)
            if 0.25 <= theoretical_ber(stats).quadratic <= 12.0:
                break
        pe = theoretical_ber(stats).pe
        a, c = discriminant(stats)
        chol = np.linalg.cholesky(sigma)
        half = 500_000
        z0 = mu0 + rng.normal(size=(half, 2)) @ chol.T
        z1 = mu1 + rng.normal(size=(half, 2)) @ chol.T
        errors = int(np.sum(z0 @ a - c >= 0)) + int(np.sum(z1 @ a - c < 0))
        emp = errors / (2 * half)
        sd = math.sqrt(pe * (1 - pe) / (2 * half))
        worst_sigmas = max(worst_sigmas, abs(emp - pe) / sd)
    ok_mc = worst_sigmas <= 3.0

    report(
        1,
        ok_formula and ok_mc,
        f"oracle max err {worst:.2e} (tol 1e-10); MC worst deviation "
        f"{worst_sigmas:.2f} sigma (tol 3)",
    )


def test_criterion_2_integral_identity():
    def phi(x):
        return math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)

    def Phi(x):
        return 0.5 * math.erfc(-x / math.sqrt(2))

    rng = np.random.default_rng(MASTER_SEED)
    worst = 0.0
    for _ in range(20):
        a = rng.uniform(-3, 3)
        b = rng.uniform(-3, 3)
        val, _ = quad(lambda x: Phi(a * x + b) * phi(x), -np.inf, np.inf)
        closed = std_normal_cdf(b / math.sqrt(1 + a * a))
        worst = max(worst, abs(val - closed))
    report(2, worst <= 1e-8, f"max quadrature gap {worst:.2e} (tol 1e-8)")


def test_criterion_3_projection_monotonicity():
    rng = np.random.default_rng(MASTER_SEED)
    violations = 0
    worst = -np.inf
    for _ in range(1000):
        d = int(rng.integers(2, 5))
        B = rng.normal(size=(d, d))
        sigma = B @ B.T + 0.1 * np.eye(d)
        stats = GaussianClassStats(rng.normal(size=d), rng.normal(size=d), sigma)
        d1 = int(rng.integers(1, d))
        A = ReductionMatrix(rng.normal(size=(d1, d)))
        pe_full, pe_red = compare_dimensions(stats, A)
        worst = max(worst, pe_full - pe_red)
        violations += pe_full > pe_red + 1e-12
    report(
        3,
        violations == 0,
        f"0 of 1000 projections beat the full space expected; got "
        f"{violations} violations (worst margin {worst:.2e})",
    )


def test_criterion_4_high_dim_beats_linear(reference, pinned_rows):
    params, timing, cir = reference
    A = ReductionMatrix(np.ones(3))
    theory = {}
    for snr in (5.0, 10.0, 15.0):
        sigma = snr_to_sigma(snr, Q, cir)
        stats = calibrate_stats(params, timing, Q, sigma, 100_000, seed=MASTER_SEED)
        theory[snr] = compare_dimensions(stats, A)
    ok_theory = all(pe3 < pe1 for pe3, pe1 in theory.values())

    pnn, lin = pinned_rows["pnn"], pinned_rows["linear"]
    gap = lin.ber - pnn.ber
    sd = sigma_diff(pnn, lin)
    ok_emp = gap > 2 * sd

    detail = (
        "theory pe3<pe1 at 5/10/15 dB: "
        + ", ".join(f"{pe3:.2e}<{pe1:.2e}" for pe3, pe1 in theory.values())
        + f"; empirical pnn {pnn.ber:.2e} vs linear {lin.ber:.2e} "
        + f"(gap {gap / sd:.1f} sigma, need >2)"
    )
    report(4, ok_theory and ok_emp, detail)


def test_criterion_5_pnn_convergence(train_rows):
    pnn = {r.axis: r for r in train_rows if r.detector == "pnn"}
    plug = {r.axis: r for r in train_rows if r.detector == "plugin"}
    seq = [pnn[v] for v in TRAIN_GRID]
    ok_mono = True
    worst = -np.inf
    for a, b in zip(seq, seq[1:]):
        slack = (b.ber - a.ber) / sigma_diff(a, b)
        worst = max(worst, slack)
        ok_mono = ok_mono and slack <= 2.0
    p500, g500 = pnn[500.0], plug[500.0]
    rel = abs(p500.ber - g500.ber) / g500.ber
    ok_close = rel <= 0.10
    report(
        5,
        ok_mono and ok_close,
        f"BER vs N {[f'{pnn[v].ber:.3e}' for v in TRAIN_GRID]} worst increase "
        f"{worst:.2f} sigma (tol 2); |pnn-plugin|/plugin at N=500 = {rel:.1%} "
        f"(tol 10%)",
    )


def test_criterion_6_smoothing_u_shape(smooth_rows):
    centre = smooth_rows[1.0]
    gaps = {}
    for v in (1e-3, 1e3):
        side = smooth_rows[v]
        gaps[v] = (side.ber - centre.ber) / sigma_diff(centre, side)
    ok = all(g > 2.0 for g in gaps.values())
    report(
        6,
        ok,
        f"BER at width x1 = {centre.ber:.3e}; x1e-3 above by {gaps[1e-3]:.1f} "
        f"sigma, x1e3 above by {gaps[1e3]:.1f} sigma (each must exceed 2)",
    )


def test_criterion_7_detector_ordering(reference, pinned_rows):
    genie, plug, lin = (
        pinned_rows["map_genie"],
        pinned_rows["plugin"],
        pinned_rows["linear"],
    )
    ok_chain = (genie.ber <= plug.ber + 2 * sigma_diff(genie, plug)) and (
        plug.ber <= lin.ber + 2 * sigma_diff(plug, lin)
    )

    _, timing, _ = reference
    M = timing.M
    rng = np.random.default_rng(MASTER_SEED)
    mismatches = 0
    for trial in range(200):
        L = int(rng.integers(1, 4))
        K = int(rng.integers(max(L, 1), 11))
        taps = np.abs(rng.normal(size=L * M)) + 0.05
        cir = DiscreteCIR(taps=taps, M=M, L=L)
        bits = rng.integers(0, 2, K)
        trace = simulate_rx(
            bits, 1.0, cir, NoiseModel("gaussian", 4.0), timing,
            seed=int(rng.integers(2**31)),
        )
        got = map_viterbi_detect(trace, ViterbiConfig(cir=cir, sigma2=4.0, L=L))
        # exhaustive search over every candidate sequence
        n = trace.samples.size
        best, best_sse = None, np.inf
        for code in range(2**K):
            cand = np.array([(code >> k) & 1 for k in range(K)], dtype=np.int64)
            recon = np.zeros(n)
            for k in np.flatnonzero(cand):
                lo = k * M
                span = min(taps.size, n - lo)
                recon[lo : lo + span] += taps[:span]
            sse = float(np.sum((trace.samples - recon) ** 2))
            if sse < best_sse:
                best, best_sse = cand, sse
        mismatches += not np.array_equal(got, best)
    report(
        7,
        ok_chain and mismatches == 0,
        f"genie {genie.ber:.2e} <= plugin {plug.ber:.2e} <= linear "
        f"{lin.ber:.2e} (within 2 sigma); enumeration mismatches "
        f"{mismatches}/200 (need 0)",
    )


def _trend_ok(table, grid, detectors):
    worst = ("", -np.inf)
    for det in detectors:
        seq = [table[det][v] for v in grid]
        for a, b in zip(seq, seq[1:]):
            sd = sigma_diff(a, b)
            if b.ber > a.ber:
                slack = np.inf if sd == 0 else (b.ber - a.ber) / sd
                if slack > worst[1]:
                    worst = (det, slack)
    return worst


def test_criterion_8_snr_and_isi_trends(snr_rows, tb_rows):
    worst_snr = _trend_ok(snr_rows, SNR_GRID, ALL_DETECTORS)
    worst_tb = _trend_ok(tb_rows, TB_GRID, ALL_DETECTORS)
    ok_snr = worst_snr[1] <= 2.0
    ok_tb = worst_tb[1] <= 2.0

    # the multi-metric detector keeps its edge over the scalar sum across
    # the whole SNR grid (allowing 2 sigma of counting noise)
    worst_order = -np.inf
    for v in SNR_GRID:
        pnn, lin = snr_rows["pnn"][v], snr_rows["linear"][v]
        sd = sigma_diff(pnn, lin)
        excess = 0.0 if pnn.ber <= lin.ber else (np.inf if sd == 0 else (pnn.ber - lin.ber) / sd)
        worst_order = max(worst_order, excess)
    ok_order = worst_order <= 2.0

    def fmt(worst):
        return "none" if worst[1] == -np.inf else f"{worst[0]} +{worst[1]:.2f} sigma"

    report(
        8,
        ok_snr and ok_tb and ok_order,
        f"worst SNR-trend increase {fmt(worst_snr)}; worst Tb-trend increase "
        f"{fmt(worst_tb)} (tol 2 sigma); pnn>linear worst excess "
        f"{worst_order:.2f} sigma (tol 2)",
    )


def test_criterion_9_sweep_determinism(tmp_path):
    cfg = tmp_path / "det.cfg"
    cfg.write_text(
        "run.detectors = pnn, linear, map_genie\n"
        "run.pilot_len = 40\n"
        "run.data_len = 200\n"
        "run.trials = 2\n"
        "sweep.axis = snr\n"
        "sweep.snr_db = 5, 10\n"
    )
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        rc = main(
            ["sweep", "--config", str(cfg), "--seed", str(MASTER_SEED),
             "--out", str(out), "--no-figure"]
        )
        assert rc == 0
        outs.append(out.read_bytes())
    report(
        9,
        outs[0] == outs[1],
        f"two sweep runs, same seed: files identical ({len(outs[0])} bytes)",
    )
