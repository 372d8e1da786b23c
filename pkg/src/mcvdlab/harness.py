"""Monte Carlo BER experiments: seeded trials, sweeps, result tables.

A point is one operating condition (one value of the sweep axis).  Each of
its trials draws fresh pilot and data bits, synthesizes both traces, runs
every configured detector and counts bit errors on the data block only.
Errors are pooled across trials into one BER row per detector with a
Wilson 95% interval.

Seeding: trial t of any point uses numpy SeedSequence((master_seed, t)),
split into four child streams (pilot bits, pilot noise, data bits, data
noise).  Sub-seeds depend only on the master seed and the trial counter,
so every point of a sweep sees the same randomness (common random numbers,
which sharpens cross-point comparisons), reordering or parallelising
trials cannot change the pooled counts, and a rerun with the same config
and seed reproduces every output byte.  Result files carry no timestamps
for the same reason.

Trials are mutually independent, so they may execute in any order or in
parallel; the implementation runs them serially and sums the counts.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import detectors as det
from .bayes import GaussianClassStats, estimate_stats
from .channel import (
    ChannelParams,
    DiscreteCIR,
    NoiseModel,
    TimingConfig,
    default_isi_length,
    discretize_cir,
    simulate_rx,
    snr_to_sigma,
)
from .metrics import MetricConfig, extract_all

SWEEP_AXES = ("snr", "tb", "train", "smooth")
DETECTOR_NAMES = ("pnn", "plugin", "linear", "map_genie", "map_pilot")

RESULT_FIELDS = ("axis", "detector", "symbols", "errors", "ber", "ci_lo", "ci_hi", "seed")

_WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelParams
    timing: TimingConfig
    Q: float
    noise_kind: str
    snr_db: float
    detectors: tuple[str, ...]
    sweep_axis: str
    sweep_values: tuple[float, ...]
    pilot_len: int = 200
    data_len: int = 10_000
    trials: int = 20
    master_seed: int = 1
    l_max: int = 10
    counting_scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.Q > 0:
            raise ValueError("Q must be positive")
        if self.noise_kind not in ("gaussian", "poisson"):
            raise ValueError(f"unknown noise kind {self.noise_kind!r}")
        if not self.detectors:
            raise ValueError("at least one detector is required")
        unknown = [d for d in self.detectors if d not in DETECTOR_NAMES]
        if unknown:
            raise ValueError(f"unknown detectors: {unknown}")
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.sweep_axis!r}")
        if not self.sweep_values:
            raise ValueError("sweep needs at least one axis value")
        if self.sweep_axis == "snr" and self.noise_kind != "gaussian":
            raise ValueError("the snr axis requires gaussian noise")
        if self.pilot_len < 4:
            raise ValueError("pilot_len must be at least 4")
        if self.data_len < 100:
            raise ValueError("data_len must be at least 100")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.master_seed < 0:
            raise ValueError("master_seed must be a non-negative integer")
        if self.l_max < 1:
            raise ValueError("l_max must be at least 1")


@dataclass(frozen=True)
class BerResult:
    axis: float
    detector: str
    symbols: int
    errors: int
    ber: float
    ci_lo: float
    ci_hi: float
    seed: int


@dataclass(frozen=True)
class PointFailure:
    axis: float
    message: str


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[BerResult, ...]
    failures: tuple[PointFailure, ...]


def wilson_interval(errors: int, n: int, z: float = _WILSON_Z) -> tuple[float, float]:
    """Wilson score interval for an error proportion; contains errors/n."""
    if n < 1 or errors < 0 or errors > n:
        raise ValueError("need 0 <= errors <= n with n >= 1")
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(center - half, 0.0), min(center + half, 1.0)


@dataclass(frozen=True)
class _PointSetup:
    timing: TimingConfig
    cir: DiscreteCIR
    noise: NoiseModel
    sigma2: float
    pilot_len: int
    smooth_mult: float


def _resolve_point(cfg: ExperimentConfig, axis_value: float) -> _PointSetup:
    timing = cfg.timing
    snr_db = cfg.snr_db
    pilot_len = cfg.pilot_len
    smooth_mult = 1.0
    if cfg.sweep_axis == "snr":
        snr_db = float(axis_value)
    elif cfg.sweep_axis == "tb":
        timing = TimingConfig(Tb=float(axis_value), M=cfg.timing.M)
    elif cfg.sweep_axis == "train":
        pilot_len = int(axis_value)
        if pilot_len < 4:
            raise ValueError("train axis values must be at least 4")
    else:
        smooth_mult = float(axis_value)
        if not smooth_mult > 0:
            raise ValueError("smooth axis values must be positive")
    L = default_isi_length(cfg.channel, timing, l_max=cfg.l_max)
    cir = discretize_cir(cfg.channel, timing, L)
    if cfg.noise_kind == "gaussian":
        sigma = snr_to_sigma(snr_db, cfg.Q, cir)
        noise = NoiseModel(kind="gaussian", sigma2=sigma * sigma)
        sigma2 = sigma * sigma
    else:
        noise = NoiseModel(kind="poisson", counting_scale=cfg.counting_scale)
        # Poisson variance equals the mean count; use the average over an
        # isolated first symbol as the working noise power for MAP.
        mean_conc = float(np.mean(cfg.Q * cir.taps[: cir.M]))
        sigma2 = max(mean_conc / cfg.counting_scale, 1e-30)
    return _PointSetup(timing, cir, noise, sigma2, pilot_len, smooth_mult)


def _draw_bits(rng: np.random.Generator, n: int, require_two_per_class: bool) -> np.ndarray:
    """Equiprobable i.i.d. bits; pilots are redrawn until each class appears
    at least twice, which class-conditional estimators need."""
    for _ in range(1000):
        bits = rng.integers(0, 2, size=n)
        if not require_two_per_class:
            return bits
        ones = int(bits.sum())
        if 2 <= ones <= n - 2:
            return bits
    raise RuntimeError("could not draw a usable pilot (pilot too short?)")


def _viterbi_sigma2(setup: _PointSetup) -> float:
    # a noiseless run still needs a positive branch-metric scale
    if setup.sigma2 > 0:
        return setup.sigma2
    return 1e-30


def _run_trial(cfg: ExperimentConfig, setup: _PointSetup, trial: int) -> dict[str, tuple[int, int]]:
    ss = np.random.SeedSequence((cfg.master_seed, trial))
    pilot_bits_seed, pilot_noise_seed, data_bits_seed, data_noise_seed = ss.spawn(4)
    mcfg = MetricConfig.from_timing(setup.timing)

    pilot_bits = _draw_bits(np.random.default_rng(pilot_bits_seed), setup.pilot_len, True)
    pilot_trace = simulate_rx(pilot_bits, cfg.Q, setup.cir, setup.noise, setup.timing, pilot_noise_seed)
    pilot = det.PilotBlock(pilot_bits, pilot_trace)

    data_bits = _draw_bits(np.random.default_rng(data_bits_seed), cfg.data_len, False)
    data_trace = simulate_rx(data_bits, cfg.Q, setup.cir, setup.noise, setup.timing, data_noise_seed)

    out: dict[str, tuple[int, int]] = {}
    for name in cfg.detectors:
        if name == "pnn":
            layer = det.pnn_train(pilot, mcfg)
            if setup.smooth_mult != 1.0:
                layer = replace(layer, varsigma2=layer.varsigma2 * setup.smooth_mult)
            decided = det.pnn_detect(data_trace, layer, mcfg)
        elif name == "plugin":
            Zp = extract_all(pilot_trace, mcfg)
            stats = estimate_stats(Zp[pilot_bits == 0], Zp[pilot_bits == 1])
            decided = det.gaussian_plugin_detect(data_trace, stats, mcfg)
        elif name == "linear":
            threshold = det.linear_threshold_from_pilot(pilot, mcfg)
            decided = det.linear_detect(data_trace, threshold, mcfg)
        elif name == "map_genie":
            vcfg = det.ViterbiConfig(setup.cir, _viterbi_sigma2(setup), setup.cir.L)
            decided = det.map_viterbi_detect(data_trace, vcfg)
        else:  # map_pilot
            cir_hat = det.cir_pilot_estimate(pilot, setup.cir.L)
            sigma2_hat = max(det.pilot_noise_variance(pilot, cir_hat), 1e-30)
            vcfg = det.ViterbiConfig(cir_hat, sigma2_hat, cir_hat.L)
            decided = det.map_viterbi_detect(data_trace, vcfg)
        out[name] = (int(np.sum(decided != data_bits)), int(data_bits.size))
    return out


def run_point(cfg: ExperimentConfig, axis_value: float) -> list[BerResult]:
    """All configured detectors at one axis value, pooled over trials."""
    setup = _resolve_point(cfg, axis_value)
    totals = {name: [0, 0] for name in cfg.detectors}
    for trial in range(cfg.trials):
        try:
            outcome = _run_trial(cfg, setup, trial)
        except Exception as exc:
            raise RuntimeError(
                f"trial {trial} failed (seed entropy ({cfg.master_seed}, {trial})): {exc}"
            ) from exc
        for name, (err, n) in outcome.items():
            totals[name][0] += err
            totals[name][1] += n
    rows = []
    for name in cfg.detectors:
        err, n = totals[name]
        lo, hi = wilson_interval(err, n)
        rows.append(
            BerResult(
                axis=float(axis_value),
                detector=name,
                symbols=n,
                errors=err,
                ber=err / n,
                ci_lo=lo,
                ci_hi=hi,
                seed=cfg.master_seed,
            )
        )
    return rows


def run_sweep(cfg: ExperimentConfig) -> SweepResult:
    """run_point across the configured axis; a failed point is recorded and
    the sweep continues."""
    rows: list[BerResult] = []
    failures: list[PointFailure] = []
    for value in cfg.sweep_values:
        try:
            rows.extend(run_point(cfg, value))
        except Exception as exc:
            failures.append(PointFailure(axis=float(value), message=str(exc)))
    return SweepResult(rows=tuple(rows), failures=tuple(failures))


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(rows, path, fmt: str = "csv") -> None:
    """Serialize result rows to CSV or JSON.

    Floats are written with shortest round-trip precision, so a
    write-then-read cycle reproduces the table exactly.
    """
    rows = list(rows)
    path = Path(path)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(RESULT_FIELDS)
        for row in rows:
            writer.writerow([_format_cell(getattr(row, f)) for f in RESULT_FIELDS])
        path.write_text(buf.getvalue())
    elif fmt == "json":
        payload = [{f: getattr(row, f) for f in RESULT_FIELDS} for row in rows]
        path.write_text(json.dumps(payload, indent=2) + "\n")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def read_results(path, fmt: str = "csv") -> list[BerResult]:
    path = Path(path)
    rows: list[BerResult] = []
    if fmt == "csv":
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != list(RESULT_FIELDS):
                raise ValueError("unexpected results header")
            for rec in reader:
                rows.append(
                    BerResult(
                        axis=float(rec["axis"]),
                        detector=rec["detector"],
                        symbols=int(rec["symbols"]),
                        errors=int(rec["errors"]),
                        ber=float(rec["ber"]),
                        ci_lo=float(rec["ci_lo"]),
                        ci_hi=float(rec["ci_hi"]),
                        seed=int(rec["seed"]),
                    )
                )
    elif fmt == "json":
        for rec in json.loads(path.read_text()):
            rows.append(BerResult(**rec))
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return rows


def calibrate_stats(
    channel: ChannelParams,
    timing: TimingConfig,
    Q: float,
    sigma: float,
    n_symbols: int,
    seed,
    l_max: int = 10,
) -> GaussianClassStats:
    """Class-conditional metric stats from one long labelled run.

    Simulates a random equiprobable bit stream at noise std sigma,
    extracts every metric vector and pools them by the true bit.  Useful
    as a reference ("genie") fit for the closed-form BER.
    """
    if n_symbols < 8:
        raise ValueError("need at least 8 symbols to calibrate")
    ss = np.random.SeedSequence((seed, 0xCA11B))
    bits_seed, noise_seed = ss.spawn(2)
    L = default_isi_length(channel, timing, l_max=l_max)
    cir = discretize_cir(channel, timing, L)
    bits = _draw_bits(np.random.default_rng(bits_seed), n_symbols, True)
    noise = NoiseModel(kind="gaussian", sigma2=sigma * sigma)
    trace = simulate_rx(bits, Q, cir, noise, timing, noise_seed)
    Z = extract_all(trace, MetricConfig.from_timing(timing))
    return estimate_stats(Z[bits == 0], Z[bits == 1])
