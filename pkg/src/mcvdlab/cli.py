"""Command line front end.

Subcommands:

* theory-ber: closed-form error probability for given class stats.
* simulate:   synthesize one received trace and dump it.
* sweep:      Monte Carlo BER sweep along one axis; writes the results
              table and, by default, a BER curve image next to it.
* selftest:   run the built-in verification suite.

Every subcommand exits 0 on success and 1 with a diagnostic on stderr on
any error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bayes import GaussianClassStats, theoretical_ber
from .channel import NoiseModel, default_isi_length, discretize_cir, simulate_rx, snr_to_sigma
from .config import build_experiment, load_config
from .harness import run_sweep, write_results


def _parse_vector(text: str) -> np.ndarray:
    return np.array([float(p) for p in text.split(",") if p.strip()])


def _parse_matrix(text: str) -> np.ndarray:
    return np.array([[float(p) for p in row.split(",") if p.strip()] for row in text.split(";")])


def _cmd_theory_ber(args) -> int:
    stats = GaussianClassStats(_parse_vector(args.mu0), _parse_vector(args.mu1), _parse_matrix(args.sigma))
    report = theoretical_ber(stats)
    print(f"pe={report.pe!r} q={report.quadratic!r}")
    return 0


def _cmd_simulate(args) -> int:
    values = load_config(args.config)
    cfg = build_experiment(values, seed=args.seed)
    L = default_isi_length(cfg.channel, cfg.timing, l_max=cfg.l_max)
    cir = discretize_cir(cfg.channel, cfg.timing, L)
    if cfg.noise_kind == "gaussian":
        sigma = snr_to_sigma(cfg.snr_db, cfg.Q, cir)
        noise = NoiseModel(kind="gaussian", sigma2=sigma * sigma)
    else:
        noise = NoiseModel(kind="poisson", counting_scale=cfg.counting_scale)
    ss = np.random.SeedSequence((cfg.master_seed, 0))
    bits_seed, noise_seed = ss.spawn(2)
    bits = np.random.default_rng(bits_seed).integers(0, 2, size=cfg.data_len)
    trace = simulate_rx(bits, cfg.Q, cir, noise, cfg.timing, noise_seed)

    Ts = cfg.timing.Ts
    M = cfg.timing.M
    out = Path(args.out) if args.out else Path("trace." + args.format)
    if args.format == "csv":
        lines = ["i,t,symbol,bit,sample"]
        for i, y in enumerate(trace.samples):
            k = i // M
            lines.append(f"{i},{(i + 1) * Ts!r},{k},{int(bits[k])},{float(y)!r}")
        out.write_text("\n".join(lines) + "\n")
    else:
        import json

        payload = {
            "Ts": Ts,
            "M": M,
            "Q": cfg.Q,
            "bits": [int(b) for b in bits],
            "samples": [float(y) for y in trace.samples],
        }
        out.write_text(json.dumps(payload) + "\n")
    print(f"wrote {trace.samples.size} samples ({cfg.data_len} symbols) to {out}")
    return 0


def _cmd_sweep(args) -> int:
    values = load_config(args.config)
    cfg = build_experiment(values, axis=args.axis, seed=args.seed)
    result = run_sweep(cfg)
    out = Path(args.out) if args.out else Path("results." + args.format)
    write_results(result.rows, out, fmt=args.format)
    for row in result.rows:
        print(
            f"{cfg.sweep_axis}={row.axis:g} {row.detector}: ber={row.ber:.3e} "
            f"[{row.ci_lo:.3e}, {row.ci_hi:.3e}] ({row.errors}/{row.symbols})"
        )
    print(f"wrote {out}")
    if not args.no_figure and result.rows:
        from .figures import render_ber_curves

        fig_path = out.with_suffix(".png")
        render_ber_curves(result.rows, fig_path, cfg.sweep_axis)
        print(f"wrote {fig_path}")
    if result.failures:
        for failure in result.failures:
            print(f"error: point {failure.axis:g} failed: {failure.message}", file=sys.stderr)
        return 1
    return 0


def _cmd_selftest(args) -> int:
    from .selfcheck import run_all

    results = run_all()
    width = max(len(r.name) for r in results)
    ok = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.detail}")
        ok = ok and r.passed
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mcvdlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory-ber", help="closed-form BER for given class stats")
    p.add_argument("--mu0", required=True, help="class-0 mean, comma separated")
    p.add_argument("--mu1", required=True, help="class-1 mean, comma separated")
    p.add_argument("--sigma", required=True, help="covariance rows separated by ';'")
    p.set_defaults(func=_cmd_theory_ber)

    p = sub.add_parser("simulate", help="synthesize one received trace")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo BER sweep along one axis")
    p.add_argument("--axis", choices=("snr", "tb", "train", "smooth"), help="sweep axis override")
    p.add_argument("--config", help="experiment config file")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--out", help="results path")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-figure", action="store_true", help="skip the BER curve image")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("selftest", help="run the built-in verification suite")
    p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
