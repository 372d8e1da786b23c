"""Flat key/value experiment configuration.

Files hold one `section.key = value` pair per line; blank lines and lines
starting with '#' are ignored.  Every key must be known, unknown keys are
an error rather than a silent no-op.  Velocities are given in m/s in the
file and converted to um/s here, at the boundary, so the physics code only
ever sees micrometre units.
"""

from __future__ import annotations

from pathlib import Path

from .channel import ChannelParams, TimingConfig
from .harness import DETECTOR_NAMES, SWEEP_AXES, ExperimentConfig

_M_PER_S_TO_UM_PER_S = 1e6


def _parse_float_list(text: str) -> tuple[float, ...]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _parse_name_list(text: str) -> tuple[str, ...]:
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return tuple(parts)


# key -> (parser, default); None defaults are filled in build_experiment
SCHEMA: dict = {
    "channel.mode": (str, "passive"),
    "channel.R_um": (float, 0.225),
    "channel.V_um3": (float, None),
    "channel.r_um": (float, 2.0),
    "channel.D_um2_s": (float, 5000.0),
    "channel.v_m_s": (float, 1e-3),
    "channel.beta_s": (float, 100.0),
    "timing.Tb_s": (float, 3e-4),
    "timing.M": (int, 12),
    "signal.Q": (float, 1e4),
    "noise.kind": (str, "gaussian"),
    "noise.snr_db": (float, 10.0),
    "noise.counting_scale": (float, 1.0),
    "run.pilot_len": (int, 200),
    "run.data_len": (int, 10_000),
    "run.trials": (int, 20),
    "run.seed": (int, 1),
    "run.l_max": (int, 10),
    "run.detectors": (_parse_name_list, ("pnn", "plugin", "linear", "map_genie", "map_pilot")),
    "sweep.axis": (str, "snr"),
    "sweep.snr_db": (_parse_float_list, (-5.0, 0.0, 5.0, 10.0, 15.0, 20.0)),
    "sweep.tb_s": (_parse_float_list, (3e-4, 5e-4, 7e-4, 9e-4, 1.1e-3)),
    "sweep.train": (_parse_float_list, (10.0, 50.0, 100.0, 200.0, 500.0)),
    "sweep.smooth": (_parse_float_list, (1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3)),
}


def parse_config_text(text: str) -> dict:
    values = {key: default for key, (_, default) in SCHEMA.items()}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in SCHEMA:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(val)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return values


def load_config(path=None) -> dict:
    """Config dict from a file, or pure defaults when path is None."""
    if path is None:
        return parse_config_text("")
    return parse_config_text(Path(path).read_text())


def build_experiment(values: dict, axis: str | None = None, seed: int | None = None) -> ExperimentConfig:
    """Assemble an ExperimentConfig; axis and seed override the file."""
    channel = ChannelParams(
        mode=values["channel.mode"],
        R=values["channel.R_um"],
        r=values["channel.r_um"],
        D=values["channel.D_um2_s"],
        v=values["channel.v_m_s"] * _M_PER_S_TO_UM_PER_S,
        beta=values["channel.beta_s"],
        V=values["channel.V_um3"],
    )
    timing = TimingConfig(Tb=values["timing.Tb_s"], M=values["timing.M"])
    sweep_axis = axis if axis is not None else values["sweep.axis"]
    if sweep_axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {sweep_axis!r}")
    sweep_values = values[f"sweep.{'tb_s' if sweep_axis == 'tb' else 'snr_db' if sweep_axis == 'snr' else sweep_axis}"]
    detectors = values["run.detectors"]
    unknown = [d for d in detectors if d not in DETECTOR_NAMES]
    if unknown:
        raise ValueError(f"unknown detectors: {unknown}")
    return ExperimentConfig(
        channel=channel,
        timing=timing,
        Q=values["signal.Q"],
        noise_kind=values["noise.kind"],
        snr_db=values["noise.snr_db"],
        detectors=tuple(detectors),
        sweep_axis=sweep_axis,
        sweep_values=tuple(sweep_values),
        pilot_len=values["run.pilot_len"],
        data_len=values["run.data_len"],
        trials=values["run.trials"],
        master_seed=seed if seed is not None else values["run.seed"],
        l_max=values["run.l_max"],
        counting_scale=values["noise.counting_scale"],
    )
