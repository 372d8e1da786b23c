"""Figure rendering for sweep reports.

The report path of the CLI writes a BER curve image next to the delimited
results file.  Rendering is isolated here so importing the library never
pulls in matplotlib.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

AXIS_LABELS = {
    "snr": "SNR (dB)",
    "tb": "bit interval (s)",
    "train": "pilot length (symbols)",
    "smooth": "kernel width multiplier",
}

_STYLE = {
    "pnn": dict(marker="o", color="#1f77b4"),
    "plugin": dict(marker="s", color="#2ca02c"),
    "linear": dict(marker="^", color="#d62728"),
    "map_genie": dict(marker="d", color="#9467bd"),
    "map_pilot": dict(marker="v", color="#8c564b"),
}


def render_ber_curves(rows, path, axis: str, title: str | None = None) -> Path:
    """One BER-vs-axis curve per detector, log BER scale, to an image file.

    Zero-error points are drawn at half a count (0.5/symbols) so the log
    axis stays defined; their confidence band still starts at the true
    lower bound.
    """
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to plot")
    by_det: dict[str, list] = {}
    for row in rows:
        by_det.setdefault(row.detector, []).append(row)

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    floor = None
    for name, group in by_det.items():
        group = sorted(group, key=lambda r: r.axis)
        xs = [r.axis for r in group]
        ys = [r.ber if r.ber > 0 else 0.5 / r.symbols for r in group]
        lo = [max(y - max(r.ci_lo, 0.0), 0.0) for y, r in zip(ys, group)]
        hi = [max(r.ci_hi - y, 0.0) for y, r in zip(ys, group)]
        floor = min(ys) if floor is None else min(floor, min(ys))
        style = _STYLE.get(name, dict(marker="x"))
        ax.errorbar(xs, ys, yerr=[lo, hi], label=name, capsize=2.5, lw=1.4, **style)
    ax.set_yscale("log")
    if axis in ("tb", "smooth"):
        ax.set_xscale("log")
    ax.set_xlabel(AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("bit error rate")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(frameon=False)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
