"""Three-panel comparison figures from sweep CSVs.

Reads the simulator harness's averaged rows (seed == "mean") and renders one
image per metric panel: delivery latency, overflow rate, throughput, each
plotted against the swept parameter with one line per group (mode, and the
actuation period when present). Inputs are never modified.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from matplotlib.figure import Figure

PANELS = [
    ("latency", "avg_delivery_slots", "stddev_latency",
     "average delivery time [slots x slot_sec]"),
    ("overflow", "overflow_rate_bps", "stddev_overflow",
     "overflow rate [batches/sec]"),
    ("throughput", "throughput_Bps", "stddev_throughput",
     "throughput [bytes/sec]"),
]

X_LABELS = {
    "G": "generated batches per node per second",
    "v": "per-node rate heterogeneity",
    "T": "actuation period [slots]",
    "alarm": "alarm level [batches]",
}


@dataclass
class PlotSpec:
    input_csv: str
    x: str = "G"
    group_by: list = field(default_factory=lambda: ["mode"])
    outdir: str = "."
    fmt: str = "png"
    name: str = "sweep"

    def __post_init__(self):
        if self.fmt not in ("png", "svg"):
            raise ValueError("format must be png or svg")


def preset_spec(preset: str, input_csv: str, outdir: str, fmt: str = "png") -> PlotSpec:
    if preset == "fig3":
        return PlotSpec(input_csv=input_csv, x="G", group_by=["mode"],
                        outdir=outdir, fmt=fmt, name="fig3")
    if preset == "fig4":
        return PlotSpec(input_csv=input_csv, x="v", group_by=["mode", "T"],
                        outdir=outdir, fmt=fmt, name="fig4")
    raise ValueError(f"unknown preset {preset!r}")


def _float(cell: str) -> float:
    return math.nan if cell in ("", "nan") else float(cell)


def load_series(spec: PlotSpec) -> dict:
    """Averaged rows grouped for plotting.

    Returns {group key (tuple): [(x, metric value, stddev or nan), ...]} per
    panel metric: a mapping metric -> groups. Raises if a referenced column
    is missing or no averaged rows match.
    """
    with open(spec.input_csv, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        header = reader.fieldnames or []

    needed = [spec.x, "seed", *spec.group_by]
    for _, metric, stddev, _ in PANELS:
        needed += [metric, stddev]
    for col in needed:
        if col not in header:
            raise ValueError(f"input CSV lacks required column {col!r}")

    averaged = [r for r in rows if r["seed"] == "mean"]
    if not averaged:
        raise ValueError("no averaged rows (seed == 'mean') in input")

    out = {}
    for _, metric, stddev, _ in PANELS:
        groups = {}
        for r in averaged:
            key = tuple(r[g] for g in spec.group_by)
            groups.setdefault(key, []).append(
                (_float(r[spec.x]), _float(r[metric]), _float(r[stddev])))
        for key in groups:
            groups[key].sort(key=lambda p: p[0])
        out[metric] = groups
    return out


def render(spec: PlotSpec) -> list:
    """Write one image per panel; returns the created paths."""
    data = load_series(spec)
    outdir = Path(spec.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for panel, metric, _, ylabel in PANELS:
        fig = Figure(figsize=(6.4, 4.2))
        ax = fig.subplots()
        for key, points in sorted(data[metric].items()):
            xs = [p[0] for p in points]
            ys = [p[1] for p in points]
            errs = [p[2] for p in points]
            label = ", ".join(f"{g}={k}" for g, k in zip(spec.group_by, key))
            if any(not math.isnan(e) for e in errs):
                ax.errorbar(xs, ys, yerr=[0.0 if math.isnan(e) else e for e in errs],
                            marker="o", capsize=3, label=label)
            else:
                ax.plot(xs, ys, marker="o", label=label)
        ax.set_xlabel(X_LABELS.get(spec.x, spec.x))
        ax.set_ylabel(ylabel)
        ax.grid(True, alpha=0.3)
        ax.legend()
        path = outdir / f"{spec.name}_{panel}.{spec.fmt}"
        fig.savefig(path)
        written.append(str(path))
    return written
