"""Parameter-sweep harness: presets, seed fan-out, CSV/JSON emission.

A sweep enumerates points as the product of the swept values and the T grid;
every mode at a point runs the same seed block (common random numbers), with
seed = base_seed + point_index * seeds_per_point + seed_offset. Raw rows are
emitted per (point, mode, seed), followed by one seed-averaged row per
(point, mode) carrying seed=mean and stddev columns.
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import yaml

from .bpr_engine import EngineConfig, HopFilter
from .controller import (
    AcceptancePolicy,
    ControllerConfig,
    ForecastKind,
    ForecastProvider,
    Mode,
)
from .simulator import SimConfig, run
from .topology import build_grid, load_topology
from .traffic import TrafficConfig

CSV_COLUMNS = [
    "experiment", "mode", "G", "v", "T", "alarm", "hop_filter", "seed",
    "slots", "warmup", "avg_delivery_slots", "overflow_rate_bps",
    "throughput_Bps", "mean_total_queue", "mean_lyapunov", "transit_fraction",
    "n_seeds", "stddev_latency", "stddev_overflow", "stddev_throughput",
]

SWEEPABLE = ("G", "v", "T", "alarm", "mode")


@dataclass
class ExperimentSpec:
    name: str
    base: SimConfig
    parameter: str
    values: list
    modes: list
    seeds_per_point: int
    t_values: list | None = None
    base_seed: int = 1000
    output: str | None = None

    def __post_init__(self):
        if self.parameter not in SWEEPABLE:
            raise ValueError(f"swept parameter must be one of {SWEEPABLE}")
        if not self.values:
            raise ValueError("need at least one sweep value")
        if self.seeds_per_point < 1:
            raise ValueError("need at least one seed per point")
        self.modes = [Mode(m) for m in self.modes]
        if self.parameter != "mode" and not self.modes:
            raise ValueError("need at least one mode")


def preset_fig3(seeds_per_point: int = 50, slots: int = 600, base_seed: int = 1000,
                output: str = "fig3.csv") -> ExperimentSpec:
    """Load sweep on the 5x5 grid: G from 5 to 20 batches/slot/node, T=5,
    alarm at 20% of the 500-batch buffer, all three schemes, oracle forecast."""
    topo = build_grid(5, 5, 2e9, 1e8, 1.0)
    base = SimConfig(
        topology=topo,
        controller=ControllerConfig(
            period=5,
            engine=EngineConfig(alarm_level=100, hop_filter=HopFilter.STRICT_DECREASE,
                                loop_detection=True),
            mode=Mode.OSPF_ONLY,
            forecast=ForecastProvider(kind=ForecastKind.ORACLE),
        ),
        traffic=TrafficConfig(base_rate=5, heterogeneity=0.0, seed=0),
        slots=slots,
    )
    return ExperimentSpec(
        name="fig3", base=base, parameter="G", values=list(range(5, 21)),
        modes=[Mode.OSPF_ONLY, Mode.SBPR, Mode.FBPR], t_values=[5],
        seeds_per_point=seeds_per_point, base_seed=base_seed, output=output,
    )


def preset_fig4(seeds_per_point: int = 50, slots: int = 600, base_seed: int = 5000,
                output: str = "fig4.csv") -> ExperimentSpec:
    """Heterogeneity sweep at G=15: v from 10% to 50%, T in {5, 15}, SBPR vs
    FBPR with the hop filter discarded (loop detection on) and oracle forecast."""
    topo = build_grid(5, 5, 2e9, 1e8, 1.0)
    base = SimConfig(
        topology=topo,
        controller=ControllerConfig(
            period=5,
            engine=EngineConfig(alarm_level=100, hop_filter=HopFilter.OFF,
                                loop_detection=True),
            mode=Mode.SBPR,
            forecast=ForecastProvider(kind=ForecastKind.ORACLE),
        ),
        traffic=TrafficConfig(base_rate=15, heterogeneity=0.1, seed=0),
        slots=slots,
    )
    return ExperimentSpec(
        name="fig4", base=base, parameter="v", values=[0.1, 0.2, 0.3, 0.4, 0.5],
        modes=[Mode.SBPR, Mode.FBPR], t_values=[5, 15],
        seeds_per_point=seeds_per_point, base_seed=base_seed, output=output,
    )


def _points(spec: ExperimentSpec):
    """(value, T) grid in canonical order, plus the mode list per point."""
    if spec.parameter == "mode":
        return [(None, spec.base.controller.period)], [Mode(v) for v in spec.values]
    if spec.parameter == "T":
        return [(v, int(v)) for v in spec.values], list(spec.modes)
    t_values = spec.t_values or [spec.base.controller.period]
    return [(v, int(t)) for v in spec.values for t in t_values], list(spec.modes)


def _specialize(spec: ExperimentSpec, value, T: int, mode: Mode, seed: int) -> SimConfig:
    base = spec.base
    traffic = replace(base.traffic, seed=seed)
    engine = base.controller.engine
    if spec.parameter == "G":
        traffic = replace(traffic, base_rate=value)
    elif spec.parameter == "v":
        traffic = replace(traffic, heterogeneity=value)
    elif spec.parameter == "alarm":
        engine = replace(engine, alarm_level=int(value))
    controller = replace(base.controller, period=T, mode=mode, engine=engine)
    return replace(base, traffic=traffic, controller=controller)


def enumerate_runs(spec: ExperimentSpec):
    """Every (point_index, value, T, mode, seed, config) of the sweep, in order."""
    points, modes = _points(spec)
    for i, (value, T) in enumerate(points):
        for mode in modes:
            for s in range(spec.seeds_per_point):
                seed = spec.base_seed + i * spec.seeds_per_point + s
                yield i, value, T, mode, seed, _specialize(spec, value, T, mode, seed)


def run_experiment(spec: ExperimentSpec, parallel: int = 1) -> list:
    """Execute the sweep and return result rows (dicts keyed by CSV_COLUMNS).

    Results are merged by run key, not completion order, so the output is
    deterministic for any worker count.
    """
    runs = list(enumerate_runs(spec))
    configs = [cfg for *_, cfg in runs]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            reports = list(pool.map(run, configs, chunksize=1))
    else:
        reports = [run(cfg) for cfg in configs]

    rows = []
    group = []  # raw rows of the (point, mode) block under construction
    group_key = None

    def flush():
        if group:
            rows.extend(group)
            rows.append(_mean_row(group))
            group.clear()

    for (i, value, T, mode, seed, cfg), report in zip(runs, reports):
        key = (i, mode)
        if key != group_key:
            flush()
            group_key = key
        group.append(_raw_row(spec, cfg, report))
    flush()
    return rows


def _raw_row(spec: ExperimentSpec, cfg: SimConfig, report) -> dict:
    return {
        "experiment": spec.name,
        "mode": cfg.controller.mode.value,
        "G": cfg.traffic.base_rate,
        "v": cfg.traffic.heterogeneity,
        "T": cfg.controller.period,
        "alarm": cfg.controller.engine.alarm_level,
        "hop_filter": cfg.controller.engine.hop_filter.value,
        "seed": cfg.traffic.seed,
        "slots": cfg.slots,
        "warmup": cfg.resolved_warmup,
        "avg_delivery_slots": report.avg_delivery_slots,
        "overflow_rate_bps": report.overflow_rate,
        "throughput_Bps": report.throughput_Bps,
        "mean_total_queue": report.mean_total_queue,
        "mean_lyapunov": report.mean_lyapunov,
        "transit_fraction": report.transit_fraction,
        "n_seeds": None,
        "stddev_latency": None,
        "stddev_overflow": None,
        "stddev_throughput": None,
    }


def _mean_row(raws: list) -> dict:
    def mean(key):
        return sum(r[key] for r in raws) / len(raws)

    def nanmean(key):
        vals = [r[key] for r in raws if not math.isnan(r[key])]
        return sum(vals) / len(vals) if vals else math.nan

    def stdev(key):
        vals = [r[key] for r in raws]
        if any(math.isnan(x) for x in vals):
            return math.nan
        return statistics.stdev(vals) if len(vals) > 1 else 0.0

    row = dict(raws[0])
    row["seed"] = "mean"
    row["n_seeds"] = len(raws)
    for key in ("avg_delivery_slots", "overflow_rate_bps", "throughput_Bps",
                "mean_total_queue", "mean_lyapunov"):
        row[key] = mean(key)
    row["transit_fraction"] = nanmean("transit_fraction")
    row["stddev_latency"] = stdev("avg_delivery_slots")
    row["stddev_overflow"] = stdev("overflow_rate_bps")
    row["stddev_throughput"] = stdev("throughput_Bps")
    return row


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row[col]) for col in CSV_COLUMNS])


def write_json(rows: list, path) -> None:
    def clean(value):
        if isinstance(value, float) and math.isnan(value):
            return None
        return value

    payload = [{col: clean(row[col]) for col in CSV_COLUMNS} for row in rows]
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=False)
        fh.write("\n")


# -- config documents -------------------------------------------------------

def sim_config_from_mapping(doc: dict) -> SimConfig:
    """Build a SimConfig from a config document (see README for the schema)."""
    topo_doc = dict(doc["topology"])
    topo_doc.setdefault("slot_sec", doc.get("slot_sec", 1.0))
    topo_doc.setdefault("batch_bytes", doc.get("batch_bytes", 1e8))
    topology = load_topology(topo_doc)

    ctrl = doc.get("controller", {})
    engine_doc = ctrl.get("engine", {})
    engine = EngineConfig(
        alarm_level=int(engine_doc.get("alarm_level", 0)),
        hop_filter=HopFilter(engine_doc.get("hop_filter", "strict_decrease")),
        loop_detection=bool(engine_doc.get("loop_detection", True)),
    )
    forecast_doc = ctrl.get("forecast", {})
    forecast = ForecastProvider(
        kind=ForecastKind(forecast_doc.get("kind", "oracle")),
        window=forecast_doc.get("window"),
    )
    controller = ControllerConfig(
        period=int(ctrl.get("period", 5)),
        engine=engine,
        mode=Mode(ctrl.get("mode", "ospf_only")),
        forecast=forecast,
    )

    traffic_doc = doc.get("traffic", {})
    traffic = TrafficConfig(
        base_rate=float(traffic_doc.get("base_rate", 0.0)),
        heterogeneity=float(traffic_doc.get("heterogeneity", 0.0)),
        seed=int(traffic_doc.get("seed", 0)),
    )

    acc_doc = doc.get("acceptance", {})
    acceptance = AcceptancePolicy(
        default=float(acc_doc.get("default", 1.0)),
        per_node={int(k): float(v) for k, v in acc_doc.get("per_node", {}).items()},
    )

    return SimConfig(
        topology=topology,
        controller=controller,
        traffic=traffic,
        slots=int(doc["slots"]),
        slot_sec=float(doc.get("slot_sec", 1.0)),
        warmup=None if doc.get("warmup") is None else int(doc["warmup"]),
        batch_bytes=float(doc.get("batch_bytes", 1e8)),
        queue_capacity=int(doc.get("queue_capacity", 500)),
        acceptance=acceptance,
    )


def experiment_from_mapping(doc: dict) -> ExperimentSpec:
    base = sim_config_from_mapping(doc["base"])
    return ExperimentSpec(
        name=str(doc.get("name", "custom")),
        base=base,
        parameter=str(doc["parameter"]),
        values=list(doc["values"]),
        modes=[Mode(m) for m in doc.get("modes", [base.controller.mode])],
        t_values=list(doc["t_values"]) if doc.get("t_values") else None,
        seeds_per_point=int(doc.get("seeds_per_point", 1)),
        base_seed=int(doc.get("base_seed", 1000)),
        output=doc.get("output"),
    )


def load_yaml(path) -> dict:
    with open(path) as fh:
        return yaml.safe_load(fh)


def validate_config(doc: dict) -> list:
    """Lint a run config; returns a list of problem strings (empty when clean)."""
    problems = []
    try:
        cfg = sim_config_from_mapping(doc)
    except (KeyError, ValueError, TypeError) as exc:
        return [f"config error: {exc}"]
    if not cfg.topology.is_connected():
        problems.append("topology is disconnected")
    if cfg.resolved_warmup >= cfg.slots:
        problems.append("warmup must be shorter than the run")
    if cfg.controller.mode is Mode.FBPR and cfg.controller.forecast.kind is ForecastKind.ZERO:
        problems.append("note: fbpr with a zero forecast degenerates to sbpr scoring")
    return problems
