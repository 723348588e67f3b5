"""Central control plane: periodic snapshots, forecasts, rule dispatch.

The controller actuates every `period` slots: it snapshots the network,
obtains a forecast for the coming period, runs the configured rule engine,
and installs the subset of proposed rules each node accepts. Installed rules
wholly replace the previous set and stay fixed until the next actuation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .baseline_routing import NextHopTable
from .bpr_engine import (
    EngineConfig,
    Forecast,
    NetworkSnapshot,
    PriorityRule,
    RuleSet,
    fbpr_rules,
    sbpr_rules,
)
from .topology import Topology
from .traffic import TrafficSchedule


class Mode(str, Enum):
    OSPF_ONLY = "ospf_only"
    SBPR = "sbpr"
    FBPR = "fbpr"


class ForecastKind(str, Enum):
    ORACLE = "oracle"
    ZERO = "zero"
    MOVING_AVERAGE = "moving_average"


@dataclass(frozen=True)
class ForecastProvider:
    """Declarative forecast source; see make_forecaster for the working object."""

    kind: ForecastKind = ForecastKind.ORACLE
    window: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ForecastKind(self.kind))
        if self.kind is ForecastKind.MOVING_AVERAGE and not self.window:
            raise ValueError("moving_average forecasts need a window")


@dataclass(frozen=True)
class ControllerConfig:
    period: int = 5
    engine: EngineConfig = field(default_factory=EngineConfig)
    mode: Mode = Mode.OSPF_ONLY
    forecast: ForecastProvider = field(default_factory=ForecastProvider)

    def __post_init__(self):
        if self.period < 1:
            raise ValueError("actuation period must be >= 1 slot")
        object.__setattr__(self, "mode", Mode(self.mode))


@dataclass(frozen=True)
class AcceptancePolicy:
    """Fraction of proposed rules each node accepts; 1.0 accepts in full."""

    default: float = 1.0
    per_node: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in [self.default, *self.per_node.values()]:
            if not 0.0 <= a <= 1.0:
                raise ValueError("acceptance fractions must lie in [0, 1]")

    def fraction(self, n: int) -> float:
        return self.per_node.get(n, self.default)


@dataclass(frozen=True)
class NetworkView:
    """What the controller sees at actuation time."""

    topology: Topology
    baseline: NextHopTable
    queues: np.ndarray


def oracle_forecast(generator_schedule: TrafficSchedule, t: int, T: int) -> Forecast:
    """Exact count of batches the generator will create during [t, t+T)."""
    return Forecast(horizon=T, generated=generator_schedule.window_counts(t, t + T))


class ZeroForecaster:
    def __init__(self, n_nodes: int):
        self.n_nodes = n_nodes

    def forecast(self, t: int, horizon: int) -> Forecast:
        return Forecast.zero(self.n_nodes, horizon)


class OracleForecaster:
    def __init__(self, schedule: TrafficSchedule):
        self.schedule = schedule

    def forecast(self, t: int, horizon: int) -> Forecast:
        return oracle_forecast(self.schedule, t, horizon)


class MovingAverageForecaster:
    """Backward-looking estimate: mean generation over the last `window` slots,
    scaled to the horizon and rounded down."""

    def __init__(self, schedule: TrafficSchedule, window: int):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.schedule = schedule
        self.window = window

    def forecast(self, t: int, horizon: int) -> Forecast:
        t0 = max(0, t - self.window)
        if t0 == t:
            return Forecast.zero(self.schedule.n_nodes, horizon)
        span = t - t0
        counts = self.schedule.window_counts(t0, t)
        scaled = (counts * horizon + span // 2) // span  # round half up per entry
        return Forecast(horizon=horizon, generated=scaled)


def make_forecaster(provider: ForecastProvider, schedule: TrafficSchedule):
    if provider.kind is ForecastKind.ZERO:
        return ZeroForecaster(schedule.n_nodes)
    if provider.kind is ForecastKind.ORACLE:
        return OracleForecaster(schedule)
    return MovingAverageForecaster(schedule, provider.window)


def apply_acceptance(proposed: RuleSet, acceptance: AcceptancePolicy) -> RuleSet:
    """Keep, per node, the ceil(alpha * k) highest-differential rules (ties by link id)."""
    kept = []
    for n, rules in sorted(proposed.by_node().items()):
        alpha = acceptance.fraction(n)
        keep = min(len(rules), math.ceil(alpha * len(rules)))
        ranked = sorted(rules, key=lambda r: (-r.differential, r.via.id))
        kept.extend(ranked[:keep])
    kept.sort(key=lambda r: (r.from_node, r.via.id))
    return RuleSet(time=proposed.time, rules=tuple(kept))


def actuate(state: NetworkView, t: int, config: ControllerConfig,
            acceptance: AcceptancePolicy, provider, log=None) -> RuleSet:
    """One actuation: snapshot -> forecast -> engine -> acceptance.

    `provider` is a forecaster object exposing forecast(t, horizon). Must be
    called only on actuation slots (t divisible by the period). The returned
    set wholly replaces whatever rules were active before.
    """
    if t % config.period != 0:
        raise ValueError(f"actuation at t={t} violates period {config.period}")
    snapshot = NetworkSnapshot(time=t, queues=state.queues.copy())
    if config.mode is Mode.OSPF_ONLY:
        proposed = RuleSet(time=t, rules=())
    elif config.mode is Mode.SBPR:
        proposed = sbpr_rules(snapshot, state.topology, state.baseline, config.engine)
    else:
        forecast = provider.forecast(t, config.period)
        proposed = fbpr_rules(snapshot, forecast, state.topology, state.baseline,
                              config.engine, period=config.period)
    installed = apply_acceptance(proposed, acceptance)
    if log is not None:
        log.append(
            f"t={t} mode={config.mode.value} proposed={len(proposed)} installed={len(installed)}"
        )
    return installed
