"""Backbone-network simulator with backpressure-derived priority flow rules."""

from .baseline_routing import NextHopTable, compute_next_hops, route_of
from .bpr_engine import (
    EngineConfig,
    Forecast,
    HopFilter,
    NetworkSnapshot,
    PriorityRule,
    RuleSet,
    assign_multilinks,
    check_transit_assumption,
    delta_score,
    detect_and_filter_loops,
    fbpr_rules,
    rules_from_text,
    rules_to_text,
    sbpr_rules,
)
from .controller import (
    AcceptancePolicy,
    ControllerConfig,
    ForecastKind,
    ForecastProvider,
    Mode,
    NetworkView,
    actuate,
    oracle_forecast,
)
from .experiments import (
    ExperimentSpec,
    preset_fig3,
    preset_fig4,
    run_experiment,
    write_csv,
    write_json,
)
from .metrics import MetricsReport, SlotSeries, aggregate, lyapunov, third_drift
from .simulator import SimConfig, Simulation, run
from .topology import (
    Link,
    MultiLinkGroup,
    NodeId,
    PeeringPolicy,
    Topology,
    build_grid,
    load_topology,
)
from .traffic import TrafficConfig, TrafficSchedule

__all__ = [name for name in dir() if not name.startswith("_")]
