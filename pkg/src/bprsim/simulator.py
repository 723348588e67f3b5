"""Slotted-time batch simulator.

Each slot runs: controller actuation (on period boundaries), batch
generation with admission control, per-link service under the active rules,
then arrivals (delivery or transit admission). A served batch departs its
queue at the end of the slot and joins the next queue at the start of the
next one, so it moves at most one hop per slot.

Queues hold batches as (arrival_stamp, created_at, batch_id) tuples in
per-destination deques; the arrival stamp is a global counter giving the
single-queue arrival order. Rule-governed traffic is served youngest-first,
baseline traffic oldest-first across its eligible destination classes.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .baseline_routing import NextHopTable, compute_next_hops
from .bpr_engine import Forecast, NetworkSnapshot, RuleSet, check_transit_assumption
from .controller import (
    AcceptancePolicy,
    ControllerConfig,
    Mode,
    NetworkView,
    actuate,
    make_forecaster,
)
from .metrics import MetricsReport, SlotSeries, aggregate
from .topology import Topology
from .traffic import TrafficConfig, TrafficSchedule


@dataclass
class SimConfig:
    topology: Topology
    controller: ControllerConfig
    traffic: TrafficConfig
    slots: int
    slot_sec: float = 1.0
    warmup: int | None = None      # None -> 10% of the run
    batch_bytes: float = 1e8
    queue_capacity: int = 500
    acceptance: AcceptancePolicy = field(default_factory=AcceptancePolicy)
    max_hops_per_slot: int = 1
    track_paths: bool = False
    event_log: bool = False

    def __post_init__(self):
        if self.slots < 1:
            raise ValueError("run length must be >= 1 slot")
        if self.queue_capacity < 1:
            raise ValueError("queue capacity must be >= 1 batch")
        if self.warmup is not None and not 0 <= self.warmup < self.slots:
            raise ValueError("need slots > warmup >= 0")
        if self.max_hops_per_slot < 1:
            raise ValueError("a served batch advances at least one hop per slot")

    @property
    def resolved_warmup(self) -> int:
        return self.slots // 10 if self.warmup is None else self.warmup


class Simulation:
    """Mutable single-run state; step() advances one slot."""

    def __init__(self, config: SimConfig):
        self.config = config
        self.topology = config.topology
        self.baseline = compute_next_hops(config.topology)
        n = self.topology.n_nodes
        self.n_nodes = n
        self.period = config.controller.period
        padded = config.slots + (-config.slots % self.period)
        self.schedule = TrafficSchedule(config.traffic, n, padded)
        self.forecaster = make_forecaster(config.controller.forecast, self.schedule)

        self.t = 0
        self.u = [[0] * n for _ in range(n)]
        self.queues = [[deque() for _ in range(n)] for _ in range(n)]
        self.node_total = [0] * n
        self.active_rules = RuleSet(time=0, rules=())
        self.series = SlotSeries()
        self.transit_fractions = []
        self.actuation_log = [] if config.event_log else None
        self.events = [] if config.event_log else None
        self.paths = {} if config.track_paths else None

        self._arr = 0
        self._next_id = 0
        self._carry_gen = 0
        self._carry_drop = 0
        self.total_generated = 0
        self.total_delivered = 0
        self.total_dropped = 0

        # static per-node dispatch: baseline serving link id per destination
        self._base_link_id = [
            [self.baseline.table[(m, c)].id if m != c else -1 for c in range(n)]
            for m in range(n)
        ]
        self._install(self.active_rules)

    # -- rule installation ------------------------------------------------

    def _install(self, rules: RuleSet) -> None:
        self.active_rules = rules
        n = self.n_nodes
        rule_link = [dict() for _ in range(n)]
        rule_dests = [set() for _ in range(n)]
        for r in rules.rules:
            rule_link[r.from_node][r.via.id] = r.to
            rule_dests[r.from_node].add(r.to)
        plan = []
        for m in range(n):
            row = self._base_link_id[m]
            taken = rule_dests[m]
            entries = []
            for l in self.topology.out_links(m):
                base_cs = [c for c in range(n)
                           if c != m and c not in taken and row[c] == l.id]
                entries.append((l.dest, l.bandwidth, rule_link[m].get(l.id), base_cs))
            plan.append(entries)
        self._svc_plan = plan

    # -- helpers ----------------------------------------------------------

    def queue_matrix(self) -> np.ndarray:
        return np.array(self.u, dtype=np.int64)

    def snapshot(self) -> NetworkSnapshot:
        return NetworkSnapshot(time=self.t, queues=self.queue_matrix())

    def total_queued(self) -> int:
        return sum(self.node_total)

    def preload(self, node: int, dest: int, count: int = 1) -> None:
        """Inject batches before stepping; they count as generated traffic."""
        if node == dest:
            raise ValueError("batch origin must differ from destination")
        for _ in range(count):
            self._carry_gen += 1
            self.total_generated += 1
            bid = self._next_id
            self._next_id += 1
            if self.node_total[node] < self.config.queue_capacity:
                self._arr += 1
                self.queues[node][dest].append((self._arr, self.t, bid))
                self.u[node][dest] += 1
                self.node_total[node] += 1
                if self.paths is not None:
                    self.paths[bid] = [node]
            else:
                self._carry_drop += 1
                self.total_dropped += 1

    # -- the slot ----------------------------------------------------------

    def step(self) -> None:
        t = self.t
        cfg = self.config
        capacity = cfg.queue_capacity
        u = self.u
        queues = self.queues
        node_total = self.node_total
        events = self.events
        paths = self.paths

        # (1) actuation on period boundaries
        if t % self.period == 0:
            view = NetworkView(self.topology, self.baseline, self.queue_matrix())
            installed = actuate(view, t, cfg.controller, cfg.acceptance,
                                self.forecaster, log=self.actuation_log)
            self._install(installed)
            self.transit_fractions.append(self._transit_fraction(view, installed, t))

        slot_gen = self._carry_gen
        slot_drop = self._carry_drop
        self._carry_gen = 0
        self._carry_drop = 0
        slot_del = 0
        slot_lat = 0

        # (2) generation with admission control
        for n, c in self.schedule.batches(t):
            slot_gen += 1
            self.total_generated += 1
            bid = self._next_id
            self._next_id += 1
            if node_total[n] < capacity:
                self._arr += 1
                queues[n][c].append((self._arr, t, bid))
                u[n][c] += 1
                node_total[n] += 1
                if paths is not None:
                    paths[bid] = [n]
                if events is not None:
                    events.append(f"t={t} ev=gen id={bid} origin={n} dest={c} admitted=1")
            else:
                slot_drop += 1
                self.total_dropped += 1
                if events is not None:
                    events.append(f"t={t} ev=gen id={bid} origin={n} dest={c} admitted=0")

        # (3)+(4) service then arrivals, repeated up to max_hops_per_slot
        # passes; link budgets are per slot, so a batch admitted in an early
        # pass may advance again over links with budget left
        budgets = [[entry[1] for entry in self._svc_plan[n]] for n in range(self.n_nodes)]
        for _ in range(cfg.max_hops_per_slot):
            transit = []
            for n in range(self.n_nodes):
                if not node_total[n]:
                    continue
                qn = queues[n]
                un = u[n]
                bn = budgets[n]
                for i, (dest_node, _, rule_c, base_cs) in enumerate(self._svc_plan[n]):
                    budget = bn[i]
                    if not budget:
                        continue
                    if rule_c is not None:
                        dq = qn[rule_c]
                        take = len(dq)
                        if take > budget:
                            take = budget
                        for _ in range(take):          # youngest first
                            transit.append((dq.pop(), dest_node, rule_c))
                        if take:
                            un[rule_c] -= take
                            node_total[n] -= take
                            budget -= take
                    if budget and base_cs:
                        while budget:                   # oldest first across classes
                            best_c = -1
                            best_arr = -1
                            for c in base_cs:
                                dqc = qn[c]
                                if dqc:
                                    a = dqc[0][0]
                                    if best_arr < 0 or a < best_arr:
                                        best_arr = a
                                        best_c = c
                            if best_c < 0:
                                break
                            transit.append((qn[best_c].popleft(), dest_node, best_c))
                            un[best_c] -= 1
                            node_total[n] -= 1
                            budget -= 1
                    bn[i] = budget

            if not transit:
                break
            for batch, node, c in transit:
                if node == c:
                    slot_del += 1
                    self.total_delivered += 1
                    slot_lat += t + 1 - batch[1]
                    if paths is not None:
                        paths[batch[2]].append(node)
                    if events is not None:
                        events.append(
                            f"t={t} ev=deliver id={batch[2]} node={node} latency={t + 1 - batch[1]}"
                        )
                elif node_total[node] < capacity:
                    self._arr += 1
                    queues[node][c].append((self._arr, batch[1], batch[2]))
                    u[node][c] += 1
                    node_total[node] += 1
                    if paths is not None:
                        paths[batch[2]].append(node)
                    if events is not None:
                        events.append(f"t={t} ev=move id={batch[2]} to={node}")
                else:
                    slot_drop += 1
                    self.total_dropped += 1
                    if events is not None:
                        events.append(f"t={t} ev=drop id={batch[2]} at={node}")

        # (5) per-slot metrics
        self.series.generated.append(slot_gen)
        self.series.delivered.append(slot_del)
        self.series.dropped.append(slot_drop)
        self.series.latency_sum.append(slot_lat)
        self.series.total_queued.append(sum(node_total))
        self.series.lyapunov.append(sum(x * x for row in u for x in row))
        self.t = t + 1

    def _transit_fraction(self, view: NetworkView, installed: RuleSet, t: int) -> float:
        if not installed.rules:
            return float("nan")
        mode = self.config.controller.mode
        if mode is Mode.FBPR:
            forecast = self.forecaster.forecast(t, self.period)
        else:
            forecast = Forecast.zero(self.n_nodes, self.period)
        snapshot = NetworkSnapshot(time=t, queues=view.queues)
        checks = check_transit_assumption(snapshot, forecast, self.topology, installed)
        return sum(checks.values()) / len(checks)

    # -- whole runs ---------------------------------------------------------

    def run(self) -> MetricsReport:
        cfg = self.config
        while self.t < cfg.slots:
            self.step()
        params = {
            "mode": cfg.controller.mode.value,
            "G": cfg.traffic.base_rate,
            "v": cfg.traffic.heterogeneity,
            "T": cfg.controller.period,
            "alarm": cfg.controller.engine.alarm_level,
            "hop_filter": cfg.controller.engine.hop_filter.value,
        }
        return aggregate(
            self.series,
            warmup=cfg.resolved_warmup,
            slots=cfg.slots,
            slot_sec=cfg.slot_sec,
            batch_bytes=cfg.batch_bytes,
            seed=cfg.traffic.seed,
            transit_fractions=self.transit_fractions,
            params=params,
        )


def run(config: SimConfig) -> MetricsReport:
    """Execute a full run from empty queues; deterministic given the seed."""
    return Simulation(config).run()
