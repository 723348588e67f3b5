"""Backpressure rule derivation: SBPR and its foresight-enabled generalization.

Given a congestion snapshot (and, for the foresight variant, a forecast of
traffic each node will generate over the next actuation period), derive at
most one priority flow rule {from, to, via} per directed link. The foresight
variant scores a candidate destination c on link l as

    U[n][c] - (U[dest(l)][c] + G[dest(l)][c])

and keeps the plain queue differential max{0, U[n][c] - U[dest(l)][c]} as the
deployed rule's weight. SBPR is the zero-forecast special case with the hop
filter disabled and loop detection enabled.

Iteration-order contract: nodes ascending, out-links of each node in
ascending link id, destination argmax ties broken by lowest destination id.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .baseline_routing import NextHopTable, route_of
from .topology import Link, MultiLinkGroup, NodeId, Topology

_INT_MIN = np.iinfo(np.int64).min


class HopFilter(str, Enum):
    """Restriction on candidate destinations relative to the hop-count table.

    strict_decrease admits c only when the candidate link moves strictly
    closer to c, which rules out forwarding loops by construction.
    non_increase admits equal-distance neighbors as well; that re-admits
    2-cycles between equidistant nodes, so loop detection is forced on.
    """

    STRICT_DECREASE = "strict_decrease"
    NON_INCREASE = "non_increase"
    OFF = "off"


@dataclass(frozen=True)
class EngineConfig:
    """alarm_level gates whole nodes: rule derivation runs at a node only
    while its total held batches reach the threshold (0 disables the gate)."""

    alarm_level: int = 0
    hop_filter: HopFilter = HopFilter.STRICT_DECREASE
    loop_detection: bool = True

    def __post_init__(self):
        if self.alarm_level < 0:
            raise ValueError("alarm_level must be >= 0")
        object.__setattr__(self, "hop_filter", HopFilter(self.hop_filter))


@dataclass(frozen=True)
class NetworkSnapshot:
    """Per-(node, destination) backlog counts at one slot.

    queues is an (N, N) integer matrix; entry [n][c] counts batches held at
    node n destined to node c. The diagonal is zero by construction.
    """

    time: int
    queues: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.queues, dtype=np.int64)
        object.__setattr__(self, "queues", q)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("queues must be a square matrix")
        if (q < 0).any():
            raise ValueError("queue counts must be non-negative")
        if np.diagonal(q).any():
            raise ValueError("self-destined queue entries must be zero")

    @classmethod
    def from_dict(cls, time: int, n_nodes: int, entries: dict) -> "NetworkSnapshot":
        q = np.zeros((n_nodes, n_nodes), dtype=np.int64)
        for (n, c), v in entries.items():
            q[n, c] = v
        return cls(time=time, queues=q)

    def queue(self, n: NodeId, c: NodeId) -> int:
        return int(self.queues[n, c])


@dataclass(frozen=True)
class Forecast:
    """Predicted per-(node, destination) batch generation over the next horizon slots.

    Any non-negative matrix is accepted. Generator-backed forecasts carry a
    zero diagonal naturally; a constant matrix (uniform) must keep its
    diagonal so that it shifts every candidate score equally, which is what
    reduces the foresight selection to the plain differential rule.
    """

    horizon: int
    generated: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.generated, dtype=np.int64)
        object.__setattr__(self, "generated", g)
        if self.horizon < 1:
            raise ValueError("forecast horizon must be >= 1")
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError("generated must be a square matrix")
        if (g < 0).any():
            raise ValueError("forecast values must be non-negative")

    @classmethod
    def zero(cls, n_nodes: int, horizon: int) -> "Forecast":
        return cls(horizon=horizon, generated=np.zeros((n_nodes, n_nodes), dtype=np.int64))

    @classmethod
    def uniform(cls, n_nodes: int, horizon: int, value: int) -> "Forecast":
        return cls(horizon=horizon,
                   generated=np.full((n_nodes, n_nodes), int(value), dtype=np.int64))


@dataclass(frozen=True)
class PriorityRule:
    """Overlay rule: traffic at from_node destined to `to` leaves via `via`."""

    from_node: NodeId
    to: NodeId
    via: Link
    differential: int

    def __post_init__(self):
        if self.via.source != self.from_node:
            raise ValueError("rule link must originate at from_node")
        if self.differential <= 0:
            raise ValueError("zero-differential rules are never emitted")


@dataclass(frozen=True)
class RuleSet:
    time: int
    rules: tuple[PriorityRule, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        link_ids = [r.via.id for r in self.rules]
        if len(set(link_ids)) != len(link_ids):
            raise ValueError("at most one priority rule per link")
        per_node = {}
        for r in self.rules:
            dests = per_node.setdefault(r.from_node, set())
            if r.to in dests:
                raise ValueError(f"node {r.from_node} routes destination {r.to} twice")
            dests.add(r.to)

    def __len__(self):
        return len(self.rules)

    def by_node(self) -> dict:
        out = {}
        for r in self.rules:
            out.setdefault(r.from_node, []).append(r)
        return out


def rules_to_text(ruleset: RuleSet) -> str:
    """Line-oriented form `from=<n> to=<c> via=<linkid> dq=<int>`, one rule per line."""
    return "\n".join(
        f"from={r.from_node} to={r.to} via={r.via.id} dq={r.differential}"
        for r in ruleset.rules
    )


def rules_from_text(text: str, topology: Topology, time: int = 0) -> RuleSet:
    rules = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        kv = dict(part.split("=", 1) for part in line.split())
        rules.append(
            PriorityRule(
                from_node=int(kv["from"]),
                to=int(kv["to"]),
                via=topology.link(int(kv["via"])),
                differential=int(kv["dq"]),
            )
        )
    return RuleSet(time=time, rules=tuple(rules))


def delta_score(snapshot: NetworkSnapshot, forecast: Forecast,
                n: NodeId, neighbor: NodeId, c: NodeId) -> int:
    """Foresight-adjusted differential for offloading (n, c)-traffic to neighbor.

    U[n][c] - U[neighbor][c] - G[neighbor][c]; may be negative.
    """
    if n == neighbor:
        raise ValueError("neighbor must differ from n")
    U = snapshot.queues
    return int(U[n, c] - U[neighbor, c] - forecast.generated[neighbor, c])


def _link_assignments(snapshot: NetworkSnapshot, forecast: Forecast,
                      topology: Topology, config: EngineConfig) -> dict:
    """Per-link destination choice and raw queue differential.

    Returns {link_id: (link, c_star, dq)} where dq = max(0, U[n][c*]-U[d][c*]).
    Links whose candidate set is empty are absent. Destinations are consumed
    per node via the visited array even when dq comes out zero.
    """
    U = snapshot.queues
    G = forecast.generated
    n_nodes = topology.n_nodes
    hops = np.asarray(topology.hop_matrix, dtype=np.int64)
    policy = topology.policy
    idx = np.arange(n_nodes)
    assignments = {}

    for n in range(n_nodes):
        out = topology.out_links(n)
        if not out:
            continue
        # alarm gate: a node derives rules only while its total backlog
        # (single-queue occupancy) is at or above the alarm level
        if config.alarm_level > 0 and int(U[n].sum()) < config.alarm_level:
            continue
        visited = np.zeros(n_nodes, dtype=bool)
        base_valid = idx != n
        for l in out:
            if not policy.allows(n, l.dest):
                continue
            valid = base_valid & ~visited
            if config.hop_filter is HopFilter.STRICT_DECREASE:
                valid = valid & (hops[l.dest] < hops[n])
            elif config.hop_filter is HopFilter.NON_INCREASE:
                valid = valid & (hops[l.dest] <= hops[n])
            if not valid.any():
                continue
            score = U[n] - U[l.dest] - G[l.dest]
            c_star = int(np.argmax(np.where(valid, score, _INT_MIN)))
            visited[c_star] = True
            dq = max(0, int(U[n, c_star]) - int(U[l.dest, c_star]))
            assignments[l.id] = (l, c_star, dq)
    return assignments


def assign_multilinks(group: MultiLinkGroup, candidates, topology: Topology,
                      snapshot: NetworkSnapshot | None = None):
    """Reorder destination assignments across a multi-link group.

    candidates is one (c, dq) pair per member link, aligned with
    group.members; unassigned members pass (None, 0). Returns the permutation
    of those pairs maximizing sum(bandwidth_l * dq_l), found exhaustively;
    ties keep the lexicographically smallest permutation (identity first).
    The snapshot is accepted for diagnostic call sites and is not consulted:
    raw differentials permute with their destinations because every member
    link shares the same endpoints.
    """
    members = [topology.link(m) for m in group.members]
    return _assign_multilinks_impl(members, candidates)


def _assign_multilinks_impl(members, pairs):
    if len(pairs) != len(members):
        raise ValueError("one candidate pair per member link is required")
    k = len(members)
    if k == 1:
        return list(pairs)
    bw = [l.bandwidth for l in members]
    best_perm = None
    best_obj = None
    for perm in itertools.permutations(range(k)):
        obj = sum(bw[i] * pairs[perm[i]][1] for i in range(k))
        if best_obj is None or obj > best_obj:
            best_obj, best_perm = obj, perm
    return [pairs[best_perm[i]] for i in range(k)]


def detect_and_filter_loops(rules: RuleSet, baseline: NextHopTable,
                            topology: Topology) -> RuleSet:
    """Remove priority rules until every per-destination forwarding graph is acyclic.

    For each destination, the effective next hop is the rule's link target at
    rule-bearing nodes and the baseline next hop elsewhere. While a cycle
    exists, the cycle's rule with the smallest differential (then smallest
    link id) is dropped and the check repeats.
    """
    surviving = list(rules.rules)
    dests = sorted({r.to for r in surviving})
    for c in dests:
        while True:
            rule_at = {r.from_node: r for r in surviving if r.to == c}
            if not rule_at:
                break
            cycle = _find_cycle(rule_at, baseline, topology, c)
            if cycle is None:
                break
            offenders = [rule_at[n] for n in cycle if n in rule_at]
            victim = min(offenders, key=lambda r: (r.differential, r.via.id))
            surviving.remove(victim)
    return RuleSet(time=rules.time, rules=tuple(surviving))


def _find_cycle(rule_at: dict, baseline: NextHopTable, topology: Topology, c: NodeId):
    """First cycle (as a list of nodes) in the destination-c forwarding graph, or None."""
    n_nodes = topology.n_nodes
    state = [0] * n_nodes  # 0 unvisited, 1 on current walk, 2 safe
    state[c] = 2
    for start in range(n_nodes):
        if state[start] != 0:
            continue
        walk = []
        node = start
        while state[node] == 0:
            state[node] = 1
            walk.append(node)
            rule = rule_at.get(node)
            node = rule.via.dest if rule is not None else route_of(baseline, node, c).dest
        if state[node] == 1:
            cycle = walk[walk.index(node):]
            for w in walk:
                state[w] = 2
            return cycle
        for w in walk:
            state[w] = 2
    return None


def check_transit_assumption(snapshot: NetworkSnapshot, forecast: Forecast,
                             topology: Topology, chosen: RuleSet) -> dict:
    """Diagnostic per chosen rule: does transit capacity at the offload target
    dominate the queue-plus-forecast differential?

    For a rule {from: n, to: c, via: l} with b = dest(l), evaluates

        T * (sum of bandwidths into b + bandwidth(l)) > U[n][c] - (U[b][c] + G[b][c])

    Never alters rules.
    """
    U = snapshot.queues
    G = forecast.generated
    T = forecast.horizon
    in_bw = [0] * topology.n_nodes
    for l in topology.links:
        in_bw[l.dest] += l.bandwidth
    result = {}
    for r in chosen.rules:
        n, c, b = r.from_node, r.to, r.via.dest
        lhs = T * (in_bw[b] + r.via.bandwidth)
        rhs = int(U[n, c]) - (int(U[b, c]) + int(G[b, c]))
        result[(n, c)] = lhs > rhs
    return result


def fbpr_rules(snapshot: NetworkSnapshot, forecast: Forecast, topology: Topology,
               baseline: NextHopTable, config: EngineConfig,
               period: int | None = None) -> RuleSet:
    """Foresight-enabled rule derivation over one snapshot.

    Per node, per policy-permitted out-link in ascending id order, picks the
    not-yet-visited destination maximizing the foresight-adjusted score
    (subject to the hop filter and, when alarm_level > 0, the per-node alarm
    gate), then reorders assignments within each multi-link group and emits a
    rule wherever the raw queue differential is positive. Loop detection runs
    when configured, and is forced on under the non_increase hop filter.
    """
    if period is not None and forecast.horizon != period:
        raise ValueError(
            f"forecast horizon {forecast.horizon} != controller period {period}"
        )
    if forecast.generated.shape[0] != topology.n_nodes:
        raise ValueError("forecast shape does not match topology")
    if snapshot.queues.shape[0] != topology.n_nodes:
        raise ValueError("snapshot shape does not match topology")

    assignments = _link_assignments(snapshot, forecast, topology, config)

    for group in topology.multilinks:
        pairs = [
            (assignments[m][1], assignments[m][2]) if m in assignments else (None, 0)
            for m in group.members
        ]
        members = [topology.link(m) for m in group.members]
        reordered = _assign_multilinks_impl(members, pairs)
        for link, (c, dq) in zip(members, reordered):
            if c is None:
                assignments.pop(link.id, None)
            else:
                assignments[link.id] = (link, c, dq)

    rules = []
    for link_id in sorted(assignments):
        link, c, dq = assignments[link_id]
        if dq > 0:
            rules.append(PriorityRule(from_node=link.source, to=c, via=link, differential=dq))
    ruleset = RuleSet(time=snapshot.time, rules=tuple(rules))

    if config.loop_detection or config.hop_filter is HopFilter.NON_INCREASE:
        ruleset = detect_and_filter_loops(ruleset, baseline, topology)
    return ruleset


def sbpr_rules(snapshot: NetworkSnapshot, topology: Topology,
               baseline: NextHopTable, config: EngineConfig) -> RuleSet:
    """Standard backpressure rules: zero forecast, hop filter off.

    Loop detection follows config.loop_detection (on by default) since the
    unfiltered differential search may create forwarding loops.
    """
    zero = Forecast.zero(topology.n_nodes, horizon=1)
    cfg = EngineConfig(
        alarm_level=config.alarm_level,
        hop_filter=HopFilter.OFF,
        loop_detection=False,
    )
    ruleset = fbpr_rules(snapshot, zero, topology, baseline, cfg)
    if config.loop_detection:
        ruleset = detect_and_filter_loops(ruleset, baseline, topology)
    return ruleset
