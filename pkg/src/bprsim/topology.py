"""Backbone topology: nodes, directed capacitated links, multi-link groups, peering.

Nodes are dense integer ids 0..N-1. A bidirectional physical link is stored
as two directed ``Link`` records. Bandwidths are whole batches per slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

NodeId = int

# Sentinel hop count for unreachable pairs; larger than any real path length.
_UNREACHABLE = 1 << 30


@dataclass(frozen=True)
class Link:
    """Directed capacitated link. Bandwidth is in whole batches per slot."""

    id: int
    source: NodeId
    dest: NodeId
    bandwidth: int

    def __post_init__(self):
        if self.source == self.dest:
            raise ValueError(f"link {self.id}: source == dest == {self.source}")
        if self.bandwidth < 1:
            raise ValueError(f"link {self.id}: bandwidth must be >= 1 batch/slot")


@dataclass(frozen=True)
class MultiLinkGroup:
    """Parallel links sharing (source, dest) whose assignments are jointly permuted."""

    source: NodeId
    dest: NodeId
    members: tuple[int, ...]

    def __post_init__(self):
        if len(self.members) < 1:
            raise ValueError("multi-link group needs at least one member link")


@dataclass(frozen=True)
class PeeringPolicy:
    """Bilateral constraints on rule derivation.

    A denied (source, dest) pair is removed from every rule-derivation search
    but stays available to baseline shortest-path routing.
    """

    denied: frozenset[tuple[NodeId, NodeId]] = field(default_factory=frozenset)

    def allows(self, source: NodeId, dest: NodeId) -> bool:
        return (source, dest) not in self.denied

    @classmethod
    def allow_all(cls) -> "PeeringPolicy":
        return cls()

    @classmethod
    def deny_pairs(cls, pairs) -> "PeeringPolicy":
        return cls(denied=frozenset((int(a), int(b)) for a, b in pairs))


class Topology:
    """Immutable directed-link graph with precomputed all-pairs hop counts."""

    def __init__(self, n_nodes, links, multilinks=(), policy=None):
        if n_nodes < 1:
            raise ValueError("topology needs at least one node")
        self.n_nodes = int(n_nodes)
        self.nodes = tuple(range(self.n_nodes))
        self.links = tuple(sorted(links, key=lambda l: l.id))
        self.multilinks = tuple(multilinks)
        self.policy = policy if policy is not None else PeeringPolicy.allow_all()

        ids = [l.id for l in self.links]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate link ids")
        for l in self.links:
            if not (0 <= l.source < self.n_nodes and 0 <= l.dest < self.n_nodes):
                raise ValueError(f"link {l.id}: endpoint out of range")
        by_id = {l.id: l for l in self.links}
        for g in self.multilinks:
            for m in g.members:
                l = by_id.get(m)
                if l is None:
                    raise ValueError(f"multi-link member {m} is not a link id")
                if (l.source, l.dest) != (g.source, g.dest):
                    raise ValueError(
                        f"multi-link member {m} does not share ({g.source}, {g.dest})"
                    )

        out = [[] for _ in range(self.n_nodes)]
        for l in self.links:
            out[l.source].append(l)
        # ascending link id per node
        self._out = tuple(tuple(sorted(ls, key=lambda l: l.id)) for ls in out)
        self._hops = self._all_pairs_hops()

    def link(self, link_id: int) -> Link:
        return self._by_id[link_id]

    @property
    def _by_id(self):
        d = getattr(self, "_by_id_cache", None)
        if d is None:
            d = {l.id: l for l in self.links}
            object.__setattr__(self, "_by_id_cache", d)
        return d

    def out_links(self, n: NodeId) -> tuple[Link, ...]:
        """Out-links of ``n`` in ascending link-id order, policy-denied included."""
        return self._out[n]

    def hop_distance(self, a: NodeId, b: NodeId):
        """Minimum hop count from a to b, or None when b is unreachable."""
        d = self._hops[a][b]
        return None if d >= _UNREACHABLE else d

    @property
    def hop_matrix(self):
        """All-pairs hop counts as a list of rows; unreachable pairs hold a huge sentinel."""
        return self._hops

    def is_connected(self) -> bool:
        return all(d < _UNREACHABLE for row in self._hops for d in row)

    def _all_pairs_hops(self):
        n = self.n_nodes
        hops = []
        for src in range(n):
            dist = [_UNREACHABLE] * n
            dist[src] = 0
            frontier = [src]
            d = 0
            while frontier:
                d += 1
                nxt = []
                for u in frontier:
                    for l in self._out[u]:
                        if dist[l.dest] > d:
                            dist[l.dest] = d
                            nxt.append(l.dest)
                frontier = nxt
            hops.append(dist)
        return hops


def build_grid(rows, cols, bandwidth_bytes_per_sec, batch_bytes, slot_sec) -> Topology:
    """Rectangular grid of nodes, each joined to its up/down/left/right neighbors.

    Node (i, j) maps to index i*cols + j. Every undirected edge becomes two
    directed links. Bandwidth converts to whole batches per slot, remainder
    discarded.
    """
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be positive")
    if rows * cols < 2:
        raise ValueError("grid needs at least two nodes")
    if bandwidth_bytes_per_sec <= 0 or batch_bytes <= 0 or slot_sec <= 0:
        raise ValueError("bandwidth, batch size and slot duration must be positive")
    bw = batches_per_slot(bandwidth_bytes_per_sec, batch_bytes, slot_sec)
    if bw < 1:
        raise ValueError("link bandwidth is below one batch per slot")

    links = []

    def add_edge(a, b):
        links.append(Link(id=len(links), source=a, dest=b, bandwidth=bw))
        links.append(Link(id=len(links), source=b, dest=a, bandwidth=bw))

    for i in range(rows):
        for j in range(cols):
            n = i * cols + j
            if j + 1 < cols:
                add_edge(n, n + 1)
            if i + 1 < rows:
                add_edge(n, n + cols)
    return Topology(rows * cols, links)


def batches_per_slot(bandwidth_bytes_per_sec, batch_bytes, slot_sec) -> int:
    """Whole batches a link serves per slot; fractional capacity is floored."""
    return int(math.floor(bandwidth_bytes_per_sec * slot_sec / batch_bytes + 1e-9))


def load_topology(doc: dict) -> Topology:
    """Build a Topology from a config mapping.

    Two forms are accepted. A grid:

        topology:
          grid: {rows: 5, cols: 5}
          bandwidth_bytes_per_sec: 2.0e9
          batch_bytes: 1.0e8
          slot_sec: 1.0

    or an explicit directed link list:

        topology:
          nodes: 3
          links:
            - {source: 0, dest: 1, bandwidth_bytes_per_sec: 2.0e9}
          multilinks:                      # optional
            - {source: 0, dest: 1, members: [0, 1]}
          peering_deny: [[0, 2]]           # optional
    """
    if "grid" in doc:
        grid = doc["grid"]
        return build_grid(
            int(grid["rows"]),
            int(grid["cols"]),
            float(doc.get("bandwidth_bytes_per_sec", 2e9)),
            float(doc.get("batch_bytes", 1e8)),
            float(doc.get("slot_sec", 1.0)),
        )
    n_nodes = int(doc["nodes"])
    batch_bytes = float(doc.get("batch_bytes", 1e8))
    slot_sec = float(doc.get("slot_sec", 1.0))
    links = []
    for i, spec in enumerate(doc["links"]):
        if "bandwidth_bytes_per_sec" in spec:
            bw = batches_per_slot(float(spec["bandwidth_bytes_per_sec"]), batch_bytes, slot_sec)
        else:
            bw = int(spec["bandwidth"])
        links.append(Link(id=int(spec.get("id", i)), source=int(spec["source"]),
                          dest=int(spec["dest"]), bandwidth=bw))
    multilinks = []
    for g in doc.get("multilinks", ()):
        members = tuple(int(m) for m in g["members"])
        if len(members) < 2:
            raise ValueError("multi-link groups in config need at least two members")
        multilinks.append(MultiLinkGroup(int(g["source"]), int(g["dest"]), members))
    policy = PeeringPolicy.deny_pairs(doc.get("peering_deny", ()))
    return Topology(n_nodes, links, multilinks, policy)
