"""Traffic-invariant underlying routing: hop-count shortest path (OSPF-like).

Priority flow rules overlay this table; absence of a rule means the baseline
next hop serves the traffic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .topology import Link, NodeId, Topology


@dataclass(frozen=True)
class NextHopTable:
    """Per (node, destination) the single serving out-link on a min-hop path."""

    n_nodes: int
    table: dict  # (n, c) -> Link

    def next_link(self, n: NodeId, c: NodeId) -> Link:
        return self.table[(n, c)]


def compute_next_hops(topology: Topology) -> NextHopTable:
    """Min-hop next-hop table; ties broken by lowest next-hop node, then link id.

    Raises on a disconnected topology, naming an unreachable pair.
    """
    n = topology.n_nodes
    # reverse adjacency for per-destination BFS
    rev = [[] for _ in range(n)]
    for l in topology.links:
        rev[l.dest].append(l.source)

    table = {}
    for c in range(n):
        dist = [-1] * n
        dist[c] = 0
        frontier = [c]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for p in rev[u]:
                    if dist[p] < 0:
                        dist[p] = d
                        nxt.append(p)
            frontier = nxt
        for node in range(n):
            if node == c:
                continue
            if dist[node] < 0:
                raise ValueError(f"topology is disconnected: no path from {node} to {c}")
            best = None
            for l in topology.out_links(node):
                if dist[l.dest] == dist[node] - 1:
                    key = (l.dest, l.id)
                    if best is None or key < best[0]:
                        best = (key, l)
            table[(node, c)] = best[1]
    return NextHopTable(n_nodes=n, table=table)


def route_of(table: NextHopTable, n: NodeId, c: NodeId) -> Link:
    """The unique link serving traffic at n destined to c."""
    if n == c:
        raise ValueError(f"no route for self-destination (node {n})")
    return table.table[(n, c)]
