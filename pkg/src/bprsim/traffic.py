"""Seeded batch-traffic generation.

Each node draws a realized per-slot rate once per run, uniform in
[G - v*G, G + v*G]. Per slot a node creates floor(rate) batches plus one more
with probability frac(rate); each batch picks its destination uniformly among
the other N-1 nodes. The whole schedule is drawn up front so that an oracle
forecast can read future generation exactly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TrafficConfig:
    base_rate: float
    heterogeneity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.base_rate < 0:
            raise ValueError("base_rate must be >= 0")
        if not 0.0 <= self.heterogeneity <= 1.0:
            raise ValueError("heterogeneity must lie in [0, 1]")


class TrafficSchedule:
    """Pre-drawn (origin, destination) batch creations for every slot."""

    def __init__(self, config: TrafficConfig, n_nodes: int, n_slots: int):
        if n_nodes < 2:
            raise ValueError("traffic needs at least two nodes")
        self.config = config
        self.n_nodes = n_nodes
        self.n_slots = n_slots
        rng = random.Random(config.seed)
        g, v = config.base_rate, config.heterogeneity
        self.node_rates = [rng.uniform(g - v * g, g + v * g) for _ in range(n_nodes)]
        self._slots = []
        for _ in range(n_slots):
            batches = []
            for n in range(n_nodes):
                rate = self.node_rates[n]
                count = int(math.floor(rate))
                frac = rate - count
                if frac > 0.0 and rng.random() < frac:
                    count += 1
                for _ in range(count):
                    d = rng.randrange(n_nodes - 1)
                    if d >= n:
                        d += 1
                    batches.append((n, d))
            self._slots.append(batches)
        self._counts_cache = [None] * n_slots

    def batches(self, t: int):
        """(origin, destination) pairs created in slot t, in creation order."""
        return self._slots[t]

    def counts(self, t: int) -> np.ndarray:
        """Per-(origin, destination) creation counts for slot t."""
        cached = self._counts_cache[t]
        if cached is None:
            cached = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int64)
            for n, c in self._slots[t]:
                cached[n, c] += 1
            self._counts_cache[t] = cached
        return cached

    def window_counts(self, t0: int, t1: int) -> np.ndarray:
        """Summed creation counts over slots [t0, t1). Raises beyond the schedule."""
        if t0 < 0 or t1 > self.n_slots or t0 > t1:
            raise ValueError(
                f"window [{t0}, {t1}) outside schedule of {self.n_slots} slots"
            )
        total = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int64)
        for t in range(t0, t1):
            total += self.counts(t)
        return total
