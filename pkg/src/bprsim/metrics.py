"""Per-slot series collection and run aggregates.

Latency is reported in slots (multiply by slot_sec for wall time), overflow
in batches per second with a byte-rate companion, throughput in bytes per
second. Aggregates exclude the warmup prefix; the per-slot series always
covers the whole run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bpr_engine import NetworkSnapshot


def lyapunov(snapshot: NetworkSnapshot) -> int:
    """Sum of squared per-(node, destination) backlogs, in batches^2."""
    q = snapshot.queues
    return int(np.sum(q * q))


@dataclass
class SlotSeries:
    """Parallel per-slot arrays appended as the simulation steps."""

    generated: list = field(default_factory=list)
    delivered: list = field(default_factory=list)
    dropped: list = field(default_factory=list)
    latency_sum: list = field(default_factory=list)
    total_queued: list = field(default_factory=list)
    lyapunov: list = field(default_factory=list)

    def __len__(self):
        return len(self.generated)


@dataclass
class MetricsReport:
    avg_delivery_slots: float
    overflow_rate: float        # batches per second
    overflow_rate_Bps: float    # same, in bytes per second
    throughput_Bps: float       # delivered bytes per second
    mean_total_queue: float
    mean_lyapunov: float
    transit_fraction: float
    total_generated: int
    total_delivered: int
    total_dropped: int
    slots: int
    warmup: int
    slot_sec: float
    batch_bytes: float
    seed: int
    params: dict = field(default_factory=dict)
    series: SlotSeries = field(default_factory=SlotSeries)


def aggregate(series: SlotSeries, warmup: int, slots: int, slot_sec: float,
              batch_bytes: float, seed: int = 0, transit_fractions=(),
              params=None) -> MetricsReport:
    """Fold per-slot series into a report, excluding the first `warmup` slots."""
    if warmup < 0 or warmup >= slots:
        raise ValueError(f"warmup {warmup} must satisfy 0 <= warmup < slots ({slots})")
    if len(series) != slots:
        raise ValueError(f"series covers {len(series)} slots, expected {slots}")
    window = slots - warmup
    seconds = window * slot_sec

    deliveries = sum(series.delivered[warmup:])
    latency = sum(series.latency_sum[warmup:])
    drops = sum(series.dropped[warmup:])

    avg_delivery = latency / deliveries if deliveries else math.nan
    valid_tf = [f for f in transit_fractions if not math.isnan(f)]
    transit = sum(valid_tf) / len(valid_tf) if valid_tf else math.nan

    return MetricsReport(
        avg_delivery_slots=avg_delivery,
        overflow_rate=drops / seconds,
        overflow_rate_Bps=drops * batch_bytes / seconds,
        throughput_Bps=deliveries * batch_bytes / seconds,
        mean_total_queue=sum(series.total_queued[warmup:]) / window,
        mean_lyapunov=sum(series.lyapunov[warmup:]) / window,
        transit_fraction=transit,
        total_generated=sum(series.generated),
        total_delivered=sum(series.delivered),
        total_dropped=sum(series.dropped),
        slots=slots,
        warmup=warmup,
        slot_sec=slot_sec,
        batch_bytes=batch_bytes,
        seed=seed,
        params=dict(params or {}),
        series=series,
    )


def third_drift(total_queued) -> float:
    """Stability proxy: relative change of the mean total queue between the
    middle and final thirds of a run."""
    n = len(total_queued)
    if n < 3:
        raise ValueError("need at least three slots")
    middle = total_queued[n // 3: 2 * n // 3]
    final = total_queued[2 * n // 3:]
    mean_mid = sum(middle) / len(middle)
    mean_fin = sum(final) / len(final)
    if mean_mid == 0:
        return 0.0 if mean_fin == 0 else math.inf
    return abs(mean_fin - mean_mid) / mean_mid
