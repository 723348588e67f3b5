import math
import random

import numpy as np
import pytest

from bprsim import NetworkSnapshot, SlotSeries, aggregate, lyapunov, third_drift


def series_of(generated, delivered, dropped, latency_sum, total_queued, lyap):
    return SlotSeries(
        generated=list(generated), delivered=list(delivered), dropped=list(dropped),
        latency_sum=list(latency_sum), total_queued=list(total_queued),
        lyapunov=list(lyap),
    )


def test_lyapunov_empty_network():
    assert lyapunov(NetworkSnapshot(0, np.zeros((4, 4), dtype=np.int64))) == 0


def test_lyapunov_single_queue():
    q = np.zeros((4, 4), dtype=np.int64)
    q[1, 2] = 3
    assert lyapunov(NetworkSnapshot(0, q)) == 9


def test_lyapunov_matches_double_loop_oracle():
    rng = random.Random(2)
    q = np.array([[0 if a == b else rng.randrange(50) for b in range(6)]
                  for a in range(6)])
    expect = 0
    for a in range(6):
        for b in range(6):
            expect += int(q[a][b]) ** 2
    assert lyapunov(NetworkSnapshot(0, q)) == expect


def test_aggregate_latency_mean():
    s = series_of([10] * 10, [0] * 5 + [2] * 5, [0] * 10, [0] * 5 + [4] * 5,
                  [10] * 10, [100] * 10)
    rep = aggregate(s, warmup=0, slots=10, slot_sec=1.0, batch_bytes=1e8)
    assert rep.avg_delivery_slots == 2.0
    assert rep.overflow_rate == 0.0
    assert rep.throughput_Bps == 10 * 1e8 / 10


def test_aggregate_excludes_warmup():
    s = series_of([5, 5], [1, 3], [2, 0], [9, 3], [4, 4], [16, 16])
    rep = aggregate(s, warmup=1, slots=2, slot_sec=1.0, batch_bytes=1e8)
    assert rep.avg_delivery_slots == 1.0
    assert rep.overflow_rate == 0.0
    assert rep.total_generated == 10  # totals stay whole-run


def test_aggregate_no_deliveries_nan():
    s = series_of([1], [0], [1], [0], [1], [1])
    rep = aggregate(s, warmup=0, slots=1, slot_sec=1.0, batch_bytes=1e8)
    assert math.isnan(rep.avg_delivery_slots)


def test_aggregate_rejects_bad_warmup():
    s = series_of([1], [1], [0], [1], [0], [0])
    with pytest.raises(ValueError):
        aggregate(s, warmup=1, slots=1, slot_sec=1.0, batch_bytes=1e8)
    with pytest.raises(ValueError):
        aggregate(s, warmup=5, slots=3, slot_sec=1.0, batch_bytes=1e8)


def test_overflow_rate_units():
    # 6 drops over 3 measured slots of 2 seconds each -> 1 batch/sec
    s = series_of([2, 2, 2], [0, 0, 0], [2, 2, 2], [0, 0, 0], [0, 0, 0], [0, 0, 0])
    rep = aggregate(s, warmup=0, slots=3, slot_sec=2.0, batch_bytes=1e8)
    assert rep.overflow_rate == 1.0
    assert rep.overflow_rate_Bps == 1e8


def test_transit_fraction_nan_skipping():
    s = series_of([0], [0], [0], [0], [0], [0])
    rep = aggregate(s, warmup=0, slots=1, slot_sec=1.0, batch_bytes=1e8,
                    transit_fractions=[math.nan, 0.5, 1.0])
    assert rep.transit_fraction == 0.75
    rep = aggregate(s, warmup=0, slots=1, slot_sec=1.0, batch_bytes=1e8,
                    transit_fractions=[math.nan])
    assert math.isnan(rep.transit_fraction)


def test_third_drift():
    flat = [100] * 30
    assert third_drift(flat) == 0.0
    rising = list(range(30))
    assert third_drift(rising) > 0.5
    assert third_drift([0] * 30) == 0.0
