import numpy as np
import pytest

from bprsim import (
    AcceptancePolicy,
    ControllerConfig,
    EngineConfig,
    ForecastProvider,
    Mode,
    NetworkView,
    TrafficConfig,
    actuate,
    oracle_forecast,
)
from bprsim.controller import apply_acceptance, make_forecaster
from bprsim.bpr_engine import PriorityRule, RuleSet
from bprsim.traffic import TrafficSchedule


def view_of(grid, table, queues):
    return NetworkView(topology=grid, baseline=table, queues=queues)


def hot_queues(n, pairs):
    q = np.zeros((n, n), dtype=np.int64)
    for (a, b), v in pairs.items():
        q[a, b] = v
    return q


def schedule(n_nodes=25, G=2, seed=3, slots=40, v=0.0):
    return TrafficSchedule(TrafficConfig(base_rate=G, heterogeneity=v, seed=seed),
                           n_nodes, slots)


def test_ospf_only_mode_empty_ruleset(grid5, grid5_table):
    q = hot_queues(25, {(12, 0): 400})
    cfg = ControllerConfig(period=5, engine=EngineConfig(), mode=Mode.OSPF_ONLY)
    rs = actuate(view_of(grid5, grid5_table, q), 10, cfg, AcceptancePolicy(),
                 make_forecaster(ForecastProvider(kind="zero"), schedule()))
    assert len(rs) == 0


def test_actuation_off_boundary_rejected(grid5, grid5_table):
    cfg = ControllerConfig(period=5, engine=EngineConfig(), mode=Mode.OSPF_ONLY)
    with pytest.raises(ValueError):
        actuate(view_of(grid5, grid5_table, np.zeros((25, 25), dtype=np.int64)),
                7, cfg, AcceptancePolicy(),
                make_forecaster(ForecastProvider(kind="zero"), schedule()))


def test_full_acceptance_returns_engine_output(grid5, grid5_table):
    q = hot_queues(25, {(12, 0): 300, (12, 24): 280, (7, 0): 150})
    cfg = ControllerConfig(period=5, engine=EngineConfig(alarm_level=100),
                           mode=Mode.SBPR)
    rs = actuate(view_of(grid5, grid5_table, q), 0, cfg, AcceptancePolicy(),
                 make_forecaster(ForecastProvider(kind="zero"), schedule()))
    assert len(rs) > 0
    from bprsim import sbpr_rules, NetworkSnapshot
    direct = sbpr_rules(NetworkSnapshot(0, q), grid5, grid5_table, cfg.engine)
    assert sorted((r.from_node, r.to, r.via.id, r.differential) for r in rs.rules) == \
        sorted((r.from_node, r.to, r.via.id, r.differential) for r in direct.rules)


def test_partial_acceptance_keeps_highest_differentials(grid5):
    links = grid5.out_links(12)
    rules = tuple(
        PriorityRule(12, c, l, dq)
        for l, (c, dq) in zip(links, [(0, 5), (24, 9), (4, 9), (20, 2)])
    )
    proposed = RuleSet(time=0, rules=rules)
    kept = apply_acceptance(proposed, AcceptancePolicy(default=0.5))
    assert len(kept) == 2  # ceil(0.5 * 4)
    dqs = sorted((r.differential, r.via.id) for r in kept.rules)
    # the two dq=9 rules win; tie between them is broken by link id upstream
    assert [d for d, _ in dqs] == [9, 9]


def test_zero_acceptance_reduces_to_ospf(grid5):
    links = grid5.out_links(12)
    proposed = RuleSet(time=0, rules=(PriorityRule(12, 0, links[0], 5),))
    kept = apply_acceptance(proposed, AcceptancePolicy(default=0.0))
    assert len(kept) == 0


def test_per_node_acceptance_override(grid5):
    links12 = grid5.out_links(12)
    links7 = grid5.out_links(7)
    proposed = RuleSet(time=0, rules=(
        PriorityRule(7, 0, links7[0], 3),
        PriorityRule(12, 0, links12[0], 5),
        PriorityRule(12, 24, links12[1], 8),
    ))
    policy = AcceptancePolicy(default=1.0, per_node={12: 0.5})
    kept = apply_acceptance(proposed, policy)
    got = sorted((r.from_node, r.to) for r in kept.rules)
    assert got == [(7, 0), (12, 24)]  # node 12 keeps its higher-differential rule


def test_oracle_forecast_counts_schedule():
    sched = schedule(n_nodes=25, G=2, seed=3, slots=40)
    f = oracle_forecast(sched, 10, 5)
    assert f.horizon == 5
    for n in range(25):
        assert f.generated[n].sum() == sum(
            1 for t in range(10, 15) for (o, _) in sched.batches(t) if o == n
        )


def test_oracle_forecast_deterministic_rates():
    # integral G with v=0 generates exactly G batches per node per slot
    sched = schedule(n_nodes=25, G=2, seed=9, slots=20, v=0.0)
    f = oracle_forecast(sched, 0, 5)
    assert all(f.generated[n].sum() == 10 for n in range(25))


def test_oracle_forecast_beyond_schedule_errors():
    sched = schedule(slots=20)
    with pytest.raises(ValueError):
        oracle_forecast(sched, 18, 5)


def test_zero_rate_node_all_zero_row():
    sched = schedule(G=0, slots=10)
    f = oracle_forecast(sched, 0, 5)
    assert not f.generated.any()


def test_moving_average_forecaster_scales_history():
    sched = schedule(n_nodes=25, G=3, seed=5, slots=30)
    fc = make_forecaster(ForecastProvider(kind="moving_average", window=10), sched)
    f = fc.forecast(10, 5)
    # 30 batches per row over the window, scaled by 5/10 with per-entry
    # half-up rounding: row sums land in [15, 15 + #odd entries / 2]
    for n in range(25):
        assert 15 <= f.generated[n].sum() <= 27
    assert fc.forecast(0, 5).generated.sum() == 0  # no history yet


def test_acceptance_policy_validation():
    with pytest.raises(ValueError):
        AcceptancePolicy(default=1.5)
    with pytest.raises(ValueError):
        AcceptancePolicy(per_node={3: -0.1})


def test_controller_config_validation():
    with pytest.raises(ValueError):
        ControllerConfig(period=0)
    with pytest.raises(ValueError):
        ForecastProvider(kind="moving_average")
