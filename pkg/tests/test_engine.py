"""Step composition, paired runs, sweeps and reproducibility."""

from dataclasses import replace

import pytest

from bwbroker.allocation import PolicyKind
from bwbroker.broker import DemandHistory
from bwbroker.engine import (
    FIG3_LOAD_FRACTIONS,
    FIG5_CHANNEL_TARGETS,
    SweepSpec,
    apply_sweep_value,
    build_trace,
    fig3_sweep,
    fig5_sweep,
    replication_seed,
    run_experiment,
    run_paired,
    run_policies,
    run_replication,
    run_step,
    run_trace,
)
from bwbroker.metrics import aggregate
from bwbroker.model import CellState, ConfigError
from bwbroker.traffic import EventKind, TrafficEvent


def _arrivals(n_channels, n_unit_calls):
    """One step's worth of fresh traffic: calls first, then viewers."""
    ev = [
        TrafficEvent(0.0, EventKind.NON_IPTV_ARRIVE, call_id=i,
                     bw_mbps=1.0, depart_time_min=999.0)
        for i in range(n_unit_calls)
    ]
    ev += [
        TrafficEvent(0.0, EventKind.VIEWER_ARRIVE, channel_id=k + 1,
                     viewer_id=k, depart_time_min=999.0)
        for k in range(n_channels)
    ]
    return ev


def test_idle_step(cfg):
    state = CellState.for_config(cfg)
    history = DemandHistory.for_config(cfg)
    r = run_step(state, history, PolicyKind.SLA, cfg, [])
    assert r.satisfaction == 1.0
    assert r.utilization == 0.0
    assert r.reserved_mbps == 0.0
    assert r.active_channels == 0
    assert history.samples == (0.0,)
    assert state.time_min == 1.0


def test_step_equal_degradation(cfg):
    state = CellState.for_config(cfg)
    history = DemandHistory.for_config(cfg)
    r = run_step(state, history, PolicyKind.NON_SLA, cfg, _arrivals(20, 30))
    assert r.per_channel_bw_mbps == pytest.approx(12 / 7, rel=1e-12)
    assert r.satisfaction == pytest.approx(6 / 7, rel=1e-12)
    assert r.utilization == pytest.approx(1.0, abs=1e-12)
    assert r.reserved_mbps == 0.0
    assert r.borrowed_mbps == 0.0
    assert r.active_channels == 20
    assert r.blocks == 0 and r.drops == 0
    assert history.samples == (40.0,)


def test_step_reservation_shields_channels(cfg):
    state = CellState.for_config(cfg)
    history = DemandHistory.for_config(cfg)
    for _ in range(60):
        history.record_sample(40.0)
    r = run_step(state, history, PolicyKind.SLA, cfg, _arrivals(20, 30))
    assert r.reserved_mbps == 40.0
    assert r.per_channel_bw_mbps == 2.0
    assert r.satisfaction == 1.0
    assert r.borrowed_mbps == 10.0
    assert r.utilization == pytest.approx(1.0, abs=1e-12)


def test_replication_is_reproducible(short_cfg):
    a = run_replication(short_cfg, PolicyKind.SLA, 7)
    b = run_replication(short_cfg, PolicyKind.SLA, 7)
    assert a == b
    assert len(a) == short_cfg.n_steps


def test_short_run_summary_is_frozen(short_cfg):
    out = run_policies(short_cfg)
    non = aggregate(out[PolicyKind.NON_SLA], short_cfg.warmup_min)
    sla = aggregate(out[PolicyKind.SLA], short_cfg.warmup_min)
    assert non.mean_satisfaction == pytest.approx(0.8605194879523371, rel=1e-12)
    assert non.mean_utilization == pytest.approx(0.9884722222222222, rel=1e-12)
    assert non.mean_active_channels == pytest.approx(19.666666666666664, rel=1e-12)
    assert sla.mean_satisfaction == pytest.approx(0.9641162923228139, rel=1e-12)
    assert sla.se_satisfaction == pytest.approx(0.01761091766526551, rel=1e-9)
    assert sla.mean_utilization == non.mean_utilization
    assert non.replications == 2


def test_light_load_policies_agree_step_by_step(short_cfg):
    light = replace(short_cfg, iptv_viewer_arrival_rate_per_min=0.5,
                    non_iptv_arrival_rate_per_min=0.3)
    trace = build_trace(light, 11)
    sla = run_trace(light, PolicyKind.SLA, trace)
    non = run_trace(light, PolicyKind.NON_SLA, trace)
    for a, b in zip(sla, non):
        assert a.satisfaction == b.satisfaction
        assert a.utilization == b.utilization
        assert a.active_channels == b.active_channels


def test_reservation_wins_under_pressure(short_cfg):
    heavy = replace(short_cfg, non_iptv_arrival_rate_per_min=4.5)
    for r in range(3):
        out = run_paired(heavy, replication_seed(heavy.base_seed, r))
        sla = aggregate([out[PolicyKind.SLA]], heavy.warmup_min)
        non = aggregate([out[PolicyKind.NON_SLA]], heavy.warmup_min)
        assert sla.mean_satisfaction > non.mean_satisfaction


def test_step_records_respect_capacity_and_floors(short_cfg):
    heavy = replace(short_cfg, non_iptv_arrival_rate_per_min=4.5)
    saw_drops = False
    for kind in PolicyKind:
        for r in run_replication(heavy, kind, 3):
            assert r.utilization <= 1.0 + 1e-9
            assert r.per_channel_bw_mbps <= heavy.iptv_channel_max_bw_mbps + 1e-9
            survivors = r.active_channels - r.drops
            if survivors > 0:
                assert r.per_channel_bw_mbps >= heavy.iptv_channel_min_bw_mbps - 1e-9
            assert 0.0 <= r.reserved_mbps <= heavy.iptv_reservation_cap_mbps + 1e-9
            assert r.borrowed_mbps == pytest.approx(
                max(0.0, r.reserved_mbps - r.available_mbps), abs=1e-9)
            saw_drops = saw_drops or r.drops > 0
    assert saw_drops     # the surge has to actually exercise the shed path


def test_parallel_execution_matches_serial(short_cfg):
    assert run_policies(short_cfg, jobs=2) == run_policies(short_cfg, jobs=1)


def test_replication_seeds_are_consecutive():
    assert replication_seed(42, 0) == 42
    assert replication_seed(42, 3) == 45


def test_sweep_axis_mapping(cfg):
    c = apply_sweep_value(cfg, "non_iptv_offered_load", 30.0)
    assert c.non_iptv_arrival_rate_per_min == pytest.approx(1.5)
    c2 = apply_sweep_value(cfg, "iptv_viewer_rate", 2.5)
    assert c2.iptv_viewer_arrival_rate_per_min == 2.5
    with pytest.raises(ConfigError):
        apply_sweep_value(cfg, "something_else", 1.0)


def test_experiment_matches_manual_loop(short_cfg):
    spec = SweepSpec("iptv_viewer_rate", (0.8, 3.0))
    points = run_experiment(short_cfg, spec)
    assert len(points) == 4
    for p in points:
        c = apply_sweep_value(short_cfg, spec.axis, p.sweep_value)
        manual = aggregate(run_policies(c)[p.policy], c.warmup_min)
        assert p.summary == manual


def test_experiment_hook_sees_every_run(short_cfg):
    spec = SweepSpec("iptv_viewer_rate", (1.0,))
    calls = []
    run_experiment(short_cfg, spec,
                   record_hook=lambda v, p, r, recs: calls.append((v, p, r, len(recs))))
    assert len(calls) == 2 * short_cfg.replications
    assert {c[1] for c in calls} == set(PolicyKind)
    assert all(c[3] == short_cfg.n_steps for c in calls)


def test_fig3_preset_covers_load_grid(cfg):
    tuned, spec = fig3_sweep(cfg)
    assert spec.axis == "non_iptv_offered_load"
    assert spec.values == tuple(f * 60.0 for f in FIG3_LOAD_FRACTIONS)
    assert spec.values[0] == pytest.approx(12.0)
    assert spec.values[-1] == pytest.approx(90.0)
    assert tuned.iptv_viewer_arrival_rate_per_min == pytest.approx(
        3.136403459012432, rel=1e-9)


def test_fig5_preset_targets_channel_counts(cfg):
    base, spec = fig5_sweep(cfg)
    assert spec.axis == "iptv_viewer_rate"
    assert len(spec.values) == len(FIG5_CHANNEL_TARGETS)
    assert base.non_iptv_arrival_rate_per_min == pytest.approx(1.5)
    assert spec.values[0] == pytest.approx(0.520505702766485, rel=1e-9)
    assert spec.values[-1] == pytest.approx(16.283600017485785, rel=1e-9)
