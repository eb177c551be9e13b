"""Per-step bandwidth division for both policies, plus admission control."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bwbroker import CellState, NonIptvCall, table1
from bwbroker.allocation import (
    PolicyKind,
    admit_channel,
    allocate_non_sla,
    allocate_sla,
    apportion_call_grants,
)

BW_TOL = 1e-9


def make_state(n_channels, call_bw, cfg=None):
    """Cell with n single-viewer channels and one call holding call_bw."""
    cell = CellState.for_config(cfg or table1())
    for k in range(n_channels):
        cell.admit_viewer(k, k + 1)
    if call_bw > 0:
        cell.add_call(NonIptvCall(0, call_bw))
    return cell


def test_non_sla_scales_both_classes(cfg):
    # 20 channels wanting 40 plus 30 of call traffic, in a 60 cell
    cell = make_state(20, 30.0)
    d = allocate_non_sla(cell, cfg)
    scale = 60.0 / 70.0
    assert d.per_channel_bw_mbps == pytest.approx(2.0 * scale, rel=1e-12)
    assert d.non_iptv_grant_mbps == pytest.approx(30.0 * scale, rel=1e-12)
    assert d.num_active_channels == 20
    assert d.dropped_channels == 0
    assert d.delivered_iptv_mbps == pytest.approx(40.0 * scale, rel=1e-12)


def test_non_sla_underload_passes_demand_through(cfg):
    cell = make_state(10, 20.0)    # 20 + 20 = 40 <= 60
    d = allocate_non_sla(cell, cfg)
    assert d.per_channel_bw_mbps == 2.0
    assert d.non_iptv_grant_mbps == 20.0
    assert d.dropped_channels == 0


def test_non_sla_sheds_channels_below_floor(cfg):
    # 30 channels against 90 of call traffic: equal scaling would leave
    # 0.8 per channel, under the 1.0 floor, so channels must come off air
    cell = make_state(30, 90.0)
    d = allocate_non_sla(cell, cfg)
    assert d.num_active_channels == 15
    assert d.per_channel_bw_mbps == pytest.approx(1.0, abs=1e-12)
    assert d.dropped_channels == 15
    # fewest viewers first, higher id breaks ties; all equal here
    assert d.dropped_channel_ids == tuple(range(30, 15, -1))
    assert d.non_iptv_grant_mbps == pytest.approx(45.0, rel=1e-12)
    assert (d.delivered_iptv_mbps + d.non_iptv_grant_mbps) == pytest.approx(60.0)


def test_drop_order_prefers_fewest_viewers(cfg):
    cell = make_state(30, 90.0)
    cell.admit_viewer(100, 25)     # channel 25 now has two viewers
    d = allocate_non_sla(cell, cfg)
    assert 25 not in d.dropped_channel_ids
    assert d.dropped_channel_ids[0] == 30


def test_sla_reservation_shields_channels(cfg):
    # same 20/30 split, but a reservation of 40 keeps IPTV at full rate
    cell = make_state(20, 30.0)
    d = allocate_sla(cell, 40.0, cfg)
    assert d.per_channel_bw_mbps == 2.0
    assert d.non_iptv_grant_mbps == 20.0
    assert d.borrowed_mbps == 10.0
    assert d.available_mbps == 30.0
    assert d.dropped_channels == 0


def test_sla_splits_budget_across_channels(cfg):
    cell = make_state(30, 50.0)
    d = allocate_sla(cell, 40.0, cfg)
    assert d.per_channel_bw_mbps == pytest.approx(4.0 / 3.0, rel=1e-12)
    assert d.available_mbps == 10.0
    assert d.borrowed_mbps == 30.0
    assert d.non_iptv_grant_mbps == 20.0
    assert d.num_active_channels == 30


def test_sla_rejects_nonsense_reservation(cfg):
    cell = make_state(5, 0.0)
    with pytest.raises(ValueError):
        allocate_sla(cell, -0.5, cfg)
    with pytest.raises(ValueError):
        allocate_sla(cell, 61.0, cfg)


def test_admit_first_channel_into_idle_cell(cfg):
    cell = CellState.for_config(cfg)
    assert admit_channel(cell, PolicyKind.SLA, 0.0, cfg)
    assert admit_channel(cell, PolicyKind.NON_SLA, 0.0, cfg)


def test_sla_blocks_when_budget_is_spread_too_thin(cfg):
    # 40 channels on a 40 budget sit exactly at the floor; one more
    # would push the share to 40/41 and has to be refused
    cell = make_state(40, 30.0)
    assert not admit_channel(cell, PolicyKind.SLA, 40.0, cfg)


def test_non_sla_admits_while_floor_holds(cfg):
    cell = make_state(29, 0.0)
    assert admit_channel(cell, PolicyKind.NON_SLA, 0.0, cfg)   # 30 * 2 = 60
    cell = make_state(59, 0.0)
    assert admit_channel(cell, PolicyKind.NON_SLA, 0.0, cfg)   # scale 0.5, at floor
    cell = make_state(60, 0.0)
    assert not admit_channel(cell, PolicyKind.NON_SLA, 0.0, cfg)


def test_apportion_grants_pro_rata():
    calls = [NonIptvCall(0, 1.0), NonIptvCall(1, 2.0), NonIptvCall(2, 3.0)]
    apportion_call_grants(calls, 3.0)
    assert [c.granted_bw_mbps for c in calls] == pytest.approx([0.5, 1.0, 1.5])
    apportion_call_grants(calls, 12.0)
    assert [c.granted_bw_mbps for c in calls] == [1.0, 2.0, 3.0]


channels = st.integers(min_value=0, max_value=50)
call_load = st.floats(min_value=0.0, max_value=120.0)
reservations = st.floats(min_value=0.0, max_value=60.0)


@settings(max_examples=200, deadline=None)
@given(n=channels, b_i=call_load)
def test_non_sla_never_oversubscribes(n, b_i):
    cfg = table1()
    d = allocate_non_sla(make_state(n, b_i), cfg)
    used = d.delivered_iptv_mbps + d.non_iptv_grant_mbps
    assert used <= cfg.capacity_mbps + BW_TOL
    assert 0.0 <= d.per_channel_bw_mbps <= cfg.iptv_channel_max_bw_mbps + BW_TOL
    if d.num_active_channels:
        assert d.per_channel_bw_mbps >= cfg.iptv_channel_min_bw_mbps - BW_TOL


@settings(max_examples=200, deadline=None)
@given(n=channels, b_i=call_load)
def test_non_sla_scales_classes_equally(n, b_i):
    cfg = table1()
    d = allocate_non_sla(make_state(n, b_i), cfg)
    if b_i > 0 and d.num_active_channels == n and n > 0:
        # no drops: both classes shrink by one common factor
        # (compare products, not ratios: dividing by a tiny b_i turns one
        # ulp of rounding into a visible gap)
        f_iptv = d.per_channel_bw_mbps / cfg.iptv_channel_max_bw_mbps
        assert d.non_iptv_grant_mbps == pytest.approx(f_iptv * b_i, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(n=channels, b_i=call_load, reserved=reservations)
def test_sla_never_oversubscribes(n, b_i, reserved):
    cfg = table1()
    d = allocate_sla(make_state(n, b_i), reserved, cfg)
    used = d.delivered_iptv_mbps + d.non_iptv_grant_mbps
    assert used <= cfg.capacity_mbps + BW_TOL
    assert 0.0 <= d.per_channel_bw_mbps <= cfg.iptv_channel_max_bw_mbps + BW_TOL
    if d.num_active_channels:
        assert d.per_channel_bw_mbps >= cfg.iptv_channel_min_bw_mbps - BW_TOL
    assert d.borrowed_mbps == max(0.0, reserved - d.available_mbps)


@settings(max_examples=100, deadline=None)
@given(n=st.integers(1, 49), b_i=call_load, reserved=reservations)
def test_sla_share_shrinks_as_channels_join(n, b_i, reserved):
    cfg = table1()
    a = allocate_sla(make_state(n, b_i), reserved, cfg)
    b = allocate_sla(make_state(n + 1, b_i), reserved, cfg)
    if a.dropped_channels == 0 and b.dropped_channels == 0:
        assert b.per_channel_bw_mbps <= a.per_channel_bw_mbps + BW_TOL
