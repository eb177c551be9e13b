"""Per-step bandwidth allocation under the two policies.

Without an SLA the cell degrades every flow by one common factor until
total demand fits.  With an SLA the broker's reservation acts as a
protected budget for IPTV and the non-IPTV class absorbs the squeeze.
Either way a channel that cannot be given the minimum watchable rate is
dropped rather than starved.
"""

from __future__ import annotations

from enum import Enum
from typing import Callable, Iterable

from .broker import compute_borrowing
from .model import (
    BW_TOL,
    AllocationDecision,
    CellState,
    NonIptvCall,
    ScenarioConfig,
    available_bandwidth,
)


class PolicyKind(Enum):
    NON_SLA = "nonsla"
    SLA = "sla"


def _drop_order(state: CellState) -> list[int]:
    # least-watched channels go first; ties broken toward the higher id
    return sorted(
        state.active_channels,
        key=lambda cid: (state.active_channels[cid].viewer_count, -cid),
    )


def _shed_until_viable(
    state: CellState,
    config: ScenarioConfig,
    per_channel_of: Callable[[int], float],
) -> tuple[int, float, tuple[int, ...]]:
    """Drop channels until the survivors clear the minimum watchable rate.

    per_channel_of(n) gives the per-channel grant with n channels on air,
    which only improves as channels go, so shedding one at a time finds
    the largest viable survivor count.  Returns (survivors, per_channel,
    dropped_ids); with no survivors the per-channel rate is 0.0.
    """
    min_bw = config.iptv_channel_min_bw_mbps
    order = _drop_order(state)
    n = len(order)
    dropped: list[int] = []
    while n > 0:
        per = per_channel_of(n)
        if per >= min_bw - BW_TOL:
            return n, per, tuple(dropped)
        dropped.append(order[len(dropped)])
        n -= 1
    return 0, 0.0, tuple(dropped)


def allocate_non_sla(state: CellState, config: ScenarioConfig) -> AllocationDecision:
    """Equal-degradation allocation: both classes share one scale factor.

    If everything fits, everyone gets full rate.  Otherwise demand is
    scaled to capacity uniformly, and channels are shed (least watched
    first) while the scaled per-channel rate sits below the minimum.
    """
    cap = config.capacity_mbps
    full = config.iptv_channel_max_bw_mbps
    non_iptv = state.non_iptv_demand_mbps

    def per_channel_of(n: int) -> float:
        total = full * n + non_iptv
        if total <= cap + BW_TOL:
            return full
        return cap / total * full

    survivors, per, dropped = _shed_until_viable(state, config, per_channel_of)

    total = full * survivors + non_iptv
    if total <= cap + BW_TOL:
        grant = non_iptv
    else:
        grant = cap / total * non_iptv

    return AllocationDecision(
        per_channel_bw_mbps=per,
        reserved_mbps=0.0,
        available_mbps=available_bandwidth(cap, non_iptv),
        borrowed_mbps=0.0,
        non_iptv_grant_mbps=grant,
        num_active_channels=survivors,
        dropped_channel_ids=dropped,
    )


def allocate_sla(
    state: CellState, reserved_mbps: float, config: ScenarioConfig
) -> AllocationDecision:
    """Reservation-backed allocation: IPTV spends a protected budget.

    The budget is the larger of the current leftover and the reservation
    (never more than capacity).  Per-channel grants are capped at full
    quality; channels are shed while the fair share sits below the
    minimum.  Non-IPTV gets whatever IPTV leaves unspent, so any
    borrowed bandwidth comes straight out of its share.
    """
    if reserved_mbps < -BW_TOL:
        raise ValueError("reservation must be non-negative")
    if reserved_mbps > config.capacity_mbps + BW_TOL:
        raise ValueError("reservation exceeds cell capacity")

    cap = config.capacity_mbps
    full = config.iptv_channel_max_bw_mbps
    non_iptv = state.non_iptv_demand_mbps
    avail = available_bandwidth(cap, non_iptv)
    budget = min(cap, max(avail, reserved_mbps))

    def per_channel_of(n: int) -> float:
        share = budget / n
        return full if share >= full else share

    survivors, per, dropped = _shed_until_viable(state, config, per_channel_of)

    spent = per * survivors
    headroom = cap - spent
    if headroom < 0.0:
        headroom = 0.0
    grant = non_iptv if non_iptv <= headroom else headroom

    return AllocationDecision(
        per_channel_bw_mbps=per,
        reserved_mbps=reserved_mbps,
        available_mbps=avail,
        borrowed_mbps=compute_borrowing(reserved_mbps, avail),
        non_iptv_grant_mbps=grant,
        num_active_channels=survivors,
        dropped_channel_ids=dropped,
    )


def admit_channel(
    state: CellState,
    policy: PolicyKind,
    reserved_mbps: float,
    config: ScenarioConfig,
) -> bool:
    """Would a newly activated channel still be watchable? Admit iff yes.

    Evaluates the policy's per-channel rate with one more channel on air;
    admission requires it to clear the minimum rate.  Only channel
    activations pass through here: a viewer joining a channel that is
    already on air never needs admission.
    """
    n_after = len(state.active_channels) + 1
    cap = config.capacity_mbps
    full = config.iptv_channel_max_bw_mbps
    non_iptv = state.non_iptv_demand_mbps

    if policy is PolicyKind.NON_SLA:
        total = full * n_after + non_iptv
        per = full if total <= cap + BW_TOL else cap / total * full
    else:
        budget = min(cap, max(available_bandwidth(cap, non_iptv), reserved_mbps))
        per = min(full, budget / n_after)

    return per >= config.iptv_channel_min_bw_mbps - BW_TOL


def apportion_call_grants(calls: Iterable[NonIptvCall], total_grant_mbps: float) -> None:
    """Spread an aggregate non-IPTV grant over calls, pro rata to requests."""
    calls = list(calls)
    requested = sum(c.requested_bw_mbps for c in calls)
    if requested <= BW_TOL:
        for c in calls:
            c.granted_bw_mbps = 0.0
        return
    ratio = min(1.0, total_grant_mbps / requested)
    for c in calls:
        c.granted_bw_mbps = c.requested_bw_mbps * ratio
