"""Per-step measurements and cross-replication aggregation."""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

from .model import BW_TOL, AllocationDecision, ScenarioConfig


@dataclass(frozen=True)
class StepRecord:
    """One simulated step of one policy, everything a later plot needs.

    active_channels counts the channels that were on air when allocation
    ran, including any the allocator then dropped, so iptv_demand_mbps is
    always the per-channel demand times active_channels.
    """

    t_min: float
    non_iptv_demand_mbps: float
    iptv_demand_mbps: float
    available_mbps: float
    reserved_mbps: float
    borrowed_mbps: float
    active_channels: int
    per_channel_bw_mbps: float
    satisfaction: float
    utilization: float
    blocks: int
    drops: int


@dataclass(frozen=True)
class RunSummary:
    """Post-warmup means of one policy, averaged across replications.

    block_rate and drop_rate are mean events per step.  Standard errors
    are across replications (0.0 for a single replication).
    """

    mean_satisfaction: float
    se_satisfaction: float
    mean_utilization: float
    se_utilization: float
    block_rate: float
    drop_rate: float
    mean_active_channels: float
    replications: int


def step_satisfaction(decision: AllocationDecision, demand_mbps: float) -> float:
    """Delivered share of this step's IPTV demand, in [0, 1].

    The demand argument should include full-rate credit for channel
    requests that were blocked or dropped this step; those delivered
    nothing, which is exactly how they depress the ratio.
    """
    if demand_mbps < 0:
        raise ValueError("demand must be non-negative")
    if demand_mbps <= BW_TOL:
        return 1.0
    return min(1.0, decision.delivered_iptv_mbps / demand_mbps)


def step_utilization(decision: AllocationDecision, config: ScenarioConfig) -> float:
    """Granted bandwidth (both classes) as a fraction of cell capacity."""
    used = decision.delivered_iptv_mbps + decision.non_iptv_grant_mbps
    return used / config.capacity_mbps


def aggregate(
    records_by_replication: Sequence[Sequence[StepRecord]], warmup_min: float
) -> RunSummary:
    """Drop the warmup, average within each replication, then across them."""
    if not records_by_replication:
        raise ValueError("need at least one replication")

    per_rep: list[tuple[float, float, float, float, float]] = []
    post_counts: set[int] = set()
    for records in records_by_replication:
        post = [r for r in records if r.t_min >= warmup_min - 1e-9]
        if not post:
            raise ValueError("no post-warmup steps in a replication")
        post_counts.add(len(post))
        per_rep.append(
            (
                statistics.fmean(r.satisfaction for r in post),
                statistics.fmean(r.utilization for r in post),
                statistics.fmean(r.blocks for r in post),
                statistics.fmean(r.drops for r in post),
                statistics.fmean(r.active_channels for r in post),
            )
        )
    if len(post_counts) != 1:
        raise ValueError("replications disagree on post-warmup step count")

    def mean_se(values: list[float]) -> tuple[float, float]:
        mean = statistics.fmean(values)
        if len(values) < 2:
            return mean, 0.0
        return mean, statistics.stdev(values) / math.sqrt(len(values))

    sl_mean, sl_se = mean_se([v[0] for v in per_rep])
    util_mean, util_se = mean_se([v[1] for v in per_rep])
    blocks_mean, _ = mean_se([v[2] for v in per_rep])
    drops_mean, _ = mean_se([v[3] for v in per_rep])
    n_mean, _ = mean_se([v[4] for v in per_rep])

    return RunSummary(
        mean_satisfaction=sl_mean,
        se_satisfaction=sl_se,
        mean_utilization=util_mean,
        se_utilization=util_se,
        block_rate=blocks_mean,
        drop_rate=drops_mean,
        mean_active_channels=n_mean,
        replications=len(per_rep),
    )
