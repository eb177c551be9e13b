"""Simulation loop: step composition, replications and parameter sweeps.

Each step runs a fixed sequence: apply departures, admit arrivals,
measure the leftover after non-IPTV demand, work out the reservation
and borrowing (SLA only), allocate, score the step, then append the
step's offered demand to the broker history.  The history sample lands
after allocation on purpose: a reservation may only ever look at
strictly past demand.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .allocation import PolicyKind, admit_channel, allocate_non_sla, allocate_sla
from .broker import BrokerPolicy, DemandHistory, compute_reservation
from .metrics import RunSummary, StepRecord, aggregate, step_satisfaction, step_utilization
from .model import CellState, ConfigError, NonIptvCall, ScenarioConfig
from .traffic import (
    EventKind,
    TrafficEvent,
    TrafficGenerator,
    viewer_rate_for_mean_channels,
)

Trace = list[list[TrafficEvent]]


def run_step(
    state: CellState,
    history: DemandHistory,
    policy_kind: PolicyKind,
    config: ScenarioConfig,
    events: list[TrafficEvent],
    broker_policy: BrokerPolicy | None = None,
) -> StepRecord:
    """Advance the cell by one step, mutating state and history."""
    if broker_policy is None:
        broker_policy = BrokerPolicy.for_config(config)

    # the reservation depends only on past samples, so it is fixed for the
    # whole step and already governs this step's admissions
    reserved = 0.0
    if policy_kind is PolicyKind.SLA:
        reserved = compute_reservation(history, broker_policy)

    blocks = 0
    for ev in events:
        if ev.kind is EventKind.VIEWER_DEPART:
            state.viewer_departs(ev.viewer_id)
        elif ev.kind is EventKind.NON_IPTV_DEPART:
            state.call_departs(ev.call_id)
        elif ev.kind is EventKind.NON_IPTV_ARRIVE:
            state.add_call(
                NonIptvCall(
                    call_id=ev.call_id,
                    requested_bw_mbps=ev.bw_mbps,
                    departure_time_min=ev.depart_time_min or 0.0,
                )
            )
        elif ev.kind is EventKind.VIEWER_ARRIVE:
            if ev.channel_id in state.active_channels:
                state.admit_viewer(ev.viewer_id, ev.channel_id)
            elif admit_channel(state, policy_kind, reserved, config):
                state.admit_viewer(ev.viewer_id, ev.channel_id)
            else:
                blocks += 1

    # offered demand of this step: what is on air now, before any drops
    offered_channels = state.active_channel_count
    offered_demand = state.iptv_demand_mbps

    if policy_kind is PolicyKind.SLA:
        decision = allocate_sla(state, reserved, config)
    else:
        decision = allocate_non_sla(state, config)
    decision.blocked_channels = blocks

    for channel_id in decision.dropped_channel_ids:
        state.drop_channel(channel_id)
    for channel in state.active_channels.values():
        channel.allocated_bw_mbps = decision.per_channel_bw_mbps

    # blocked activations demanded full quality and got nothing this step
    sl_demand = offered_demand + state.channel_demand_mbps * blocks
    record = StepRecord(
        t_min=state.time_min,
        non_iptv_demand_mbps=state.non_iptv_demand_mbps,
        iptv_demand_mbps=offered_demand,
        available_mbps=decision.available_mbps,
        reserved_mbps=decision.reserved_mbps,
        borrowed_mbps=decision.borrowed_mbps,
        active_channels=offered_channels,
        per_channel_bw_mbps=decision.per_channel_bw_mbps,
        satisfaction=step_satisfaction(decision, sl_demand),
        utilization=step_utilization(decision, config),
        blocks=blocks,
        drops=decision.dropped_channels,
    )

    history.record_sample(offered_demand)
    state.time_min += config.sample_interval_min
    return record


def build_trace(config: ScenarioConfig, seed: int) -> Trace:
    """Generate the full event trace of one replication."""
    gen = TrafficGenerator.from_seed(config, seed)
    t1 = config.sample_interval_min
    return [gen.events_for_step(i * t1) for i in range(config.n_steps)]


def run_trace(config: ScenarioConfig, policy_kind: PolicyKind, trace: Trace) -> list[StepRecord]:
    """Play a pre-built trace through one policy."""
    state = CellState.for_config(config)
    history = DemandHistory.for_config(config)
    broker_policy = BrokerPolicy.for_config(config)
    return [
        run_step(state, history, policy_kind, config, events, broker_policy)
        for events in trace
    ]


def replication_seed(base_seed: int, replication: int) -> int:
    return base_seed + replication


def run_replication(config: ScenarioConfig, policy_kind: PolicyKind, seed: int) -> list[StepRecord]:
    """One full seeded run of one policy; bit-identical for equal inputs."""
    config.validate()
    return run_trace(config, policy_kind, build_trace(config, seed))


def run_paired(config: ScenarioConfig, seed: int) -> dict[PolicyKind, list[StepRecord]]:
    """Run both policies over one shared traffic trace (paired comparison)."""
    config.validate()
    trace = build_trace(config, seed)
    return {kind: run_trace(config, kind, trace) for kind in PolicyKind}


def run_policies(
    config: ScenarioConfig,
    policies: tuple[PolicyKind, ...] = tuple(PolicyKind),
    jobs: int = 1,
) -> dict[PolicyKind, list[list[StepRecord]]]:
    """All configured replications of the given policies on shared traces."""
    config.validate()
    seeds = [replication_seed(config.base_seed, r) for r in range(config.replications)]
    out: dict[PolicyKind, list[list[StepRecord]]] = {p: [] for p in policies}
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_paired_task, [(config, s) for s in seeds]))
    else:
        results = [run_paired(config, s) for s in seeds]
    for by_policy in results:
        for p in policies:
            out[p].append(by_policy[p])
    return out


def _paired_task(args: tuple[ScenarioConfig, int]) -> dict[PolicyKind, list[StepRecord]]:
    config, seed = args
    return run_paired(config, seed)


# ---------------------------------------------------------------------------
# sweeps

SWEEP_AXES = ("non_iptv_offered_load", "iptv_viewer_rate")


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter and the values it takes."""

    axis: str
    values: tuple[float, ...]


@dataclass(frozen=True)
class SweepPoint:
    sweep_value: float
    policy: PolicyKind
    summary: RunSummary


def apply_sweep_value(config: ScenarioConfig, axis: str, value: float) -> ScenarioConfig:
    if axis == "non_iptv_offered_load":
        # offered load = arrival rate * mean hold * per-call bandwidth
        rate = value / (config.non_iptv_mean_hold_min * config.non_iptv_call_bw_mbps)
        return replace(config, non_iptv_arrival_rate_per_min=rate)
    if axis == "iptv_viewer_rate":
        return replace(config, iptv_viewer_arrival_rate_per_min=value)
    raise ConfigError(f"unknown sweep axis: {axis}")


def run_experiment(
    config: ScenarioConfig,
    spec: SweepSpec,
    jobs: int = 1,
    record_hook=None,
) -> list[SweepPoint]:
    """Run every sweep point with paired replications and aggregate.

    record_hook, when given, is called as
    record_hook(sweep_value, policy, replication, records) for every run,
    before the records are folded into the point summary.
    """
    config.validate()
    points: list[SweepPoint] = []
    for value in spec.values:
        cfg = apply_sweep_value(config, spec.axis, value)
        by_policy = run_policies(cfg, jobs=jobs)
        for policy in PolicyKind:
            if record_hook is not None:
                for rep, records in enumerate(by_policy[policy]):
                    record_hook(value, policy, rep, records)
            summary = aggregate(by_policy[policy], cfg.warmup_min)
            points.append(SweepPoint(value, policy, summary))
    return points


# Sweep presets, mirroring the comparison plots the simulator exists for.
FIG3_LOAD_FRACTIONS = tuple(round(0.2 + 0.1 * i, 2) for i in range(14))  # 0.2 .. 1.5
FIG5_CHANNEL_TARGETS = (5.0, 10.0, 15.0, 20.0, 25.0, 29.9)
FIG5_NON_IPTV_LOAD_FRACTION = 0.5


def fig3_sweep(config: ScenarioConfig) -> tuple[ScenarioConfig, SweepSpec]:
    """Sweep non-IPTV offered load from light to 1.5x capacity.

    The viewer rate is re-tuned so the mean on-air channel count is 20
    regardless of what the base config says.
    """
    rate = viewer_rate_for_mean_channels(
        20.0,
        config.num_channels_catalog,
        config.channel_popularity_skew,
        config.iptv_viewer_mean_hold_min,
        config.sample_interval_min,
    )
    tuned = replace(config, iptv_viewer_arrival_rate_per_min=rate)
    loads = tuple(f * config.capacity_mbps for f in FIG3_LOAD_FRACTIONS)
    return tuned, SweepSpec("non_iptv_offered_load", loads)


def fig5_sweep(config: ScenarioConfig) -> tuple[ScenarioConfig, SweepSpec]:
    """Sweep the viewer rate so the mean on-air channel count climbs
    toward the full lineup, under a moderate fixed non-IPTV load.

    The top target stays just under the catalog size: a mean equal to
    the catalog would need every channel on air at every step, which a
    finite viewer rate cannot deliver.
    """
    offered = FIG5_NON_IPTV_LOAD_FRACTION * config.capacity_mbps
    base = apply_sweep_value(config, "non_iptv_offered_load", offered)
    rates = tuple(
        viewer_rate_for_mean_channels(
            target,
            config.num_channels_catalog,
            config.channel_popularity_skew,
            config.iptv_viewer_mean_hold_min,
            config.sample_interval_min,
        )
        for target in FIG5_CHANNEL_TARGETS
    )
    return base, SweepSpec("iptv_viewer_rate", rates)


FIGURE_SWEEPS = {"fig3": fig3_sweep, "fig4": fig3_sweep, "fig5": fig5_sweep}
