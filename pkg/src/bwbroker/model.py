"""Core domain types and the bandwidth bookkeeping of a simulated cell.

One wireless cell with a fixed downlink capacity carries two traffic
classes.  IPTV channels are broadcast: a channel is on air while at least
one viewer is tuned to it and always demands the full per-channel rate.
Everything else (voice, data) is lumped into "non-IPTV" calls that each
hold a fixed amount of bandwidth for their lifetime.  All bandwidth is in
Mbps, all times in minutes.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

# Tolerance for bandwidth comparisons, in Mbps.  The allocation rules
# produce non-terminating fractions, so every threshold test is fuzzy.
BW_TOL = 1e-9


class ConfigError(ValueError):
    """A scenario configuration failed validation."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Every knob of one simulation scenario.

    Field names double as the keys of the flat config file accepted by
    the command line tools, so renames here are interface changes.
    """

    capacity_mbps: float
    iptv_channel_max_bw_mbps: float
    iptv_channel_min_bw_mbps: float
    iptv_reservation_cap_mbps: float
    num_channels_catalog: int
    sample_interval_min: float
    history_window_min: float
    iptv_viewer_arrival_rate_per_min: float
    iptv_viewer_mean_hold_min: float
    non_iptv_arrival_rate_per_min: float
    non_iptv_call_bw_mbps: float
    non_iptv_mean_hold_min: float
    channel_popularity_skew: float
    sim_duration_min: float
    warmup_min: float
    replications: int
    base_seed: int

    def validate(self) -> None:
        """Raise ConfigError unless the scenario is internally consistent."""
        c = self
        if not (0 < c.iptv_channel_min_bw_mbps <= c.iptv_channel_max_bw_mbps + BW_TOL):
            raise ConfigError(
                "need 0 < iptv_channel_min_bw_mbps <= iptv_channel_max_bw_mbps"
            )
        if c.iptv_channel_max_bw_mbps > c.iptv_reservation_cap_mbps + BW_TOL:
            raise ConfigError(
                "iptv_channel_max_bw_mbps exceeds iptv_reservation_cap_mbps"
            )
        if c.iptv_reservation_cap_mbps > c.capacity_mbps + BW_TOL:
            raise ConfigError("iptv_reservation_cap_mbps exceeds capacity_mbps")
        if c.capacity_mbps <= 0:
            raise ConfigError("capacity_mbps must be positive")
        if c.num_channels_catalog < 1:
            raise ConfigError("num_channels_catalog must be at least 1")
        if c.sample_interval_min <= 0 or c.history_window_min <= 0:
            raise ConfigError("sample_interval_min and history_window_min must be positive")
        n = c.history_window_min / c.sample_interval_min
        if abs(n - round(n)) > 1e-9 or round(n) < 1:
            raise ConfigError(
                "history_window_min must be a whole multiple of sample_interval_min"
            )
        for name in (
            "iptv_viewer_arrival_rate_per_min",
            "non_iptv_arrival_rate_per_min",
            "channel_popularity_skew",
        ):
            if getattr(c, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("iptv_viewer_mean_hold_min", "non_iptv_mean_hold_min"):
            if getattr(c, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if c.non_iptv_call_bw_mbps <= 0:
            raise ConfigError("non_iptv_call_bw_mbps must be positive")
        if c.sim_duration_min <= 0:
            raise ConfigError("sim_duration_min must be positive")
        steps = c.sim_duration_min / c.sample_interval_min
        if abs(steps - round(steps)) > 1e-9 or round(steps) < 1:
            raise ConfigError(
                "sim_duration_min must be a whole multiple of sample_interval_min"
            )
        if c.warmup_min < 0 or c.warmup_min >= c.sim_duration_min:
            raise ConfigError("warmup_min must satisfy 0 <= warmup_min < sim_duration_min")
        if c.replications < 1:
            raise ConfigError("replications must be at least 1")
        if not isinstance(c.base_seed, int):
            raise ConfigError("base_seed must be an integer")

    @property
    def n_steps(self) -> int:
        return int(round(self.sim_duration_min / self.sample_interval_min))

    @property
    def history_samples(self) -> int:
        """Length of the demand history window, in samples."""
        return int(round(self.history_window_min / self.sample_interval_min))


def table1() -> ScenarioConfig:
    """Default preset: a 60 Mbps cell with a 30 channel lineup.

    The viewer arrival rate is tuned so the long run mean number of
    on-air channels is 20 of 30 (see traffic.viewer_rate_for_mean_channels
    for the calibration), which puts peak IPTV demand right at the
    reservation cap.
    """
    return ScenarioConfig(
        capacity_mbps=60.0,
        iptv_channel_max_bw_mbps=2.0,
        iptv_channel_min_bw_mbps=1.0,
        iptv_reservation_cap_mbps=40.0,
        num_channels_catalog=30,
        sample_interval_min=1.0,
        history_window_min=60.0,
        iptv_viewer_arrival_rate_per_min=3.136403459012432,
        iptv_viewer_mean_hold_min=10.0,
        non_iptv_arrival_rate_per_min=1.5,
        non_iptv_call_bw_mbps=1.0,
        non_iptv_mean_hold_min=20.0,
        channel_popularity_skew=0.0,
        sim_duration_min=720.0,
        warmup_min=60.0,
        replications=20,
        base_seed=42,
    )


PRESETS = {"table1": table1}


# ---------------------------------------------------------------------------
# live state


@dataclass
class ChannelState:
    """One on-air IPTV channel and the viewers currently tuned to it."""

    channel_id: int
    viewer_ids: set[int] = field(default_factory=set)
    allocated_bw_mbps: float = 0.0

    @property
    def viewer_count(self) -> int:
        return len(self.viewer_ids)


@dataclass
class NonIptvCall:
    call_id: int
    requested_bw_mbps: float
    granted_bw_mbps: float = 0.0
    departure_time_min: float = 0.0


class CellState:
    """Mutable ledger of what is active in the cell at one instant.

    Tracks on-air channels, live non-IPTV calls and which admitted viewer
    sits on which channel.  The viewer registry exists so that a departure
    scheduled for a viewer who was blocked at admission, or whose channel
    was dropped, can be recognised and ignored.
    """

    def __init__(self, channel_demand_mbps: float, time_min: float = 0.0):
        self.time_min = time_min
        # demand of one on-air channel; channels always ask for full quality
        self.channel_demand_mbps = channel_demand_mbps
        self.active_channels: dict[int, ChannelState] = {}
        self.non_iptv_calls: dict[int, NonIptvCall] = {}
        self.non_iptv_demand_mbps = 0.0
        self._viewer_channel: dict[int, int] = {}

    @classmethod
    def for_config(cls, config: ScenarioConfig) -> "CellState":
        return cls(config.iptv_channel_max_bw_mbps)

    @property
    def iptv_demand_mbps(self) -> float:
        return self.channel_demand_mbps * len(self.active_channels)

    @property
    def active_channel_count(self) -> int:
        return len(self.active_channels)

    def admit_viewer(self, viewer_id: int, channel_id: int) -> None:
        """Register a viewer; activates the channel if it was off air."""
        ch = self.active_channels.get(channel_id)
        if ch is None:
            ch = ChannelState(channel_id)
            self.active_channels[channel_id] = ch
        ch.viewer_ids.add(viewer_id)
        self._viewer_channel[viewer_id] = channel_id

    def viewer_departs(self, viewer_id: int) -> None:
        """Remove a viewer if it was admitted; unknown ids are ignored."""
        channel_id = self._viewer_channel.pop(viewer_id, None)
        if channel_id is None:
            return
        ch = self.active_channels[channel_id]
        ch.viewer_ids.discard(viewer_id)
        if not ch.viewer_ids:
            del self.active_channels[channel_id]

    def drop_channel(self, channel_id: int) -> None:
        """Force a channel off air, discarding all of its viewers."""
        ch = self.active_channels.pop(channel_id)
        for viewer_id in ch.viewer_ids:
            del self._viewer_channel[viewer_id]

    def add_call(self, call: NonIptvCall) -> None:
        self.non_iptv_calls[call.call_id] = call
        self.non_iptv_demand_mbps += call.requested_bw_mbps

    def call_departs(self, call_id: int) -> None:
        call = self.non_iptv_calls.pop(call_id)
        self.non_iptv_demand_mbps -= call.requested_bw_mbps
        if self.non_iptv_demand_mbps < 0.0:
            # float drift guard; demand is a sum of per-call constants
            self.non_iptv_demand_mbps = 0.0


@dataclass
class AllocationDecision:
    """Outcome of one allocation round.

    num_active_channels counts the survivors after any forced drops, so
    per_channel_bw_mbps * num_active_channels is the bandwidth actually
    delivered to IPTV this step.
    """

    per_channel_bw_mbps: float
    reserved_mbps: float
    available_mbps: float
    borrowed_mbps: float
    non_iptv_grant_mbps: float
    num_active_channels: int
    dropped_channel_ids: tuple[int, ...] = ()
    blocked_channels: int = 0

    @property
    def dropped_channels(self) -> int:
        return len(self.dropped_channel_ids)

    @property
    def delivered_iptv_mbps(self) -> float:
        return self.per_channel_bw_mbps * self.num_active_channels


# ---------------------------------------------------------------------------
# pure bandwidth arithmetic


def available_bandwidth(capacity_mbps: float, non_iptv_demand_mbps: float) -> float:
    """Bandwidth left over for IPTV once non-IPTV demand is served.

    Clamped at zero: under overload the other class can ask for more than
    the cell holds, and a negative leftover is meaningless.
    """
    if capacity_mbps < 0 or non_iptv_demand_mbps < 0:
        raise ValueError("capacity and demand must be non-negative")
    leftover = capacity_mbps - non_iptv_demand_mbps
    return leftover if leftover > 0.0 else 0.0


def satisfaction_level(available_mbps: float, iptv_demand_mbps: float) -> float:
    """Fraction of IPTV demand that the available bandwidth covers.

    1.0 when demand is met (or when there is no demand at all), otherwise
    the served fraction, so the value always lands in [0, 1].
    """
    if available_mbps < 0 or iptv_demand_mbps < 0:
        raise ValueError("available and demand must be non-negative")
    if iptv_demand_mbps <= BW_TOL:
        return 1.0
    if available_mbps + BW_TOL >= iptv_demand_mbps:
        return 1.0
    return available_mbps / iptv_demand_mbps
