"""Demand history and the reservation arithmetic of the bandwidth broker.

The broker watches the IPTV demand the cell has seen recently and
reserves the windowed mean, capped by a configured ceiling, for the next
step.  When the reservation exceeds what is currently left over after
non-IPTV traffic, the difference is borrowed back from the non-IPTV
share.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum

from .model import ScenarioConfig


class WarmupRule(Enum):
    """How to average while the history window is still filling up."""

    # mean over whatever samples exist so far (zero when there are none)
    USE_AVAILABLE_SAMPLES = "use_available_samples"
    # reserve nothing until a full window of samples has accumulated
    ZERO_UNTIL_FULL = "zero_until_full"


@dataclass(frozen=True)
class BrokerPolicy:
    reservation_cap_mbps: float
    warmup_rule: WarmupRule = WarmupRule.USE_AVAILABLE_SAMPLES

    @classmethod
    def for_config(cls, config: ScenarioConfig) -> "BrokerPolicy":
        return cls(reservation_cap_mbps=config.iptv_reservation_cap_mbps)


class DemandHistory:
    """Ring buffer of the most recent IPTV demand samples.

    Samples record offered demand (full per-channel rate times on-air
    channels), not what was granted; recording grants would make the
    reservation feed on its own throttling.
    """

    def __init__(self, capacity: int, sample_interval_min: float = 1.0):
        if capacity < 1:
            raise ValueError("history capacity must be at least 1")
        self.sample_interval_min = sample_interval_min
        self._window: deque[float] = deque(maxlen=capacity)

    @classmethod
    def for_config(cls, config: ScenarioConfig) -> "DemandHistory":
        return cls(config.history_samples, config.sample_interval_min)

    @property
    def capacity(self) -> int:
        return self._window.maxlen  # type: ignore[return-value]

    @property
    def samples(self) -> tuple[float, ...]:
        """Window contents, oldest first."""
        return tuple(self._window)

    def __len__(self) -> int:
        return len(self._window)

    def record_sample(self, demand_mbps: float) -> None:
        """Append one demand sample, evicting the oldest on overflow."""
        if demand_mbps < 0:
            raise ValueError("demand must be non-negative")
        self._window.append(demand_mbps)


def compute_reservation(history: DemandHistory, policy: BrokerPolicy) -> float:
    """Windowed mean of recent demand, capped by the reservation ceiling.

    An empty window reserves nothing, so a cold start degrades to plain
    leftover allocation.
    """
    samples = history.samples
    if policy.warmup_rule is WarmupRule.ZERO_UNTIL_FULL and len(samples) < history.capacity:
        return 0.0
    if not samples:
        return 0.0
    return min(sum(samples) / len(samples), policy.reservation_cap_mbps)


def compute_borrowing(reserved_mbps: float, available_mbps: float) -> float:
    """Bandwidth the reservation takes back from the non-IPTV share.

    Zero whenever the leftover already covers the reservation.
    """
    shortfall = reserved_mbps - available_mbps
    return shortfall if shortfall > 0.0 else 0.0
