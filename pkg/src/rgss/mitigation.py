"""Traffic mitigation planning for dark-time windows.

Per site the planner either sleeps the cell (quiet hours, light load) or moves
active sessions to an alternate band, protecting URLLC first, then
real-time, then best-effort; whatever does not fit the spare capacity is shed
from the bottom of that order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import timedelta

import numpy as np

CLASS_ORDER = ("urllc", "real_time", "best_effort")


@dataclass(frozen=True)
class TrafficProfile:
    """Piecewise-linear daily load curve: (local hour, fraction of peak) anchors."""

    anchors: tuple = ((4.0, 0.125), (14.0, 0.45), (21.0, 1.0))

    def __post_init__(self):
        hours = [h for h, _ in self.anchors]
        if not self.anchors or any(not 0 <= h < 24 for h in hours) or len(set(hours)) != len(hours):
            raise ValueError("anchor hours must be distinct values in [0, 24)")
        if any(not 0.0 <= f <= 1.0 for _, f in self.anchors):
            raise ValueError("load fractions must lie in [0, 1]")


@dataclass(frozen=True)
class CellSite:
    site_id: str
    transmitter_id: str
    sessions: dict  # class name -> configured session count
    spare_capacity: int
    utc_offset_h: float = 0.0

    def __post_init__(self):
        unknown = set(self.sessions) - set(CLASS_ORDER)
        if unknown:
            raise ValueError(f"unknown session classes {sorted(unknown)}")
        if any(v < 0 for v in self.sessions.values()) or self.spare_capacity < 0:
            raise ValueError("session counts and spare capacity must be >= 0")


@dataclass(frozen=True)
class MitigationPolicy:
    sleep_window: tuple = (1.0, 5.0)  # local hours [start, end)
    sleep_load_threshold: float = 0.15
    handover_failure_probability: float = 0.0
    mechanism: str = "DAPS"  # or "L1L2"

    def __post_init__(self):
        if not 0.0 <= self.sleep_load_threshold <= 1.0:
            raise ValueError("sleep_load_threshold must be in [0, 1]")
        if not 0.0 <= self.handover_failure_probability <= 1.0:
            raise ValueError("handover_failure_probability must be in [0, 1]")
        if self.mechanism not in ("DAPS", "L1L2"):
            raise ValueError("mechanism must be DAPS or L1L2")


@dataclass(frozen=True)
class SiteAction:
    site_id: str
    action: str  # "sleep" | "handover"
    mechanism: str = ""
    load: float = 0.0
    active: dict = field(default_factory=dict)
    handed_over: dict = field(default_factory=dict)
    shed: dict = field(default_factory=dict)

    @property
    def displaced(self) -> dict:
        return {c: self.handed_over.get(c, 0) + self.shed.get(c, 0) for c in CLASS_ORDER}


@dataclass(frozen=True)
class MitigationPlan:
    window_start: object
    window_end: object
    satellite_id: str
    actions: tuple
    failure_probability: float

    @property
    def impact(self) -> float:
        return impact_score(self)


def diurnal_load(local_hour: float, profile: TrafficProfile = TrafficProfile()) -> float:
    """Fraction of peak load at a local hour, interpolated periodically."""
    hours = np.array([h for h, _ in sorted(profile.anchors)])
    loads = np.array([f for _, f in sorted(profile.anchors)])
    h = float(local_hour) % 24.0
    xs = np.concatenate((hours - 24.0, hours, hours + 24.0))
    ys = np.concatenate((loads, loads, loads))
    return float(np.interp(h, xs, ys))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _in_window(hour: float, window) -> bool:
    a, b = window
    return a <= hour < b if a <= b else (hour >= a or hour < b)


def _local_hour(t, offset_h: float) -> float:
    local = t + timedelta(hours=offset_h)
    return local.hour + local.minute / 60.0 + local.second / 3600.0 + local.microsecond / 3.6e9


def plan_site(site: CellSite, when, profile: TrafficProfile, policy: MitigationPolicy) -> SiteAction:
    hour = _local_hour(when, site.utc_offset_h)
    load = diurnal_load(hour, profile)
    if _in_window(hour, policy.sleep_window) and load <= policy.sleep_load_threshold:
        return SiteAction(site.site_id, "sleep", load=load)
    active = {c: _round_half_up(site.sessions.get(c, 0) * load) for c in CLASS_ORDER}
    room = site.spare_capacity
    moved, shed = {}, {}
    for c in CLASS_ORDER:
        take = min(active[c], room)
        moved[c] = take
        shed[c] = active[c] - take
        room -= take
    return SiteAction(site.site_id, "handover", policy.mechanism, load, active, moved, shed)


def plan_mitigation(window, sites, profile: TrafficProfile = TrafficProfile(),
                    policy: MitigationPolicy = MitigationPolicy()) -> MitigationPlan:
    """Plan every site for one dark-time window, evaluated at the window midpoint."""
    mid = window.start + (window.end - window.start) / 2
    actions = tuple(plan_site(s, mid, profile, policy) for s in sites)
    return MitigationPlan(window.start, window.end, getattr(window, "satellite_id", ""),
                          actions, policy.handover_failure_probability)


def impact_score(plan: MitigationPlan) -> float:
    """Expected affected sessions: every shed session plus failed handovers."""
    shed = sum(sum(a.shed.values()) for a in plan.actions)
    moved = sum(sum(a.handed_over.values()) for a in plan.actions)
    return float(shed + moved * plan.failure_probability)
