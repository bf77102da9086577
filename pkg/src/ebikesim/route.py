"""Zoned cycling routes with per-zone pollutant levels and share targets.

A route is an ordered, contiguous list of zones that repeats every lap.
Transient zones ramp the target human share between their neighbours so
physiology has time to settle before a polluted stretch; the ramp back
up after a polluted zone can come from an explicit trailing transient or
from an implicit ramp at the start of the next zone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field


class RouteError(ValueError):
    """Route empty or structurally unusable."""


class UnsupportedDemographic(KeyError):
    """No tabulated minimum-dose speed for this demographic/terrain."""


class ZoneKind(enum.Enum):
    NON_POLLUTED = "non_polluted"
    TRANSIENT = "transient"
    POLLUTED = "polluted"


class RampShape(enum.Enum):
    LINEAR = "linear"
    COSINE = "cosine"


DEFAULT_TARGET_SHARE = {ZoneKind.NON_POLLUTED: 0.9, ZoneKind.POLLUTED: 0.3}

# Minimum-dose speeds (km/h) by (sex, age band) on flat terrain.
MDS_TABLE_FLAT = {
    ("F", "under20"): 12.5,
    ("M", "20to60"): 15.0,
}


@dataclass(frozen=True)
class Zone:
    kind: ZoneKind
    start_pos: float
    end_pos: float
    concentration: float = 0.0
    target_share: float | None = None

    def __post_init__(self) -> None:
        if not self.start_pos < self.end_pos:
            raise ValueError("zone must have start_pos < end_pos")
        if self.concentration < 0:
            raise ValueError("concentration must be >= 0")

    @property
    def length(self) -> float:
        return self.end_pos - self.start_pos

    def share_target(self) -> float:
        """Nominal target share; transient zones have none of their own."""
        if self.target_share is not None:
            return self.target_share
        return DEFAULT_TARGET_SHARE.get(self.kind, 0.9)


@dataclass(frozen=True)
class Route:
    zones: tuple[Zone, ...]
    laps: int = 1
    ramp_shape: RampShape = RampShape.LINEAR
    exit_ramp_length: float = 200.0
    total_length: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.zones:
            raise RouteError("route has no zones")
        if self.laps < 1:
            raise ValueError("laps must be >= 1")
        if self.exit_ramp_length < 0:
            raise ValueError("exit_ramp_length must be >= 0")
        object.__setattr__(self, "total_length", self.zones[-1].end_pos)


def build_route(
    segments: list[tuple[ZoneKind, float, float, float | None]],
    laps: int = 1,
    ramp_shape: RampShape = RampShape.LINEAR,
    exit_ramp_length: float = 200.0,
) -> Route:
    """Assemble contiguous zones from (kind, length, concentration, m*) rows."""
    zones = []
    pos = 0.0
    for kind, length, concentration, share in segments:
        if length <= 0:
            raise RouteError("zone length must be > 0")
        zones.append(Zone(kind, pos, pos + length, concentration, share))
        pos += length
    return Route(tuple(zones), laps, ramp_shape, exit_ramp_length)


def zone_index_at(position: float, route: Route) -> int:
    if not route.zones:
        raise RouteError("route has no zones")
    if position < 0:
        raise ValueError("position must be >= 0")
    wrapped = math.fmod(position, route.total_length)
    for i, zone in enumerate(route.zones):
        if zone.start_pos <= wrapped < zone.end_pos:
            return i
    return len(route.zones) - 1


def zone_at(position: float, route: Route) -> Zone:
    """Zone containing a (lap-wrapped) position; boundaries open the next zone."""
    return route.zones[zone_index_at(position, route)]


def _ramp(fraction: float, lo: float, hi: float, shape: RampShape) -> float:
    fraction = min(max(fraction, 0.0), 1.0)
    if shape is RampShape.COSINE:
        fraction = 0.5 - 0.5 * math.cos(math.pi * fraction)
    return lo + (hi - lo) * fraction


def target_m(position: float, route: Route) -> float:
    """Target human share at a position, including transition ramps.

    Transient zones ramp from the previous zone's target to the next
    zone's target. Leaving a polluted zone without a trailing transient
    ramps back up over the first exit_ramp_length metres of the next
    zone.
    """
    idx = zone_index_at(position, route)
    zone = route.zones[idx]
    wrapped = math.fmod(position, route.total_length)
    n = len(route.zones)
    prev_zone = route.zones[(idx - 1) % n]
    next_zone = route.zones[(idx + 1) % n]
    if zone.kind is ZoneKind.TRANSIENT:
        frac = (wrapped - zone.start_pos) / zone.length
        return _ramp(frac, prev_zone.share_target(), next_zone.share_target(), route.ramp_shape)
    if prev_zone.kind is ZoneKind.POLLUTED and route.exit_ramp_length > 0:
        into = wrapped - zone.start_pos
        if into < route.exit_ramp_length:
            frac = into / route.exit_ramp_length
            return _ramp(frac, prev_zone.share_target(), zone.share_target(), route.ramp_shape)
    return zone.share_target()


def mds_speed(sex: str, age_band: str, terrain: str = "flat") -> float:
    """Tabulated minimum-dose cycling speed (km/h) for a demographic."""
    if terrain.lower() != "flat":
        raise UnsupportedDemographic(f"terrain {terrain!r} not tabulated")
    key = (sex.upper(), age_band.lower())
    if key not in MDS_TABLE_FLAT:
        raise UnsupportedDemographic(f"no entry for sex={sex!r}, age_band={age_band!r}")
    return MDS_TABLE_FLAT[key]


def validate_route(route: Route) -> list[str]:
    """Check structural rules; returns a list of violations (empty when ok).

    Rules: zones contiguous from 0, polluted zones immediately preceded
    by a transient (with lap wrap), positive target shares where present
    (the rider must always pedal a little), non-negative concentrations,
    and no two adjacent transients.
    """
    violations: list[str] = []
    if not route.zones:
        return ["route has no zones"]
    pos = 0.0
    for i, zone in enumerate(route.zones):
        if abs(zone.start_pos - pos) > 1e-9:
            violations.append(f"zone {i} starts at {zone.start_pos}, expected {pos}")
        pos = zone.end_pos
        if zone.target_share is not None and not 0 < zone.target_share <= 1:
            violations.append(f"zone {i} target share {zone.target_share} outside (0, 1]")
        if zone.concentration < 0:
            violations.append(f"zone {i} has negative concentration")
    n = len(route.zones)
    for i, zone in enumerate(route.zones):
        prev_zone = route.zones[(i - 1) % n]
        if zone.kind is ZoneKind.POLLUTED and prev_zone.kind is not ZoneKind.TRANSIENT:
            violations.append(f"polluted zone {i} not preceded by a transient zone")
        if zone.kind is ZoneKind.TRANSIENT and prev_zone.kind is ZoneKind.TRANSIENT and n > 1:
            violations.append(f"adjacent transient zones at {i}")
    return violations
