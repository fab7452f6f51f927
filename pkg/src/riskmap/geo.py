"""GPS points and small-scale geodesy.

Distances use an equirectangular projection onto a local tangent plane (error
below 0.1% at sub-kilometer scale), which keeps segment matching cheap and
deterministic. Radius queries use great-circle distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6371008.8


@dataclass(frozen=True, order=True)
class GpsPoint:
    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def _wrap_degrees(delta: float) -> float:
    return (delta + 180.0) % 360.0 - 180.0


def project_local(p: GpsPoint, origin: GpsPoint) -> tuple[float, float]:
    """Equirectangular (x, y) meters of p on the tangent plane at origin."""
    x = math.radians(_wrap_degrees(p.lon - origin.lon)) * math.cos(math.radians(origin.lat)) * EARTH_RADIUS_M
    y = math.radians(p.lat - origin.lat) * EARTH_RADIUS_M
    return x, y


def point_to_segment_meters(p: GpsPoint, a: GpsPoint, b: GpsPoint) -> float:
    """Euclidean distance from p to the segment a-b, projected onto the plane
    centered at the segment midpoint."""
    mid = GpsPoint((a.lat + b.lat) / 2.0, _wrap_degrees((a.lon + b.lon) / 2.0))
    px, py = project_local(p, mid)
    ax, ay = project_local(a, mid)
    bx, by = project_local(b, mid)

    dx, dy = bx - ax, by - ay
    seg_len_sq = dx * dx + dy * dy
    if seg_len_sq == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / seg_len_sq
    t = max(0.0, min(1.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def great_circle_meters(a: GpsPoint, b: GpsPoint) -> float:
    """Haversine distance."""
    lat1, lon1 = math.radians(a.lat), math.radians(a.lon)
    lat2, lon2 = math.radians(b.lat), math.radians(b.lon)
    s = (
        math.sin((lat2 - lat1) / 2.0) ** 2
        + math.cos(lat1) * math.cos(lat2) * math.sin((lon2 - lon1) / 2.0) ** 2
    )
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(s)))
