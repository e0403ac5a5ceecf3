"""Coordinate types, great-circle distance, tangent-plane offsets, and grid lattices.

Distances use the spherical model with a fixed mean Earth radius. Offsets
use a local tangent (equirectangular) approximation, which is accurate to
well under 0.1% at the few-kilometre scales the search grid operates on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import OutOfRange

EARTH_RADIUS_KM = 6371.0

# Tangent-plane offsets degrade toward the poles; reject origins beyond this.
MAX_OFFSET_ORIGIN_LAT = 85.0

# Visited-set quantum: 10 m, expressed in km.
_VISIT_QUANTUM_KM = 0.01


@dataclass(frozen=True)
class GeoPoint:
    """A latitude/longitude pair in degrees."""

    lat: float
    lon: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise OutOfRange(f"non-finite coordinates ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise OutOfRange(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise OutOfRange(f"longitude {self.lon} outside [-180, 180]")


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points, in km."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = math.radians(b.lat - a.lat)
    dlam = math.radians(b.lon - a.lon)
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(s)))


def offset_point(origin: GeoPoint, east_km: float, north_km: float) -> GeoPoint:
    """Shift ``origin`` by local tangent-plane offsets, in km.

    Raises OutOfRange when the origin is too close to a pole for the
    approximation to hold, or when the shifted point leaves valid bounds.
    """
    if abs(origin.lat) > MAX_OFFSET_ORIGIN_LAT:
        raise OutOfRange(f"origin latitude {origin.lat} too close to a pole")
    dlat = (north_km / EARTH_RADIUS_KM) * (180.0 / math.pi)
    dlon = (east_km / (EARTH_RADIUS_KM * math.cos(math.radians(origin.lat)))) * (180.0 / math.pi)
    return GeoPoint(origin.lat + dlat, origin.lon + dlon)


def tangent_offsets_km(origin: GeoPoint, point: GeoPoint) -> tuple[float, float]:
    """Inverse of offset_point: (east_km, north_km) of ``point`` relative to ``origin``."""
    north = math.radians(point.lat - origin.lat) * EARTH_RADIUS_KM
    east = math.radians(point.lon - origin.lon) * EARTH_RADIUS_KM * math.cos(math.radians(origin.lat))
    return east, north


@dataclass
class GridPlan:
    """State of one recursive grid scan around a pivot point.

    ``visited`` holds tangent offsets quantized to 10 m so that points
    revisited across step sizes dedup deterministically.
    """

    pivot: GeoPoint
    extent_km: float = 6.0
    steps_km: tuple[float, ...] = (6.0, 3.0, 1.0)
    visited: set[tuple[int, int]] = field(default_factory=set)

    def __post_init__(self) -> None:
        if self.extent_km <= 0:
            raise ValueError("extent must be positive")
        steps = tuple(self.steps_km)
        if any(s2 >= s1 for s1, s2 in zip(steps, steps[1:])):
            raise ValueError("steps must be strictly decreasing")
        if any(s > self.extent_km for s in steps):
            raise ValueError("every step must be <= extent")
        self.steps_km = steps

    def quantize(self, point: GeoPoint) -> tuple[int, int]:
        east, north = tangent_offsets_km(self.pivot, point)
        return (round(east / _VISIT_QUANTUM_KM), round(north / _VISIT_QUANTUM_KM))

    def is_visited(self, point: GeoPoint) -> bool:
        return self.quantize(point) in self.visited


def grid_points(plan: GridPlan, step_km: float) -> list[GeoPoint]:
    """New lattice points for one pass, row-major from the north-west corner.

    Points are pivot + (i*step east, j*step north) for all integer i, j with
    |i*step| and |j*step| within half the extent; previously visited points
    are skipped and the returned ones are marked visited.
    """
    if step_km not in plan.steps_km:
        raise ValueError(f"step {step_km} not in plan steps {plan.steps_km}")
    half = plan.extent_km / 2.0
    n = int(math.floor(half / step_km + 1e-9))
    out: list[GeoPoint] = []
    for j in range(n, -n - 1, -1):
        for i in range(-n, n + 1):
            point = offset_point(plan.pivot, i * step_km, j * step_km)
            key = plan.quantize(point)
            if key in plan.visited:
                continue
            plan.visited.add(key)
            out.append(point)
    return out
