"""Distance, offset, and grid lattice behaviour."""

from __future__ import annotations

import math
import random

import pytest

from newsgeo.errors import OutOfRange
from newsgeo.geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    GridPlan,
    grid_points,
    haversine,
    offset_point,
    tangent_offsets_km,
)


def _random_point(rng: random.Random, lat_span: float = 80.0) -> GeoPoint:
    return GeoPoint(rng.uniform(-lat_span, lat_span), rng.uniform(-180.0, 180.0))


def _law_of_cosines_km(a: GeoPoint, b: GeoPoint) -> float:
    phi1, phi2 = math.radians(a.lat), math.radians(b.lat)
    dlam = math.radians(b.lon - a.lon)
    c = math.sin(phi1) * math.sin(phi2) + math.cos(phi1) * math.cos(phi2) * math.cos(dlam)
    return EARTH_RADIUS_KM * math.acos(max(-1.0, min(1.0, c)))


# ---------------------------------------------------------------------------
# GeoPoint


def test_point_bounds_enforced():
    GeoPoint(90.0, 180.0)
    GeoPoint(-90.0, -180.0)
    for lat, lon in [(90.1, 0.0), (-91.0, 0.0), (0.0, 180.5), (0.0, -181.0)]:
        with pytest.raises(OutOfRange):
            GeoPoint(lat, lon)
    with pytest.raises(OutOfRange):
        GeoPoint(float("nan"), 0.0)
    with pytest.raises(OutOfRange):
        GeoPoint(0.0, float("inf"))


# ---------------------------------------------------------------------------
# haversine


def test_haversine_identity_and_symmetry():
    rng = random.Random(101)
    for _ in range(200):
        a = _random_point(rng)
        b = _random_point(rng)
        assert haversine(a, a) == 0.0
        assert haversine(a, b) == haversine(b, a)


def test_haversine_antipodal():
    d = haversine(GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0))
    assert d == pytest.approx(math.pi * EARTH_RADIUS_KM, abs=1e-9)


def test_haversine_equator_arc():
    # 1 degree of longitude on the equator is R * pi / 180 km.
    d = haversine(GeoPoint(0.0, 10.0), GeoPoint(0.0, 11.0))
    assert d == pytest.approx(EARTH_RADIUS_KM * math.pi / 180.0, rel=1e-12)


def test_haversine_matches_law_of_cosines_when_well_separated():
    # The alternative formula is ill-conditioned at tiny separations, so
    # restrict this cross-check to pairs at least ~50 km apart.
    rng = random.Random(202)
    checked = 0
    while checked < 500:
        a = _random_point(rng)
        b = _random_point(rng)
        d = haversine(a, b)
        if d < 50.0:
            continue
        assert d == pytest.approx(_law_of_cosines_km(a, b), rel=1e-9)
        checked += 1


def test_haversine_triangle_inequality():
    rng = random.Random(303)
    for _ in range(1000):
        a, b, c = (_random_point(rng) for _ in range(3))
        assert haversine(a, c) <= haversine(a, b) + haversine(b, c) + 1e-9


# ---------------------------------------------------------------------------
# offset_point


def test_offset_north_one_km_at_origin():
    p = offset_point(GeoPoint(0.0, 0.0), 0.0, 1.0)
    assert p.lon == 0.0
    assert p.lat == pytest.approx(0.0089932, abs=5e-8)


def test_offset_roundtrip():
    rng = random.Random(404)
    for _ in range(300):
        origin = _random_point(rng, lat_span=84.0)
        east = rng.uniform(-20.0, 20.0)
        north = rng.uniform(-20.0, 20.0)
        try:
            moved = offset_point(origin, east, north)
        except OutOfRange:
            continue  # pushed past the antimeridian, fine
        e2, n2 = tangent_offsets_km(origin, moved)
        assert e2 == pytest.approx(east, abs=1e-9)
        assert n2 == pytest.approx(north, abs=1e-9)


def test_offset_distance_agrees_with_haversine_at_small_scale():
    rng = random.Random(505)
    for _ in range(300):
        origin = _random_point(rng, lat_span=70.0)
        east = rng.uniform(-5.0, 5.0)
        north = rng.uniform(-5.0, 5.0)
        moved = offset_point(origin, east, north)
        planar = math.hypot(east, north)
        assert haversine(origin, moved) == pytest.approx(planar, rel=2e-3, abs=1e-6)


def test_offset_rejects_polar_origin():
    with pytest.raises(OutOfRange):
        offset_point(GeoPoint(85.5, 0.0), 1.0, 1.0)
    # At exactly the cutoff it still works.
    offset_point(GeoPoint(85.0, 0.0), 1.0, 1.0)


def test_offset_rejects_out_of_bounds_result():
    with pytest.raises(OutOfRange):
        offset_point(GeoPoint(0.0, 179.9999), 50.0, 0.0)


# ---------------------------------------------------------------------------
# grid lattice


def test_grid_pass_sizes_and_total():
    plan = GridPlan(pivot=GeoPoint(23.8, 90.4))
    first = grid_points(plan, 6.0)
    second = grid_points(plan, 3.0)
    third = grid_points(plan, 1.0)
    assert len(first) == 1
    assert len(second) == 8
    assert len(third) == 40
    assert len(first) + len(second) + len(third) == 49


def test_grid_first_pass_is_pivot():
    pivot = GeoPoint(23.8, 90.4)
    plan = GridPlan(pivot=pivot)
    [only] = grid_points(plan, 6.0)
    assert haversine(only, pivot) < 1e-9


def test_grid_row_major_order():
    pivot = GeoPoint(23.8, 90.4)
    plan = GridPlan(pivot=pivot)
    grid_points(plan, 6.0)
    second = grid_points(plan, 3.0)
    offsets = [tangent_offsets_km(pivot, p) for p in second]
    rounded = [(round(e, 6), round(n, 6)) for e, n in offsets]
    # North row first (west to east), centre row skips the visited pivot.
    assert rounded == [
        (-3.0, 3.0), (0.0, 3.0), (3.0, 3.0),
        (-3.0, 0.0), (3.0, 0.0),
        (-3.0, -3.0), (0.0, -3.0), (3.0, -3.0),
    ]


def test_grid_full_lattice_coverage():
    pivot = GeoPoint(23.8, 90.4)
    plan = GridPlan(pivot=pivot)
    seen = set()
    for step in plan.steps_km:
        for p in grid_points(plan, step):
            e, n = tangent_offsets_km(pivot, p)
            seen.add((round(e, 6), round(n, 6)))
    expected = {(float(i), float(j)) for i in range(-3, 4) for j in range(-3, 4)}
    assert seen == expected


def test_grid_points_within_extent():
    pivot = GeoPoint(23.8, 90.4)
    plan = GridPlan(pivot=pivot)
    half_diag = math.hypot(plan.extent_km / 2.0, plan.extent_km / 2.0)
    for step in plan.steps_km:
        for p in grid_points(plan, step):
            assert haversine(pivot, p) <= half_diag + 0.01


def test_grid_repeat_pass_yields_nothing():
    plan = GridPlan(pivot=GeoPoint(23.8, 90.4))
    grid_points(plan, 6.0)
    assert grid_points(plan, 6.0) == []
    grid_points(plan, 3.0)
    assert grid_points(plan, 3.0) == []


def test_grid_visited_quantized_to_ten_metres():
    pivot = GeoPoint(23.8, 90.4)
    plan = GridPlan(pivot=pivot)
    grid_points(plan, 6.0)
    # Within 5 m of the pivot quantizes to the same cell.
    near = offset_point(pivot, 0.004, -0.004)
    assert plan.is_visited(near)
    far = offset_point(pivot, 0.006, 0.0)
    assert not plan.is_visited(far)


def test_grid_rejects_unknown_step():
    plan = GridPlan(pivot=GeoPoint(0.0, 0.0))
    with pytest.raises(ValueError):
        grid_points(plan, 2.0)


def test_grid_plan_validation():
    with pytest.raises(ValueError):
        GridPlan(pivot=GeoPoint(0.0, 0.0), extent_km=0.0)
    with pytest.raises(ValueError):
        GridPlan(pivot=GeoPoint(0.0, 0.0), steps_km=(3.0, 3.0))
    with pytest.raises(ValueError):
        GridPlan(pivot=GeoPoint(0.0, 0.0), extent_km=4.0, steps_km=(6.0, 3.0))
