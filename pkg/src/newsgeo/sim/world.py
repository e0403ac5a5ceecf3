"""Deterministic synthetic world: admin hierarchy, roads, landmarks, articles.

Geometry is arranged so every pipeline stage is exercised honestly:

* each landmark sits on a road, 1.0 to 2.6 km from its union's center, so a
  6 km grid centered on the union always contains a 1 km lattice point
  within 0.75 km of the accident;
* accident points keep at least 1 km of clearance from every other
  selectable place (other landmarks, admin centers, the road's midpoint
  vertex), so a wrong first-degree candidate can never be close enough to
  verify.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from ..cues import LocationCues, VaguenessClass, assess_vagueness, parse_extractor_output
from ..fuzz import RoadGazetteer
from ..geo import GeoPoint, haversine, offset_point, tangent_offsets_km

ANCHOR = GeoPoint(23.0, 90.0)
REGION_KM = 200.0

# Clearance rules, in km. See module docstring.
MIN_ANCHOR_TO_UNION = 1.0
MAX_ANCHOR_TO_UNION = 2.6
MIN_ANCHOR_TO_OTHER_PLACE = 1.0
MIN_ANCHOR_TO_ANCHOR = 1.1
MAX_LANDMARK_PERP_KM = 0.13


@dataclass(frozen=True)
class SimPlace:
    name_en: str
    name_bn: str
    kind: str  # landmark | road | union | upazilla | district
    location: GeoPoint
    polyline: tuple[GeoPoint, ...] = ()
    code: str | None = None
    parent: str | None = None
    road_ref: str | None = None
    road_anchor: GeoPoint | None = None  # landmark's on-road accident anchor


@dataclass(frozen=True)
class SimCounts:
    districts: int = 4
    roads: int = 12
    landmarks: int = 40

    def __post_init__(self) -> None:
        if min(self.districts, self.roads, self.landmarks) < 1:
            raise ValueError("all counts must be >= 1")


@dataclass(frozen=True)
class SimWorld:
    seed: int
    counts: SimCounts
    places: tuple[SimPlace, ...]
    by_name: dict = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "by_name", {p.name_en: p for p in self.places})

    def of_kind(self, kind: str) -> list[SimPlace]:
        return [p for p in self.places if p.kind == kind]

    @property
    def landmarks(self) -> list[SimPlace]:
        return self.of_kind("landmark")

    @property
    def roads(self) -> list[SimPlace]:
        return self.of_kind("road")

    def admin_units(self) -> list[SimPlace]:
        return [p for p in self.places if p.kind in ("union", "upazilla", "district")]


# ---------------------------------------------------------------------------
# name generation

_SYLLABLES = [
    ("ba", "বা"), ("da", "দা"), ("ka", "কা"), ("ra", "রা"), ("mo", "মো"),
    ("sha", "শা"), ("ta", "তা"), ("ga", "গা"), ("ha", "হা"), ("ni", "নি"),
    ("ru", "রু"), ("pa", "পা"), ("la", "লা"), ("su", "সু"), ("go", "গো"),
    ("ja", "জা"), ("bi", "বি"), ("du", "দু"), ("ma", "মা"), ("ko", "কো"),
]

_ADMIN_SUFFIXES = [
    ("pur", "পুর"), ("ganj", "গঞ্জ"), ("bari", "বাড়ি"), ("nagar", "নগর"),
    ("hat", "হাট"), ("para", "পাড়া"), ("khali", "খালী"), ("kandi", "কান্দি"),
]

_LANDMARK_TYPES = [
    ("Bazar", "বাজার"), ("Jame Masjid", "জামে মসজিদ"), ("High School", "উচ্চ বিদ্যালয়"),
    ("Bridge", "সেতু"), ("Filling Station", "ফিলিং স্টেশন"), ("Primary School", "প্রাথমিক বিদ্যালয়"),
]


class _Namer:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.used: set[str] = set()

    def base(self) -> tuple[str, str]:
        for _ in range(1000):
            n = self.rng.randint(2, 3)
            parts = [self.rng.choice(_SYLLABLES) for _ in range(n)]
            suffix = self.rng.choice(_ADMIN_SUFFIXES)
            en = "".join(p[0] for p in parts) + suffix[0]
            bn = "".join(p[1] for p in parts) + suffix[1]
            if en not in self.used:
                self.used.add(en)
                return en.capitalize(), bn
        raise RuntimeError("name space exhausted")

    def landmark(self) -> tuple[str, str]:
        base_en, base_bn = self.base()
        kind_en, kind_bn = self.rng.choice(_LANDMARK_TYPES)
        return f"{base_en} {kind_en}", f"{base_bn} {kind_bn}"


# ---------------------------------------------------------------------------
# geometry helpers


def _walk_polyline(
    polyline: tuple[GeoPoint, ...], start_idx: int, direction: int, dist_km: float
) -> GeoPoint | None:
    """Point at arc distance dist_km from vertex start_idx, or None if off-end."""
    remaining = dist_km
    i = start_idx
    while True:
        j = i + direction
        if j < 0 or j >= len(polyline):
            return None
        seg = haversine(polyline[i], polyline[j])
        if seg >= remaining:
            t = remaining / seg
            e, n = tangent_offsets_km(polyline[i], polyline[j])
            return offset_point(polyline[i], e * t, n * t)
        remaining -= seg
        i = j


def _perpendicular_offset(
    a: GeoPoint, b: GeoPoint, at: GeoPoint, dist_km: float
) -> GeoPoint:
    e, n = tangent_offsets_km(a, b)
    norm = math.hypot(e, n)
    if norm == 0:
        return at
    return offset_point(at, -n / norm * dist_km, e / norm * dist_km)


def _scatter(
    rng: random.Random, n: int, lo: float, hi: float, min_sep_km: float, around: list[GeoPoint] | None = None
) -> list[GeoPoint]:
    """n points in the region square with pairwise separation, by rejection."""
    pts: list[GeoPoint] = []
    others = list(around or [])
    for _ in range(n):
        for _attempt in range(2000):
            p = offset_point(ANCHOR, rng.uniform(lo, hi), rng.uniform(lo, hi))
            if all(haversine(p, q) >= min_sep_km for q in pts + others):
                pts.append(p)
                break
        else:
            raise RuntimeError("could not scatter points with required separation")
    return pts


# ---------------------------------------------------------------------------
# world generation


def generate_world(seed: int, counts: SimCounts | None = None) -> SimWorld:
    counts = counts or SimCounts()
    rng = random.Random(f"world:{seed}")
    namer = _Namer(rng)
    places: list[SimPlace] = []

    district_pts = _scatter(rng, counts.districts, 25.0, REGION_KM - 25.0, 45.0)
    districts = []
    for pt in district_pts:
        en, bn = namer.base()
        d = SimPlace(name_en=en, name_bn=bn, kind="district", location=pt)
        districts.append(d)
        places.append(d)

    upazillas = []
    for d in districts:
        centers: list[GeoPoint] = []
        for _ in range(2):
            for _attempt in range(2000):
                e = rng.uniform(-18.0, 18.0)
                n = rng.uniform(-18.0, 18.0)
                if not 10.0 <= math.hypot(e, n) <= 18.0:
                    continue
                pt = offset_point(d.location, e, n)
                if all(haversine(pt, c) >= 14.0 for c in centers):
                    centers.append(pt)
                    break
            else:
                raise RuntimeError("could not place upazilla centers")
        for pt in centers:
            en, bn = namer.base()
            u = SimPlace(name_en=en, name_bn=bn, kind="upazilla", location=pt, parent=d.name_en)
            upazillas.append(u)
            places.append(u)

    unions = []
    union_pts: list[GeoPoint] = []
    for u in upazillas:
        for _ in range(2):
            for _attempt in range(2000):
                e = rng.uniform(-8.0, 8.0)
                n = rng.uniform(-8.0, 8.0)
                if not 4.0 <= math.hypot(e, n) <= 8.0:
                    continue
                pt = offset_point(u.location, e, n)
                if all(haversine(pt, q) >= 7.0 for q in union_pts):
                    union_pts.append(pt)
                    break
            else:
                raise RuntimeError("could not place union centers")
            en, bn = namer.base()
            un = SimPlace(name_en=en, name_bn=bn, kind="union", location=pt, parent=u.name_en)
            unions.append(un)
            places.append(un)

    roads = _build_roads(rng, counts.roads, unions)
    places.extend(roads)

    landmarks = _place_landmarks(rng, namer, counts.landmarks, unions, roads, places)
    places.extend(landmarks)

    return SimWorld(seed=seed, counts=counts, places=tuple(places))


def _build_roads(rng: random.Random, n_roads: int, unions: list[SimPlace]) -> list[SimPlace]:
    """Each road threads 2-3 union centers with jittered mid vertices.

    Unions are dealt twice round-robin so each sits on about two roads,
    which is what gives landmark placement its slot capacity.
    """
    order = unions[:]
    rng.shuffle(order)
    second = unions[:]
    rng.shuffle(second)
    assignments: list[list[SimPlace]] = [[] for _ in range(n_roads)]
    for i, u in enumerate(order + second):
        group = assignments[i % n_roads]
        if u not in group and len(group) < 3:
            group.append(u)
    # top up roads with < 2 unions from the pool
    for group in assignments:
        while len(group) < 2:
            extra = rng.choice(unions)
            if extra not in group:
                group.append(extra)

    used_codes: set[str] = set()
    roads = []
    for group in assignments:
        group = group[:3]
        polyline: list[GeoPoint] = []
        for a, b in zip(group, group[1:]):
            seg_start = a.location
            seg_end = b.location
            if not polyline:
                polyline.append(seg_start)
            total = haversine(seg_start, seg_end)
            steps = max(1, int(total // 2.5))
            e_full, n_full = tangent_offsets_km(seg_start, seg_end)
            for s in range(1, steps):
                t = s / steps
                mid = offset_point(seg_start, e_full * t, n_full * t)
                # modest jitter keeps heading deviation under ~22 degrees, so
                # arc distance stays a good proxy for straight-line distance
                mid = _perpendicular_offset(seg_start, seg_end, mid, rng.uniform(-0.5, 0.5))
                polyline.append(mid)
            polyline.append(seg_end)
        while True:
            code = rng.choice("NRZ") + str(rng.randint(1, 999))
            if code not in used_codes:
                used_codes.add(code)
                break
        first, last = group[0], group[-1]
        road_kind = rng.choice(["Road", "Highway"])
        name_en = f"{first.name_en} {last.name_en} {road_kind}"
        name_bn = f"{first.name_bn} {last.name_bn} " + ("সড়ক" if road_kind == "Road" else "মহাসড়ক")
        pl = tuple(polyline)
        roads.append(
            SimPlace(
                name_en=name_en,
                name_bn=name_bn,
                kind="road",
                location=pl[len(pl) // 2],
                polyline=pl,
                code=code,
            )
        )
    return roads


def _place_landmarks(
    rng: random.Random,
    namer: _Namer,
    n_landmarks: int,
    unions: list[SimPlace],
    roads: list[SimPlace],
    existing: list[SimPlace],
) -> list[SimPlace]:
    # vertices of each road that coincide with a union center
    union_on_road: list[tuple[SimPlace, SimPlace, int]] = []
    for road in roads:
        for idx, v in enumerate(road.polyline):
            for u in unions:
                if haversine(v, u.location) < 0.05:
                    union_on_road.append((u, road, idx))
    if not union_on_road:
        raise RuntimeError("no union lies on any road")

    admin_pts = [(p.name_en, p.location) for p in existing if p.kind in ("union", "upazilla", "district")]

    # Systematic slots: each (union-vertex, direction, distance band) can host
    # at most one landmark. Bands are 1.1+ km apart along the arc, so two
    # landmarks from the same vertex-direction never violate spacing.
    slots = []
    for u, road, idx in union_on_road:
        for direction in (-1, 1):
            for band in ((1.2, 1.32), (2.28, 2.42)):
                slots.append((u, road, idx, direction, band))
    rng.shuffle(slots)

    landmarks: list[SimPlace] = []
    for u, road, idx, direction, band in slots:
        if len(landmarks) == n_landmarks:
            break
        for _attempt in range(10):
            d = rng.uniform(*band)
            anchor = _walk_polyline(road.polyline, idx, direction, d)
            if anchor is None:
                break  # this direction runs off the road end; slot is dead
            if not MIN_ANCHOR_TO_UNION <= haversine(anchor, u.location) <= MAX_ANCHOR_TO_UNION:
                continue
            if any(
                haversine(anchor, loc) < MIN_ANCHOR_TO_OTHER_PLACE
                for name, loc in admin_pts
                if name != u.name_en
            ):
                continue
            if haversine(anchor, road.location) < MIN_ANCHOR_TO_OTHER_PLACE:
                continue  # road.location is the selectable midpoint vertex
            if any(
                haversine(anchor, lm.road_anchor) < MIN_ANCHOR_TO_ANCHOR for lm in landmarks
            ):
                continue
            perp = rng.uniform(0.03, MAX_LANDMARK_PERP_KM) * rng.choice((-1, 1))
            nxt = min(max(idx + direction, 0), len(road.polyline) - 1)
            loc = _perpendicular_offset(road.polyline[idx], road.polyline[nxt], anchor, perp)
            en, bn = namer.landmark()
            landmarks.append(
                SimPlace(
                    name_en=en,
                    name_bn=bn,
                    kind="landmark",
                    location=loc,
                    parent=u.name_en,
                    road_ref=road.name_en,
                    road_anchor=anchor,
                )
            )
            break
    if len(landmarks) < n_landmarks:
        raise RuntimeError(
            f"world too small: placed {len(landmarks)} of {n_landmarks} landmarks; "
            "raise districts/roads or lower landmarks"
        )
    return landmarks


# ---------------------------------------------------------------------------
# articles

TEMPLATE_FULL = (
    "At least two people were killed and several others injured when a passenger bus "
    "overturned on the {road} near {landmark}, in {union} union of {upazilla} upazilla "
    "under {district} district, police said."
)
TEMPLATE_NO_LANDMARK = (
    "At least two people were killed and several others injured when a passenger bus "
    "overturned on the {road}, in {union} union of {upazilla} upazilla "
    "under {district} district, police said."
)
TEMPLATE_NO_ROAD = (
    "At least two people were killed and several others injured when a speeding truck "
    "crashed near {landmark}, in {union} union of {upazilla} upazilla "
    "under {district} district, police said."
)
TEMPLATE_NO_BOTH = (
    "At least two people were killed and several others injured in a road accident "
    "somewhere in {district} district, police said."
)


@dataclass(frozen=True)
class SimArticle:
    article_id: str
    text: str
    truth: GeoPoint
    cues_truth: LocationCues
    vagueness_truth: VaguenessClass
    indexed: bool
    landmark_en: str
    road_en: str
    union_en: str


def compose_extractor_reply(
    road: str, landmark: str, union: str, upazilla: str, district: str, world: SimWorld | None
) -> str:
    """The tagged wire format both the generator and the mock extractor emit."""
    lines = [
        f"road_name: {road}",
        "road_type: highway" if road else "road_type:",
        f"landmark: {landmark}",
        f"union: {union}",
        f"upazilla: {upazilla}",
        f"district: {district}",
    ]
    sugs = []
    if landmark:
        sugs.append(landmark)
        if union:
            sugs.append(f"{landmark}, {union}")
    if road:
        sugs.append(road)
        if district:
            sugs.append(f"{road}, {district}")
    lines += [f"<sug_str>{s}</sug_str>" for s in sugs]

    def bn_of(name: str) -> str:
        if world is not None and name in world.by_name:
            return world.by_name[name].name_bn
        return ""

    pairs = [(bn_of(n), n) for n in (landmark, union, district) if n]
    if pairs:
        lines.append("<place_list>")
        lines += [f"{bn} || {en}" for bn, en in pairs]
        lines.append("</place_list>")
    return "\n".join(lines)


def generate_article(
    world: SimWorld,
    seed: int,
    omit: frozenset[str] | set[str] = frozenset(),
    indexed: bool = True,
    article_id: str | None = None,
) -> SimArticle:
    bad = set(omit) - {"landmark", "road"}
    if bad:
        raise ValueError(f"omit may only contain 'landmark'/'road', got {sorted(bad)}")
    rng = random.Random(f"article:{world.seed}:{seed}")
    lm = rng.choice(world.landmarks)
    union = world.by_name[lm.parent]
    upazilla = world.by_name[union.parent]
    district = world.by_name[upazilla.parent]
    road = world.by_name[lm.road_ref]

    names = {
        "road": road.name_en,
        "landmark": lm.name_en,
        "union": union.name_en,
        "upazilla": upazilla.name_en,
        "district": district.name_en,
    }
    if omit == {"landmark", "road"}:
        text = TEMPLATE_NO_BOTH.format(**names)
        reply = compose_extractor_reply("", "", "", "", names["district"], world)
    elif omit == {"landmark"}:
        text = TEMPLATE_NO_LANDMARK.format(**names)
        reply = compose_extractor_reply(
            names["road"], "", names["union"], names["upazilla"], names["district"], world
        )
    elif omit == {"road"}:
        text = TEMPLATE_NO_ROAD.format(**names)
        reply = compose_extractor_reply(
            "", names["landmark"], names["union"], names["upazilla"], names["district"], world
        )
    else:
        text = TEMPLATE_FULL.format(**names)
        reply = compose_extractor_reply(
            names["road"], names["landmark"], names["union"], names["upazilla"], names["district"], world
        )

    cues = parse_extractor_output(reply)
    return SimArticle(
        article_id=article_id or f"sim-{world.seed}-{seed}",
        text=text,
        truth=lm.road_anchor,
        cues_truth=cues,
        vagueness_truth=assess_vagueness(cues),
        indexed=indexed,
        landmark_en=lm.name_en,
        road_en=road.name_en,
        union_en=union.name_en,
    )


def generate_article_set(
    world: SimWorld,
    not_vague: int,
    slightly_vague: int,
    extremely_vague: int,
    unindexed: int,
) -> list[SimArticle]:
    """The standard dataset mix; unindexed articles come out of the NotVague share."""
    if unindexed > not_vague:
        raise ValueError("unindexed count cannot exceed the NotVague count")
    articles = []
    seq = 0
    for i in range(not_vague):
        articles.append(
            generate_article(
                world,
                seed=seq,
                omit=frozenset(),
                indexed=i >= unindexed,
                article_id=f"sim-{world.seed}-{seq:03d}",
            )
        )
        seq += 1
    for i in range(slightly_vague):
        omit = frozenset(["landmark"] if i % 2 == 0 else ["road"])
        articles.append(
            generate_article(world, seed=seq, omit=omit, article_id=f"sim-{world.seed}-{seq:03d}")
        )
        seq += 1
    for _ in range(extremely_vague):
        articles.append(
            generate_article(
                world,
                seed=seq,
                omit=frozenset({"landmark", "road"}),
                article_id=f"sim-{world.seed}-{seq:03d}",
            )
        )
        seq += 1
    return articles


# ---------------------------------------------------------------------------
# serialization


def _place_to_record(p: SimPlace) -> dict:
    rec = {
        "name_en": p.name_en,
        "name_bn": p.name_bn,
        "kind": p.kind,
        "lat": p.location.lat,
        "lon": p.location.lon,
    }
    if p.polyline:
        rec["polyline"] = [[v.lat, v.lon] for v in p.polyline]
    if p.code:
        rec["code"] = p.code
    if p.parent:
        rec["parent"] = p.parent
    if p.road_ref:
        rec["road_ref"] = p.road_ref
    if p.road_anchor:
        rec["road_anchor"] = [p.road_anchor.lat, p.road_anchor.lon]
    return rec


def world_to_json(world: SimWorld) -> str:
    doc = {
        "seed": world.seed,
        "counts": {
            "districts": world.counts.districts,
            "roads": world.counts.roads,
            "landmarks": world.counts.landmarks,
        },
        "places": [_place_to_record(p) for p in world.places],
    }
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def world_from_json(text: str) -> SimWorld:
    doc = json.loads(text)
    places = []
    for rec in doc["places"]:
        places.append(
            SimPlace(
                name_en=rec["name_en"],
                name_bn=rec["name_bn"],
                kind=rec["kind"],
                location=GeoPoint(rec["lat"], rec["lon"]),
                polyline=tuple(GeoPoint(a, b) for a, b in rec.get("polyline", [])),
                code=rec.get("code"),
                parent=rec.get("parent"),
                road_ref=rec.get("road_ref"),
                road_anchor=(
                    GeoPoint(*rec["road_anchor"]) if rec.get("road_anchor") else None
                ),
            )
        )
    counts = SimCounts(**doc["counts"])
    return SimWorld(seed=doc["seed"], counts=counts, places=tuple(places))


def world_gazetteer(world: SimWorld) -> RoadGazetteer:
    """Road-code gazetteer over the world's own roads, both scripts."""
    records = [
        {"code": r.code, "names": [r.name_en, r.name_bn]} for r in world.of_kind("road")
    ]
    return RoadGazetteer.from_records(records)


def save_world(world: SimWorld, path: str | Path) -> str:
    text = world_to_json(world)
    Path(path).write_text(text, encoding="utf-8")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_world(path: str | Path) -> SimWorld:
    return world_from_json(Path(path).read_text(encoding="utf-8"))


def article_to_record(a: SimArticle) -> dict:
    return {
        "article_id": a.article_id,
        "text": a.text,
        "lat": a.truth.lat,
        "lon": a.truth.lon,
        "landmark": a.landmark_en,
        "road": a.road_en,
        "union": a.union_en,
        "indexed": a.indexed,
        "vagueness": a.vagueness_truth.value,
    }
