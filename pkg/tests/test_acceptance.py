"""Acceptance gate.

One test per release criterion, each printing a labeled pass line so a
verbose run reads as a checklist. The end-to-end criteria run the full
batch pipeline against the synthetic world with all providers mocked and
the network blocked outright.
"""

import json
import math
import random
import socket
import time
from fractions import Fraction

import mpmath
import pytest

from newsgeo.fuzz import hybrid_score, indel_ratio, normalize_text, partial_similarity, token_sort_similarity
from newsgeo.geo import (
    EARTH_RADIUS_KM,
    GeoPoint,
    GridPlan,
    grid_points,
    haversine,
    offset_point,
    tangent_offsets_km,
)
from newsgeo.metrics import ErrorVector, aggregate
from newsgeo.ocr import plan_chunks
from newsgeo.pipeline import ResultStatus, run_batch, summarize_batch
from newsgeo.sim.mocks import sim_providers
from newsgeo.sim.world import (
    article_to_record,
    generate_article_set,
    generate_world,
    world_gazetteer,
)


def _pass(line: str) -> None:
    print(f"[acceptance] PASS {line}")


# ---------------------------------------------------------------------------
# distance oracle


def _reference_distance_km(a: GeoPoint, b: GeoPoint) -> float:
    """Spherical law of cosines at 40 decimal digits; independent of haversine."""
    with mpmath.workdps(40):
        la1, lo1 = mpmath.radians(a.lat), mpmath.radians(a.lon)
        la2, lo2 = mpmath.radians(b.lat), mpmath.radians(b.lon)
        c = mpmath.sin(la1) * mpmath.sin(la2) + mpmath.cos(la1) * mpmath.cos(la2) * mpmath.cos(
            lo1 - lo2
        )
        return float(EARTH_RADIUS_KM * mpmath.acos(c))


def test_haversine_against_independent_reference():
    rng = random.Random(20240817)
    pairs = []
    while len(pairs) < 500:  # free-range pairs, mostly continental distances
        a = GeoPoint(rng.uniform(-84.0, 84.0), rng.uniform(-180.0, 179.999))
        b = GeoPoint(rng.uniform(-84.0, 84.0), rng.uniform(-180.0, 179.999))
        if 1.0 <= haversine(a, b) <= 15000.0:
            pairs.append((a, b))
    while len(pairs) < 1000:  # constructed short-range pairs down to 1 km
        a = GeoPoint(rng.uniform(-80.0, 80.0), rng.uniform(-180.0, 179.0))
        b = offset_point(a, rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0))
        if 1.0 <= haversine(a, b) <= 15000.0:
            pairs.append((a, b))

    t0 = time.perf_counter()
    worst = 0.0
    for a, b in pairs:
        got = haversine(a, b)
        ref = _reference_distance_km(a, b)
        worst = max(worst, abs(got - ref) / ref)
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-9, f"worst relative error {worst:.3e}"
    assert elapsed < 1.0, f"oracle sweep took {elapsed:.2f}s"
    _pass(f"haversine: 1000 pairs, worst relative error {worst:.2e}, {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# similarity oracle


def _ref_indel_distance(a: str, b: str) -> int:
    """Quadratic edit-distance DP with substitutions forbidden."""
    m, n = len(a), len(b)
    row = list(range(n + 1))
    for i in range(1, m + 1):
        diag = row[0]
        row[0] = i
        for j in range(1, n + 1):
            keep = row[j]
            if a[i - 1] == b[j - 1]:
                row[j] = diag
            else:
                row[j] = 1 + min(row[j], row[j - 1])
            diag = keep
    return row[n]


def _ref_ratio(a: str, b: str) -> int:
    total = len(a) + len(b)
    if total == 0:
        return 100
    sim = Fraction(100 * (total - _ref_indel_distance(a, b)), total)
    return int(sim + Fraction(1, 2))  # round half up


def _ref_token_sort(a: str, b: str) -> int:
    return _ref_ratio(" ".join(sorted(a.split())), " ".join(sorted(b.split())))


def _ref_partial(a: str, b: str) -> int:
    s, l = (a, b) if len(a) <= len(b) else (b, a)
    if not s:
        return 100 if not l else 0
    return max(_ref_ratio(s, l[i : i + len(s)]) for i in range(len(l) - len(s) + 1))


def _ref_hybrid(a: str, b: str) -> int:
    score = Fraction(_ref_token_sort(a, b) + _ref_partial(a, b), 2)
    return int(score + Fraction(1, 2))


_TOKENS = (
    "mirpur", "road", "bridge", "bazar", "gate", "college", "demra",
    "সড়ক", "মহাসড়ক", "সেতু", "বাজার", "কলেজ", "মিরপুর", "ডেমরা",
    "n1", "r110", "z5005", "highway", "chowrasta", "মোড়",
)


def _random_pair(rng: random.Random) -> tuple[str, str]:
    a = " ".join(rng.choice(_TOKENS) for _ in range(rng.randint(1, 5)))
    mode = rng.random()
    if mode < 0.3:
        b = " ".join(rng.choice(_TOKENS) for _ in range(rng.randint(1, 5)))
    elif mode < 0.6:  # perturbed copy
        chars = list(a)
        for _ in range(rng.randint(1, 4)):
            op = rng.random()
            pos = rng.randrange(max(1, len(chars)))
            if op < 0.4 and chars:
                chars.pop(pos)
            elif op < 0.8:
                chars.insert(pos, rng.choice("abcdeকখগ"))
            elif len(chars) >= 2:
                pos = rng.randrange(len(chars) - 1)
                chars[pos], chars[pos + 1] = chars[pos + 1], chars[pos]
        b = "".join(chars)
    else:  # substring window inside longer padding
        pad = " ".join(rng.choice(_TOKENS) for _ in range(rng.randint(2, 6)))
        b = f"{pad} {a}"[: rng.randint(max(1, len(a) // 2), len(a) + len(pad))]
    return normalize_text(a), normalize_text(b)


def test_similarity_against_dp_reference():
    assert indel_ratio("abcd", "abce") == 75  # pinned
    rng = random.Random(97)
    pairs = [("abcd", "abce")] + [_random_pair(rng) for _ in range(499)]
    for a, b in pairs:
        assert indel_ratio(a, b) == _ref_ratio(a, b), (a, b)
        assert token_sort_similarity(a, b) == _ref_token_sort(a, b), (a, b)
        assert partial_similarity(a, b) == _ref_partial(a, b), (a, b)
        assert hybrid_score(a, b) == _ref_hybrid(a, b), (a, b)
    _pass("similarity: 500 pairs match the DP reference on all four functions")


# ---------------------------------------------------------------------------
# metrics


def test_metrics_hand_check():
    report = aggregate(ErrorVector(errors=(0.1, 0.2, 0.2, 0.9, 3.0)))
    assert abs(report.mae - 0.88) <= 1e-12
    assert abs(report.rmse - 1.40712) <= 1e-5
    assert report.median == 0.2
    assert report.cdf == {0.5: 0.6, 1.0: 0.8, 2.0: 0.8, 5.0: 1.0}

    rng = random.Random(5)
    for _ in range(100):
        ev = ErrorVector(
            errors=tuple(rng.uniform(0.0, 30.0) for _ in range(rng.randint(1, 60)))
        )
        r = aggregate(ev)
        assert r.rmse >= r.mae - 1e-12
    _pass("metrics: hand-check values hit and RMSE >= MAE on 100 random vectors")


# ---------------------------------------------------------------------------
# grid geometry


def test_grid_pass_counts_and_coverage():
    pivot = GeoPoint(23.8, 90.4)
    plan = GridPlan(pivot=pivot)
    passes = [grid_points(plan, step) for step in plan.steps_km]
    assert [len(p) for p in passes] == [1, 8, 40]
    every = [pt for p in passes for pt in p]
    assert len(every) == 49
    keys = {plan.quantize(pt) for pt in every}
    assert len(keys) == 49  # no duplicates across passes

    for pt in every:
        east, north = tangent_offsets_km(pivot, pt)
        assert max(abs(east), abs(north)) <= 3.0 + 1e-6

    # the three passes together cover the full 1 km lattice over the box
    lattice = {(i, j) for i in range(-3, 4) for j in range(-3, 4)}
    covered = {
        (round(tangent_offsets_km(pivot, pt)[0]), round(tangent_offsets_km(pivot, pt)[1]))
        for pt in every
    }
    assert covered == lattice
    _pass("grid: passes enumerate 1/8/40 unique points covering the 1 km lattice")


# ---------------------------------------------------------------------------
# chunk containment


def test_chunk_containment_randomized():
    rng = random.Random(31337)
    for _ in range(10_000):
        img_w = rng.randint(60, 2600)
        img_h = rng.randint(60, 1700)
        rw = rng.randint(1, min(50, img_w))
        rh = rng.randint(1, min(50, img_h))
        x0 = rng.randint(0, img_w - rw)
        y0 = rng.randint(0, img_h - rh)
        chunks = plan_chunks(img_w, img_h)
        assert any(
            c.x <= x0 and c.y <= y0 and x0 + rw <= c.x + c.w and y0 + rh <= c.y + c.h
            for c in chunks
        ), (img_w, img_h, x0, y0, rw, rh)

    pinned = plan_chunks(1920, 1080)
    assert len(pinned) == 6
    assert sorted({c.x for c in pinned}) == [0, 920]
    assert sorted({c.y for c in pinned}) == [0, 450, 580]
    _pass("chunks: 10,000 random <=50px rectangles contained; 1920x1080 pins 6 chunks")


# ---------------------------------------------------------------------------
# end-to-end over the synthetic world


@pytest.fixture(scope="module")
def no_network():
    """Any socket connect during the batch is a hard failure."""

    def deny(self, *args, **kwargs):
        raise AssertionError("network access attempted during offline run")

    original = socket.socket.connect
    socket.socket.connect = deny
    try:
        yield
    finally:
        socket.socket.connect = original


@pytest.fixture(scope="module")
def sim_corpus():
    world = generate_world(42)
    articles = generate_article_set(world, 50, 5, 5, 10)
    assert len(articles) == 60
    return world, articles


def _run_sim_batch(world, articles, concurrency: int):
    by_id = {a.article_id: a for a in articles}
    records = [article_to_record(a) for a in articles]

    def factory(rec):
        return sim_providers(world, by_id[rec["article_id"]], noise_seed=42)

    return run_batch(
        records,
        factory,
        concurrency=concurrency,
        gazetteer=world_gazetteer(world),
    )


@pytest.fixture(scope="module")
def sim_run(no_network, sim_corpus):
    world, articles = sim_corpus
    t0 = time.perf_counter()
    results = _run_sim_batch(world, articles, concurrency=1)
    elapsed = time.perf_counter() - t0
    return world, articles, results, elapsed


def test_sim_end_to_end(sim_run):
    world, articles, results, elapsed = sim_run
    by_id = {a.article_id: a for a in articles}
    res_by_id = {r.article_id: r for r in results}
    assert set(res_by_id) == set(by_id)

    def err_km(res, art):
        return haversine(res.point, art.truth)

    indexed_clear = [
        a for a in articles if a.indexed and a.vagueness_truth.value == "NotVague"
    ]
    unindexed = [a for a in articles if not a.indexed]
    vague = [a for a in articles if a.vagueness_truth.value == "ExtremelyVague"]
    assert (len(indexed_clear), len(unindexed), len(vague)) == (40, 10, 5)

    hits = sum(
        1
        for a in indexed_clear
        if res_by_id[a.article_id].status is ResultStatus.CONFIRMED_FIRST
        and err_km(res_by_id[a.article_id], a) <= 0.5
    )
    assert hits >= math.ceil(0.95 * len(indexed_clear)), f"{hits}/40 confirmed within 0.5 km"

    for a in unindexed:
        r = res_by_id[a.article_id]
        assert r.status is ResultStatus.CONFIRMED_SECOND, (a.article_id, r.status)
        assert err_km(r, a) <= 0.75, (a.article_id, err_km(r, a))

    for a in vague:
        r = res_by_id[a.article_id]
        assert r.status is ResultStatus.NOT_AVAILABLE
        assert r.telemetry.verifier_calls == 0
        assert r.telemetry.screenshots == 0

    summary = summarize_batch(results)
    assert summary.mean_verifier_calls_per_resolved <= 15.0

    # the reranker runs exactly once per article that reaches candidate
    # selection, and never for articles stopped at triage
    for a in articles:
        r = res_by_id[a.article_id]
        expected = 0 if a.vagueness_truth.value == "ExtremelyVague" else 1
        assert r.telemetry.rerank_calls == expected, (a.article_id, r.telemetry.rerank_calls)

    assert elapsed < 180.0, f"batch took {elapsed:.1f}s"
    _pass(
        f"sim e2e: {hits}/40 indexed within 0.5 km, 10/10 unindexed within 0.75 km, "
        f"5/5 vague stopped cold, {summary.mean_verifier_calls_per_resolved:.2f} mean "
        f"verifications per resolved, {elapsed:.0f}s"
    )


def test_sim_batch_is_deterministic_across_concurrency(sim_run, sim_corpus):
    world, articles = sim_corpus
    _, _, base_results, _ = sim_run
    threaded = _run_sim_batch(world, articles, concurrency=4)

    def multiset(results):
        return sorted(json.dumps(r.to_prediction(), sort_keys=True) for r in results)

    assert multiset(base_results) == multiset(threaded)

    def traces(results):
        return {
            r.article_id: [(t.seq, t.stage, t.event, t.detail) for t in r.trace]
            for r in results
        }

    assert traces(base_results) == traces(threaded)
    _pass("determinism: concurrency 1 and 4 agree on predictions and full traces")


def test_pipeline_safety_invariants(sim_run):
    _, _, results, _ = sim_run
    confirmed = 0
    for r in results:
        gate_failed = {
            t.detail.split(": ")[0] for t in r.trace if t.event == "gate_failed"
        }
        verified = {t.detail.split(": ")[0] for t in r.trace if t.event == "verified"}
        assert gate_failed.isdisjoint(verified), r.article_id

        # telemetry agrees with the trace: every verifier call left a mark
        verdict_events = sum(1 for t in r.trace if t.event in ("verified", "verify_failed"))
        assert r.telemetry.verifier_calls == verdict_events, r.article_id

        if r.status in (ResultStatus.CONFIRMED_FIRST, ResultStatus.CONFIRMED_SECOND):
            confirmed += 1
            assert any(
                t.event == "verified" and t.detail.endswith("Yes") for t in r.trace
            ), r.article_id
    assert confirmed > 0
    _pass(
        "safety: no gate-failed view reached the verifier; every confirmation "
        "carries a verifier Yes"
    )
