"""Normalization, similarity ratios, alias map, and road gazetteer."""

from __future__ import annotations

import random

import pytest

from newsgeo.errors import GazetteerUnavailable, SchemaError
from newsgeo.fuzz import (
    AliasMap,
    RoadGazetteer,
    alias_normalize,
    hybrid_score,
    indel_ratio,
    load_alias_map,
    load_road_gazetteer,
    normalize_text,
    partial_similarity,
    road_lookup,
    token_sort_similarity,
)


def _indel_distance_dp(a: str, b: str) -> int:
    """Reference Wagner-Fischer with substitution priced as delete+insert."""
    m, n = len(a), len(b)
    prev = list(range(n + 1))
    for i in range(1, m + 1):
        cur = [i]
        for j in range(1, n + 1):
            sub = prev[j - 1] + (0 if a[i - 1] == b[j - 1] else 2)
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, sub))
        prev = cur
    return prev[n]


def _ratio_reference(a: str, b: str) -> int:
    total = len(a) + len(b)
    if total == 0:
        return 100
    import math

    return int(math.floor(100.0 * (total - _indel_distance_dp(a, b)) / total + 0.5))


def _random_word(rng: random.Random, alphabet: str = "abcdef", lo: int = 0, hi: int = 12) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(lo, hi)))


# ---------------------------------------------------------------------------
# normalize_text


def test_normalize_examples():
    assert normalize_text("") == ""
    assert normalize_text("Dhaka—Chittagong  Hwy!") == "dhaka chittagong hwy"
    assert normalize_text("ঢাকা-চট্টগ্রাম!") == "ঢাকা চট্টগ্রাম"


def test_normalize_keeps_digits_and_collapses_whitespace():
    assert normalize_text("  N1   highway,\tkm 12 ") == "n1 highway km 12"


def test_normalize_is_idempotent():
    rng = random.Random(11)
    samples = [
        "Dhaka—Chittagong  Hwy!",
        "উপজেলা সদর, ঢাকা",
        "R280 @ mile 3",
        "",
        "MIXED বাংলা Text 42",
    ]
    samples += ["".join(rng.choice(" aA.!ব1-") for _ in range(30)) for _ in range(50)]
    for s in samples:
        once = normalize_text(s)
        assert normalize_text(once) == once


# ---------------------------------------------------------------------------
# indel_ratio


def test_indel_ratio_pinned_values():
    assert indel_ratio("abcd", "abcd") == 100
    assert indel_ratio("abcd", "") == 0
    assert indel_ratio("", "abcd") == 0
    assert indel_ratio("", "") == 100
    assert indel_ratio("abcd", "abce") == 75


def test_indel_ratio_matches_dp_reference():
    rng = random.Random(22)
    for _ in range(500):
        a = _random_word(rng)
        b = _random_word(rng)
        assert indel_ratio(a, b) == _ratio_reference(a, b)


def test_indel_ratio_symmetric_and_bounded():
    rng = random.Random(33)
    for _ in range(300):
        a = _random_word(rng)
        b = _random_word(rng)
        r = indel_ratio(a, b)
        assert 0 <= r <= 100
        assert r == indel_ratio(b, a)
    assert indel_ratio("xyz", "xyz") == 100


# ---------------------------------------------------------------------------
# token_sort_similarity


def test_token_sort_ignores_word_order():
    assert token_sort_similarity("new market dhaka", "dhaka new market") == 100
    assert token_sort_similarity("", "") == 100


def test_token_sort_equals_indel_on_sorted_join():
    assert token_sort_similarity("sylhet highway", "sylhet road") == indel_ratio(
        "highway sylhet", "road sylhet"
    )


def test_token_sort_permutation_invariant():
    rng = random.Random(44)
    for _ in range(100):
        tokens = [_random_word(rng, lo=1, hi=5) for _ in range(rng.randint(1, 5))]
        other = [_random_word(rng, lo=1, hi=5) for _ in range(rng.randint(1, 5))]
        base = token_sort_similarity(" ".join(tokens), " ".join(other))
        rng.shuffle(tokens)
        rng.shuffle(other)
        assert token_sort_similarity(" ".join(tokens), " ".join(other)) == base


# ---------------------------------------------------------------------------
# partial_similarity


def test_partial_substring_scores_100():
    assert partial_similarity("bahadurpur", "bahadurpur jame masjid") == 100
    assert partial_similarity("abc", "abc") == 100


def test_partial_empty_conventions():
    assert partial_similarity("", "") == 100
    assert partial_similarity("", "abc") == 0


def test_partial_matches_window_sweep_oracle():
    rng = random.Random(55)
    for _ in range(300):
        a = _random_word(rng, hi=8)
        b = _random_word(rng, hi=16)
        s, l = (a, b) if len(a) <= len(b) else (b, a)
        if s:
            expected = max(
                _ratio_reference(s, l[i : i + len(s)]) for i in range(len(l) - len(s) + 1)
            )
        else:
            expected = 100 if not l else 0
        assert partial_similarity(a, b) == expected
        assert partial_similarity(b, a) == partial_similarity(a, b)


def test_partial_specific_window_case():
    # Best window of "xxabcexx" against "abcd" is "abce": distance 2 of 8.
    assert partial_similarity("abcd", "xxabcexx") == 75


# ---------------------------------------------------------------------------
# hybrid_score


def test_hybrid_identical_and_empty():
    assert hybrid_score("Bahadurpur Jame Masjid", "Bahadurpur Jame Masjid") == 100
    assert hybrid_score("bahadurpur", "") == 0


def test_hybrid_mean_rounds_half_up():
    rng = random.Random(66)
    for _ in range(200):
        place = _random_word(rng, alphabet="abc ", lo=1, hi=12)
        line = _random_word(rng, alphabet="abc ", lo=1, hi=20)
        p = normalize_text(place)
        q = normalize_text(line)
        ts = token_sort_similarity(p, q)
        ps = partial_similarity(p, q)
        expected = (ts + ps + 1) // 2
        assert hybrid_score(place, line) == expected


def test_hybrid_normalizes_internally():
    assert hybrid_score("DHAKA!", "dhaka") == 100


# ---------------------------------------------------------------------------
# alias map


def test_alias_bundled_entries():
    amap = load_alias_map()
    assert alias_normalize("Chattogram", amap) == "chittagong"
    assert alias_normalize("Jashore", amap) == "jessore"
    assert alias_normalize("dhaka", amap) == "dhaka"


def test_alias_token_level_replacement():
    amap = AliasMap.from_records([{"variant": "chattogram", "canonical": "chittagong"}])
    assert amap.apply("Dhaka-Chattogram Highway") == "dhaka chittagong highway"


def test_alias_full_string_beats_tokens():
    amap = AliasMap.from_records(
        [
            {"variant": "st martin", "canonical": "saint martin island"},
            {"variant": "st", "canonical": "street"},
        ]
    )
    # Whole-string match wins; the token rule would have given "street martin".
    assert amap.apply("St Martin") == "saint martin island"
    assert amap.apply("st corner") == "street corner"


def test_alias_idempotent():
    amap = load_alias_map()
    for name in ["Chattogram", "Jashore", "CTG", "random place", "বাংলা নাম"]:
        once = alias_normalize(name, amap)
        assert alias_normalize(once, amap) == once


def test_alias_rejects_duplicate_variant():
    with pytest.raises(SchemaError):
        AliasMap.from_records(
            [
                {"variant": "x", "canonical": "y"},
                {"variant": "X", "canonical": "z"},
            ]
        )


def test_alias_rejects_non_fixed_point_canonical():
    with pytest.raises(SchemaError):
        AliasMap.from_records(
            [
                {"variant": "a", "canonical": "b"},
                {"variant": "b", "canonical": "c"},
            ]
        )


# ---------------------------------------------------------------------------
# road gazetteer


def test_road_lookup_fixture_match():
    gaz = RoadGazetteer.from_records(
        [{"code": "N1", "names": ["dhaka chattogram highway"]}]
    )
    amap = load_alias_map()
    query = alias_normalize("Dhaka-Chittagong Highway", amap)
    # Canonicalizing both sides is what lifts the score over the threshold;
    # without the alias map the best score is 83.
    assert road_lookup([query], gaz, amap) == ["N1"]
    assert road_lookup([query], gaz) == []


def test_road_lookup_below_threshold():
    gaz = RoadGazetteer.from_records(
        [{"code": "N1", "names": ["dhaka chattogram highway"]}]
    )
    assert road_lookup(["random bazaar"], gaz) == []
    assert road_lookup([], gaz) == []


def test_road_lookup_orders_by_score_then_code():
    gaz = RoadGazetteer.from_records(
        [
            {"code": "B2", "names": ["meghna bridge road"]},
            {"code": "A1", "names": ["meghna bridge road"]},
            {"code": "C3", "names": ["meghna bridge"]},
        ]
    )
    out = road_lookup(["meghna bridge road"], gaz)
    assert out[:2] == ["A1", "B2"]
    for code in out:
        assert code in {"A1", "B2", "C3"}


def test_road_lookup_dedupes_codes():
    gaz = RoadGazetteer.from_records(
        [{"code": "N1", "names": ["dhaka chattogram highway", "n1 highway"]}]
    )
    out = road_lookup(["dhaka chattogram highway", "dhaka chattogram highway"], gaz)
    assert out == ["N1"]


def test_bundled_gazetteer_loads():
    gaz = load_road_gazetteer()
    codes = [code for code, _ in gaz.entries]
    assert len(codes) == len(set(codes))
    assert all(names for _, names in gaz.entries)


def test_gazetteer_unavailable_on_missing_or_corrupt(tmp_path):
    with pytest.raises(GazetteerUnavailable):
        load_road_gazetteer(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(GazetteerUnavailable):
        load_road_gazetteer(bad)
    wrong_shape = tmp_path / "shape.json"
    wrong_shape.write_text('{"code": "N1"}', encoding="utf-8")
    with pytest.raises(GazetteerUnavailable):
        load_road_gazetteer(wrong_shape)


def test_gazetteer_schema_validation():
    with pytest.raises(SchemaError):
        RoadGazetteer.from_records([{"code": "N1", "names": []}])
    with pytest.raises(SchemaError):
        RoadGazetteer.from_records(
            [{"code": "N1", "names": ["a"]}, {"code": "N1", "names": ["b"]}]
        )
