"""Cue schema, vagueness triage, extractor parsing, and pivot selection."""

from __future__ import annotations

import pytest

from newsgeo.cues import (
    LocationCues,
    SUGGESTION_BLOCKLIST,
    VaguenessClass,
    assess_vagueness,
    filter_suggestions,
    parse_extractor_output,
    pivot_unit,
    serialize_cues,
    with_road_codes,
)
from newsgeo.errors import MalformedExtraction
from newsgeo.fuzz import load_alias_map

WELL_FORMED = """\
Here are the extracted location details.

road_name: Sunamganj-Sylhet Road
road_type: highway
landmark: Bahadurpur Jame Masjid
union: Paschim Pagla
district: Sunamganj

<sug_str>Bahadurpur Jame Masjid</sug_str>
<sug_str>Bahadurpur Bazar, Sunamganj</sug_str>
<sug_str>Sunamganj Sylhet Road Bahadurpur</sug_str>

<place_list>
বাহাদুরপুর || Bahadurpur
সুনামগঞ্জ || Sunamganj
</place_list>
"""


# ---------------------------------------------------------------------------
# vagueness


def test_vagueness_both_cues_present():
    cues = LocationCues(landmark="Bahadurpur", road_name="Sunamganj-Sylhet Road")
    assert assess_vagueness(cues) is VaguenessClass.NOT_VAGUE


def test_vagueness_both_missing():
    assert assess_vagueness(LocationCues()) is VaguenessClass.EXTREMELY_VAGUE


def test_vagueness_one_missing():
    assert assess_vagueness(LocationCues(road_name="N1")) is VaguenessClass.SLIGHTLY_VAGUE
    assert assess_vagueness(LocationCues(landmark="X Bazar")) is VaguenessClass.SLIGHTLY_VAGUE


def test_vagueness_whitespace_counts_as_absent():
    cues = LocationCues(landmark="   ", road_name="!!")
    assert assess_vagueness(cues) is VaguenessClass.EXTREMELY_VAGUE


def test_vagueness_ignores_other_fields():
    a = LocationCues(landmark="L", road_name="R", district="D", thana="T")
    b = LocationCues(landmark="L", road_name="R")
    assert assess_vagueness(a) is assess_vagueness(b)


# ---------------------------------------------------------------------------
# pivot selection


def test_pivot_most_specific_first():
    cues = LocationCues(upazilla="Sadar", district="Sunamganj")
    assert pivot_unit(cues) == "Sadar"
    cues = LocationCues(union_="X", district="Y")
    assert pivot_unit(cues) == "X"


def test_pivot_thana_before_upazilla():
    cues = LocationCues(thana="T", upazilla="U", zilla="Z", district="D")
    assert pivot_unit(cues) == "T"


def test_pivot_none_when_empty():
    assert pivot_unit(LocationCues()) is None
    assert pivot_unit(LocationCues(landmark="only a landmark")) is None


# ---------------------------------------------------------------------------
# suggestion filtering


def test_filter_blocklist_and_blanks():
    got = filter_suggestions(
        ["Bahadurpur Bazar", "Add a missing business or landmark", "  ", "X"]
    )
    assert got == ["Bahadurpur Bazar", "X"]
    assert filter_suggestions([]) == []


def test_filter_case_insensitive():
    for phrase in SUGGESTION_BLOCKLIST:
        assert filter_suggestions([phrase.upper() + " something"]) == []


def test_filter_is_subsequence():
    src = ["a", "search for b", "c", "", "Your Location", "d"]
    out = filter_suggestions(src)
    assert out == ["a", "c", "d"]
    it = iter(src)
    assert all(any(x == y for y in it) for x in out)


# ---------------------------------------------------------------------------
# extractor parsing


def test_parse_well_formed():
    cues = parse_extractor_output(WELL_FORMED, amap=load_alias_map())
    assert len(cues.sug_strings) == 3
    assert cues.road_name == "sunamganj sylhet road"
    assert cues.road_type == "highway"
    assert cues.landmark == "bahadurpur jame masjid"
    assert cues.union_ == "paschim pagla"
    assert cues.district == "sunamganj"
    assert cues.zilla == ""
    assert ("বাহাদুরপুর", "bahadurpur") in cues.place_list
    assert assess_vagueness(cues) is VaguenessClass.NOT_VAGUE


def test_parse_applies_alias_map():
    raw = "district: Chattogram\n<sug_str>Jashore Road</sug_str>"
    cues = parse_extractor_output(raw, amap=load_alias_map())
    assert cues.district == "chittagong"
    assert cues.sug_strings == ("jessore road",)


def test_parse_no_tags_raises():
    with pytest.raises(MalformedExtraction):
        parse_extractor_output("no tags at all")


def test_parse_fields_alone_suffice():
    cues = parse_extractor_output("landmark: X Bazar")
    assert cues.landmark == "x bazar"
    assert cues.sug_strings == ()


def test_parse_dedupes_sug_strings():
    raw = "<sug_str>X Bazar</sug_str><sug_str>X Bazar</sug_str><sug_str>Y</sug_str>"
    cues = parse_extractor_output(raw)
    assert cues.sug_strings == ("x bazar", "y")


def test_parse_caps_sug_strings_at_budget():
    raw = "".join(f"<sug_str>place {i}</sug_str>" for i in range(25))
    cues = parse_extractor_output(raw)
    assert len(cues.sug_strings) == 10


def test_parse_serialize_round_trip():
    amap = load_alias_map()
    cues = parse_extractor_output(WELL_FORMED, amap=amap)
    again = parse_extractor_output(serialize_cues(cues), amap=amap)
    assert again == cues


def test_round_trip_preserves_road_codes_separately():
    cues = with_road_codes(LocationCues(landmark="x"), ["N1", "R280"])
    assert cues.road_codes == ("N1", "R280")
    assert cues.landmark == "x"


def test_place_names_collects_distinct_values():
    cues = parse_extractor_output(WELL_FORMED, amap=load_alias_map())
    names = cues.place_names()
    assert "bahadurpur jame masjid" in names
    assert "sunamganj" in names
    assert "highway" not in names  # road_type is not a place
    assert len(names) == len(set(names))
