"""Location-cue schema, vagueness triage, extractor-output parsing, and pivot choice.

The extraction intelligence lives behind a provider; this module owns the
wire format of its replies and everything decidable from the parsed cues.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum

from .errors import MalformedExtraction
from .fuzz import AliasMap, normalize_text

# Schema field slots, in serialization order. "union_" dodges the builtin.
SCHEMA_FIELDS = (
    "road_name",
    "road_type",
    "landmark",
    "union_",
    "zilla",
    "upazilla",
    "thana",
    "district",
)

SUG_STRING_BUDGET = 10

# Generic autocomplete chrome that must never be treated as a place.
SUGGESTION_BLOCKLIST = ("add a missing", "search for", "your location")


class VaguenessClass(Enum):
    NOT_VAGUE = "NotVague"
    SLIGHTLY_VAGUE = "SlightlyVague"
    EXTREMELY_VAGUE = "ExtremelyVague"


@dataclass(frozen=True)
class LocationCues:
    """Everything extracted from one article's text."""

    road_name: str = ""
    road_type: str = ""
    landmark: str = ""
    union_: str = ""
    zilla: str = ""
    upazilla: str = ""
    thana: str = ""
    district: str = ""
    sug_strings: tuple[str, ...] = ()
    place_list: tuple[tuple[str, str], ...] = ()  # (bn, en) pairs
    road_codes: tuple[str, ...] = ()

    def place_names(self) -> list[str]:
        """Every distinct non-empty place string, for gate matching."""
        names: list[str] = []
        for f in SCHEMA_FIELDS:
            if f == "road_type":
                continue
            value = getattr(self, f)
            if value:
                names.append(value)
        for bn, en in self.place_list:
            names.extend(v for v in (bn, en) if v)
        names.extend(self.sug_strings)
        seen: set[str] = set()
        out = []
        for n in names:
            if n not in seen:
                seen.add(n)
                out.append(n)
        return out


def assess_vagueness(cues: LocationCues) -> VaguenessClass:
    """Triage on the two strong cues: landmark and road name."""
    has_landmark = bool(normalize_text(cues.landmark))
    has_road = bool(normalize_text(cues.road_name))
    if has_landmark and has_road:
        return VaguenessClass.NOT_VAGUE
    if has_landmark or has_road:
        return VaguenessClass.SLIGHTLY_VAGUE
    return VaguenessClass.EXTREMELY_VAGUE


def pivot_unit(cues: LocationCues) -> str | None:
    """Most specific non-empty administrative unit, or None."""
    for f in ("union_", "thana", "upazilla", "zilla", "district"):
        value = getattr(cues, f)
        if normalize_text(value):
            return value
    return None


def filter_suggestions(suggestions: list[str]) -> list[str]:
    """Drop autocomplete chrome and blank entries, keeping order."""
    out = []
    for s in suggestions:
        if not s.strip():
            continue
        low = s.lower()
        if any(phrase in low for phrase in SUGGESTION_BLOCKLIST):
            continue
        out.append(s)
    return out


# ---------------------------------------------------------------------------
# extractor wire format

_SUG_RE = re.compile(r"<sug_str>(.*?)</sug_str>", re.DOTALL)
_PLACE_BLOCK_RE = re.compile(r"<place_list>(.*?)</place_list>", re.DOTALL)
# [ \t]* rather than \s* so an empty value cannot swallow the next line.
_FIELD_RE = re.compile(
    r"^[ \t]*(road_name|road_type|landmark|union_?|zilla|upazilla|thana|district)"
    r"[ \t]*:[ \t]*(.*?)[ \t]*$",
    re.MULTILINE,
)


def parse_extractor_output(
    raw: str, amap: AliasMap | None = None, budget: int = SUG_STRING_BUDGET
) -> LocationCues:
    """Parse a provider reply into LocationCues.

    Raises MalformedExtraction when neither search strings nor schema
    fields can be recovered; the caller decides on retries.
    """
    canon = amap.apply if amap is not None else normalize_text

    fields: dict[str, str] = {}
    for m in _FIELD_RE.finditer(raw):
        name = m.group(1)
        if name == "union":
            name = "union_"
        value = m.group(2)
        # road_type is descriptive, not a place; plain normalization only.
        fields[name] = normalize_text(value) if name == "road_type" else canon(value)

    sugs: list[str] = []
    for m in _SUG_RE.finditer(raw):
        s = canon(m.group(1))
        if s and s not in sugs:
            sugs.append(s)
        if len(sugs) >= budget:
            break

    places: list[tuple[str, str]] = []
    block = _PLACE_BLOCK_RE.search(raw)
    if block:
        for line in block.group(1).splitlines():
            if "||" not in line:
                continue
            bn, _, en = line.partition("||")
            pair = (canon(bn), canon(en))
            if pair != ("", "") and pair not in places:
                places.append(pair)

    if not sugs and not any(fields.values()):
        raise MalformedExtraction("no search strings and no schema fields in extractor reply")

    return LocationCues(
        **{f: fields.get(f, "") for f in SCHEMA_FIELDS},
        sug_strings=tuple(sugs),
        place_list=tuple(places),
    )


def serialize_cues(cues: LocationCues) -> str:
    """Inverse of parse_extractor_output, for traces and CLI output."""
    lines = [f"{f}: {getattr(cues, f)}" for f in SCHEMA_FIELDS]
    lines += [f"<sug_str>{s}</sug_str>" for s in cues.sug_strings]
    if cues.place_list:
        lines.append("<place_list>")
        lines += [f"{bn} || {en}" for bn, en in cues.place_list]
        lines.append("</place_list>")
    return "\n".join(lines)


def with_road_codes(cues: LocationCues, codes: list[str]) -> LocationCues:
    return replace(cues, road_codes=tuple(codes))
