"""Text normalization, indel similarity ratios, alias map, and road gazetteer.

These ratios sit beneath both the OCR acceptance gate and suggestion
scoring, so they are integer-valued and deterministic: 100*(1 - D/(|a|+|b|))
rounded half-up, with D the insertion/deletion edit distance (a substitution
costs 2).
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .errors import GazetteerUnavailable, SchemaError

# Lowercasing is applied to Latin-script letters only; Bangla has no case
# and must pass through untouched.
_LATIN_LOWER = {
    cp: ord(chr(cp).lower()) for cp in range(0x250) if chr(cp).isupper() and len(chr(cp).lower()) == 1
}

_WS_RUN = re.compile(r"\s+")


def normalize_text(s: str) -> str:
    """NFC-normalize, drop punctuation, collapse whitespace, lowercase Latin."""
    s = unicodedata.normalize("NFC", s)
    chars = []
    for ch in s:
        cat = unicodedata.category(ch)
        if ch.isspace():
            chars.append(" ")
        elif cat[0] in "LM" or cat == "Nd":
            # Marks (category M) carry Bangla vowel signs and the virama;
            # stripping them would shred conjuncts.
            chars.append(ch)
        else:
            chars.append(" ")
    return _WS_RUN.sub(" ", "".join(chars)).strip().translate(_LATIN_LOWER)


# ---------------------------------------------------------------------------
# similarity ratios


def _lcs_len(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0]
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def indel_ratio(a: str, b: str) -> int:
    """Similarity in 0..100 from insertion/deletion distance, half-up rounded."""
    total = len(a) + len(b)
    if total == 0:
        return 100
    dist = total - 2 * _lcs_len(a, b)
    # round-half-up of 100*(total-dist)/total using integers only
    p = 100 * (total - dist)
    return (2 * p + total) // (2 * total)


def token_sort_similarity(a: str, b: str) -> int:
    """indel_ratio after sorting each side's tokens by code point."""
    ja = " ".join(sorted(a.split()))
    jb = " ".join(sorted(b.split()))
    return indel_ratio(ja, jb)


def partial_similarity(a: str, b: str) -> int:
    """Best indel_ratio of the shorter string against every equal-length window of the longer."""
    s, l = (a, b) if len(a) <= len(b) else (b, a)
    if len(s) == 0:
        return 100 if len(l) == 0 else 0
    if len(s) == len(l):
        return indel_ratio(s, l)
    best = 0
    for start in range(len(l) - len(s) + 1):
        best = max(best, indel_ratio(s, l[start : start + len(s)]))
        if best == 100:
            break
    return best


def hybrid_score(place: str, line: str) -> int:
    """Mean of token-sort and partial ratios on normalized inputs, half-up."""
    p = normalize_text(place)
    q = normalize_text(line)
    return (token_sort_similarity(p, q) + partial_similarity(p, q) + 1) // 2


# ---------------------------------------------------------------------------
# alias map


@dataclass(frozen=True)
class AliasMap:
    """Ordered variant -> canonical replacements over normalized text."""

    entries: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_lookup", dict(self.entries))

    @classmethod
    def from_records(cls, records: list[dict]) -> "AliasMap":
        entries = []
        seen = set()
        for i, rec in enumerate(records):
            try:
                variant = normalize_text(rec["variant"])
                canonical = normalize_text(rec["canonical"])
            except (KeyError, TypeError):
                raise SchemaError(f"alias record {i} must have 'variant' and 'canonical'")
            if not variant:
                raise SchemaError(f"alias record {i} has an empty variant")
            if variant in seen:
                raise SchemaError(f"duplicate alias variant {variant!r}")
            seen.add(variant)
            entries.append((variant, canonical))
        amap = cls(entries=tuple(entries))
        for _, canonical in entries:
            if amap.apply(canonical) != canonical:
                raise SchemaError(f"canonical {canonical!r} is not a fixed point of the map")
        return amap

    def apply(self, name: str) -> str:
        text = normalize_text(name)
        lookup: dict[str, str] = self._lookup  # type: ignore[attr-defined]
        if text in lookup:
            return lookup[text]
        tokens = [lookup.get(tok, tok) for tok in text.split()]
        return " ".join(tokens)


def alias_normalize(name: str, amap: AliasMap) -> str:
    return amap.apply(name)


# ---------------------------------------------------------------------------
# road gazetteer


@dataclass(frozen=True)
class RoadGazetteer:
    """Road-code entries with one or more names per code, both scripts allowed."""

    entries: tuple[tuple[str, tuple[str, ...]], ...]

    @classmethod
    def from_records(cls, records: list[dict]) -> "RoadGazetteer":
        entries = []
        codes = set()
        for i, rec in enumerate(records):
            try:
                code = str(rec["code"])
                names = tuple(normalize_text(n) for n in rec["names"])
            except (KeyError, TypeError):
                raise SchemaError(f"road record {i} must have 'code' and 'names'")
            if code in codes:
                raise SchemaError(f"duplicate road code {code!r}")
            if not names or any(not n for n in names):
                raise SchemaError(f"road {code!r} needs at least one non-empty name")
            codes.add(code)
            entries.append((code, names))
        return cls(entries=tuple(entries))


ROAD_MATCH_THRESHOLD = 85


def road_lookup(
    place_names: list[str], gaz: RoadGazetteer, amap: AliasMap | None = None
) -> list[str]:
    """Road codes whose best name scores >= 85 against any place name.

    When an alias map is supplied both the queries and the gazetteer names
    are canonicalized through it first, so alternate spellings of the same
    road land on the same side of the threshold. Results are deduplicated
    and ordered by descending best score then code.
    """
    canon = (lambda s: amap.apply(s)) if amap is not None else (lambda s: s)
    queries = [canon(p) for p in place_names]
    best: dict[str, int] = {}
    for place in queries:
        for code, names in gaz.entries:
            score = max(hybrid_score(place, canon(n)) for n in names)
            if score >= ROAD_MATCH_THRESHOLD and score > best.get(code, -1):
                best[code] = score
    return sorted(best, key=lambda c: (-best[c], c))


# ---------------------------------------------------------------------------
# bundled data

_DATA_DIR = Path(__file__).parent / "data"


def _load_json(path: str | Path, err: str) -> list:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise GazetteerUnavailable(f"{err}: {exc}") from exc
    if not isinstance(data, list):
        raise GazetteerUnavailable(f"{err}: expected a list of records")
    return data


def load_alias_map(path: str | Path | None = None) -> AliasMap:
    path = Path(path) if path is not None else _DATA_DIR / "aliases.json"
    try:
        return AliasMap.from_records(_load_json(path, f"alias map {path}"))
    except SchemaError as exc:
        raise GazetteerUnavailable(f"alias map {path}: {exc}") from exc


def load_road_gazetteer(path: str | Path | None = None) -> RoadGazetteer:
    path = Path(path) if path is not None else _DATA_DIR / "bd_roads.json"
    try:
        return RoadGazetteer.from_records(_load_json(path, f"road gazetteer {path}"))
    except SchemaError as exc:
        raise GazetteerUnavailable(f"road gazetteer {path}: {exc}") from exc
