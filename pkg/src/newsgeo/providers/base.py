"""Provider contracts: extraction, reranking, verification, and map sessions.

Every piece of external intelligence sits behind one of these interfaces so
the pipeline runs unmodified against the live adapters or the sim mocks.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

from ..errors import MalformedRerank, MalformedVerdict, NoCoordinatesInUrl, OutOfRange
from ..geo import GeoPoint

log = logging.getLogger(__name__)

MAX_SUGGESTIONS = 8

VIEWPORT_W = 1920
VIEWPORT_H = 1080


@dataclass(frozen=True)
class Suggestion:
    """One autocomplete dropdown row."""

    display_text: str
    group_index: int
    rank: int

    def __post_init__(self) -> None:
        if not 0 <= self.rank < MAX_SUGGESTIONS:
            raise ValueError(f"rank {self.rank} outside 0..{MAX_SUGGESTIONS - 1}")


@dataclass(frozen=True)
class VerifierVerdict:
    is_same: bool
    reasoning: str = ""


@dataclass(frozen=True)
class MapLocation:
    center: GeoPoint
    zoom: float


@dataclass(frozen=True)
class ProviderConfig:
    """Endpoints and knobs for live adapters.

    Credentials are referenced by environment-variable name and read only
    at call time; config files never hold secrets.
    """

    model_endpoint: str = ""
    model_name: str = ""
    api_key_env: str = "NEWSGEO_API_KEY"
    webdriver_endpoint: str = ""
    ocr_endpoint: str = ""
    timeout_s: float = 60.0
    retries: int = 2
    map_settle_s: float = 1.0
    map_ready_cap_s: float = 8.0

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")


# ---------------------------------------------------------------------------
# interfaces


@runtime_checkable
class CueExtractor(Protocol):
    def extract(self, article_text: str) -> str:
        """Return tagged raw output for cue-model parsing."""
        ...


@runtime_checkable
class Reranker(Protocol):
    def rerank(self, article_text: str, groups: list[list[Suggestion]]) -> list[Suggestion]:
        """Pick exactly one suggestion per non-empty group, in one provider call."""
        ...


@runtime_checkable
class Verifier(Protocol):
    def verify(
        self, article_text: str, screenshot: bytes, ocr_text: str, road_codes: list[str]
    ) -> VerifierVerdict:
        ...


class MapSession(Protocol):
    """Stateful map viewport owned by exactly one in-flight article."""

    def autocomplete(self, query: str) -> list[Suggestion]: ...

    def select(self, suggestion: Suggestion) -> None: ...

    def goto(self, point: GeoPoint, zoom: float) -> None: ...

    def screenshot(self) -> bytes: ...

    def current_url(self) -> str: ...

    def close(self) -> None: ...


@dataclass
class ProviderSet:
    """Concrete providers wired for one article run."""

    extractor: CueExtractor
    reranker: Reranker
    verifier: Verifier
    session: MapSession
    ocr_engine: object
    session_factory: object = None  # optional: () -> MapSession, for crash restart

    def restart_session(self) -> bool:
        if self.session_factory is None:
            return False
        try:
            self.session.close()
        except Exception:  # old session may be wedged; restart anyway
            pass
        self.session = self.session_factory()
        return True


# ---------------------------------------------------------------------------
# reply parsing

_URL_AT = re.compile(r"@(-?\d+(?:\.\d+)?),(-?\d+(?:\.\d+)?),(\d+(?:\.\d+)?)z")
_IS_SAME = re.compile(r"<isSame>\s*(Yes|No)\s*</isSame>", re.IGNORECASE)
_BEST = re.compile(r"<best_(\d+)>\s*(\d+)\s*</best_\1>")


def parse_map_url(url: str) -> MapLocation:
    """Extract the "@lat,lon,Zz" viewport from a map URL."""
    if not url:
        raise NoCoordinatesInUrl("empty url")
    m = _URL_AT.search(url)
    if not m:
        raise NoCoordinatesInUrl(f"no @lat,lon,zoom segment in {url!r}")
    try:
        center = GeoPoint(float(m.group(1)), float(m.group(2)))
    except OutOfRange as exc:
        raise NoCoordinatesInUrl(f"coordinates out of bounds in {url!r}") from exc
    return MapLocation(center=center, zoom=float(m.group(3)))


def parse_verifier_reply(raw: str) -> VerifierVerdict:
    """Strict <isSame> parse; anything else is MalformedVerdict."""
    m = _IS_SAME.search(raw)
    if not m:
        raise MalformedVerdict(f"no <isSame> tag in reply of length {len(raw)}")
    reasoning = _IS_SAME.sub("", raw).strip()
    return VerifierVerdict(is_same=m.group(1).lower() == "yes", reasoning=reasoning)


def parse_rerank_reply(raw: str, groups: list[list[Suggestion]]) -> list[Suggestion]:
    """Parse <best_i>rank</best_i> tags into one choice per group."""
    picks = {int(m.group(1)): int(m.group(2)) for m in _BEST.finditer(raw)}
    chosen: list[Suggestion] = []
    for i, group in enumerate(groups):
        if i not in picks:
            raise MalformedRerank(f"missing <best_{i}> tag")
        rank = picks[i]
        matches = [s for s in group if s.rank == rank]
        if not matches:
            raise MalformedRerank(f"<best_{i}> names rank {rank} not present in group")
        chosen.append(matches[0])
    return chosen


def choose_with_fallback(raw: str, groups: list[list[Suggestion]]) -> list[Suggestion]:
    """Parse a rerank reply, degrading to each group's rank-0 row on garbage."""
    try:
        return parse_rerank_reply(raw, groups)
    except MalformedRerank as exc:
        log.warning("malformed rerank reply (%s); falling back to rank 0", exc)
        return [min(g, key=lambda s: s.rank) for g in groups]
