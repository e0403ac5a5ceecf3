"""Deterministic provider doubles backed by the synthetic world.

Each mock honors the same wire conventions as a live provider: the
extractor emits the tagged cue format, the reranker and verifier compose
tagged replies and run them through the real reply parsers, and the OCR
engine returns the sidecar's line-dict shape. Nothing here inspects
pipeline internals; the only privileged knowledge is world geometry.
"""

from __future__ import annotations

import random
import re
import string

from ..errors import OcrEngineFailure, SessionCrashed
from ..fuzz import hybrid_score
from ..geo import GeoPoint, haversine, offset_point
from ..providers.base import (
    Suggestion,
    VerifierVerdict,
    choose_with_fallback,
    parse_verifier_reply,
)
from .render import M_PER_PX, VIEWPORT, render_png, view_labels
from .world import ANCHOR, SimWorld, compose_extractor_reply

AUTOCOMPLETE_FLOOR = 55
AUTOCOMPLETE_LIMIT = 8
CHROME_ROW = "Add a missing place"

# Templates in world.py are inverted from text alone; most specific first,
# because the looser patterns also match the fuller sentences.
_RE_FULL = re.compile(
    r"on the (?P<road>.+?) near (?P<landmark>.+?), "
    r"in (?P<union>.+?) union of (?P<upazilla>.+?) upazilla under (?P<district>.+?) district"
)
_RE_ROAD_ONLY = re.compile(
    r"on the (?P<road>.+?), "
    r"in (?P<union>.+?) union of (?P<upazilla>.+?) upazilla under (?P<district>.+?) district"
)
_RE_LANDMARK_ONLY = re.compile(
    r"near (?P<landmark>.+?), "
    r"in (?P<union>.+?) union of (?P<upazilla>.+?) upazilla under (?P<district>.+?) district"
)
_RE_DISTRICT_ONLY = re.compile(r"somewhere in (?P<district>.+?) district")


class MockCueExtractor:
    """Inverts the article templates from the text alone."""

    def __init__(self, world: SimWorld | None = None):
        self.world = world
        self.calls = 0

    def extract(self, article_text: str) -> str:
        self.calls += 1
        for pattern in (_RE_FULL, _RE_ROAD_ONLY, _RE_LANDMARK_ONLY):
            m = pattern.search(article_text)
            if m:
                g = m.groupdict()
                return compose_extractor_reply(
                    g.get("road", ""),
                    g.get("landmark", ""),
                    g["union"],
                    g["upazilla"],
                    g["district"],
                    self.world,
                )
        m = _RE_DISTRICT_ONLY.search(article_text)
        if m:
            return compose_extractor_reply("", "", "", "", m.group("district"), self.world)
        return "I could not find any location information in this article."


class MockMapSession:
    """Autocomplete index and viewport over the synthetic world.

    exclude_names models places missing from the provider's index: they
    exist on the map (and render) but never appear in the dropdown.
    """

    def __init__(
        self,
        world: SimWorld,
        exclude_names: frozenset[str] | set[str] = frozenset(),
        m_per_px: float = M_PER_PX,
        viewport: tuple[int, int] = VIEWPORT,
        crash_at_screenshot: int | None = None,
    ):
        self.world = world
        self.exclude = set(exclude_names)
        self.m_per_px = m_per_px
        self.viewport = viewport
        self.crash_at_screenshot = crash_at_screenshot
        self.center = offset_point(ANCHOR, 100.0, 100.0)
        self.zoom = 12.0
        self.closed = False
        self.screenshot_count = 0
        self.select_count = 0

    def autocomplete(self, query: str) -> list[Suggestion]:
        scored: list[tuple[int, str]] = []
        for place in self.world.places:
            if place.name_en in self.exclude:
                continue
            s = hybrid_score(query, place.name_en)
            if s >= AUTOCOMPLETE_FLOOR:
                scored.append((-s, place.name_en))
        scored.sort()
        rows = [name for _neg, name in scored[: AUTOCOMPLETE_LIMIT - 1]]
        rows.append(CHROME_ROW)
        return [Suggestion(display_text=t, group_index=0, rank=i) for i, t in enumerate(rows)]

    def select(self, suggestion: Suggestion) -> None:
        place = self.world.by_name.get(suggestion.display_text)
        if place is None:
            raise ValueError(f"cannot select unknown row {suggestion.display_text!r}")
        self.select_count += 1
        self.center = place.location
        self.zoom = 15.0

    def goto(self, point: GeoPoint, zoom: float) -> None:
        self.center = point
        self.zoom = zoom

    def screenshot(self) -> bytes:
        if (
            self.crash_at_screenshot is not None
            and self.screenshot_count + 1 >= self.crash_at_screenshot
        ):
            raise SessionCrashed("viewport process died")
        self.screenshot_count += 1
        return render_png(self.world, self.center, self.viewport, self.m_per_px)

    def current_url(self) -> str:
        return f"https://maps.sim/@{self.center.lat:.6f},{self.center.lon:.6f},{self.zoom:g}z"

    def close(self) -> None:
        self.closed = True


class MockOcrEngine:
    """Reads labels from world geometry instead of decoding pixels.

    Requires the chunk context; it keeps a label when at least half its
    box area lies inside the chunk, clips the box to the chunk, and
    reports it in the engine's upscaled local coordinates. Character
    substitution noise is keyed per (seed, view center, chunk, text) so
    recognition is order-independent.
    """

    def __init__(
        self,
        world: SimWorld,
        session: MockMapSession,
        noise_rate: float = 0.05,
        noise_seed: int = 0,
    ):
        self.world = world
        self.session = session
        self.noise_rate = noise_rate
        self.noise_seed = noise_seed
        self.calls = 0
        self._label_cache: tuple[tuple[float, float], list] | None = None

    def _noisy(self, text: str, rng: random.Random) -> str:
        if self.noise_rate <= 0:
            return text
        out = []
        for ch in text:
            if ch.isalpha() and rng.random() < self.noise_rate:
                pool = string.ascii_uppercase if ch.isupper() else string.ascii_lowercase
                out.append(rng.choice(pool))
            else:
                out.append(ch)
        return "".join(out)

    def recognize(self, png_bytes: bytes, languages=("bn", "en"), context=None) -> list[dict]:
        self.calls += 1
        if context is None:
            raise OcrEngineFailure("sim engine needs chunk context")
        chunk, scale = context.chunk, context.scale
        center = self.session.center
        key = (center.lat, center.lon)
        if self._label_cache is None or self._label_cache[0] != key:
            labels = view_labels(self.world, center, self.session.viewport, self.session.m_per_px)
            self._label_cache = (key, labels)
        out = []
        for label in self._label_cache[1]:
            x, y, w, h = label.bbox
            ix0, iy0 = max(x, chunk.x), max(y, chunk.y)
            ix1, iy1 = min(x + w, chunk.x + chunk.w), min(y + h, chunk.y + chunk.h)
            iw, ih = ix1 - ix0, iy1 - iy0
            if iw <= 0 or ih <= 0 or 2 * iw * ih < w * h:
                continue
            rng = random.Random(
                f"ocr:{self.noise_seed}:{center.lat:.6f}:{center.lon:.6f}:"
                f"{chunk.x}:{chunk.y}:{label.text}"
            )
            out.append(
                {
                    "text": self._noisy(label.text, rng),
                    "bbox": (
                        (ix0 - chunk.x) * scale,
                        (iy0 - chunk.y) * scale,
                        iw * scale,
                        ih * scale,
                    ),
                    "confidence": round(0.86 + 0.13 * rng.random(), 3),
                }
            )
        return out


class MockVerifier:
    """Says Yes iff the viewport is close to the truth and a cue is legible.

    Closeness is measured against the session's current center (what a
    vision model would judge from the screenshot); legibility means some
    required label scores >= threshold against some OCR line. The verdict
    goes through the strict reply parser so the tag convention is
    exercised on every call.
    """

    def __init__(
        self,
        truth: GeoPoint,
        required_labels: list[str],
        session: MockMapSession,
        radius_km: float = 0.75,
        threshold: int = 75,
    ):
        if not required_labels:
            raise ValueError("required_labels must be non-empty")
        self.truth = truth
        self.required_labels = list(required_labels)
        self.session = session
        self.radius_km = radius_km
        self.threshold = threshold
        self.calls = 0

    def verify(
        self, article_text: str, screenshot: bytes, ocr_text: str, road_codes: list[str]
    ) -> VerifierVerdict:
        self.calls += 1
        dist = haversine(self.truth, self.session.center)
        lines = [ln for ln in ocr_text.splitlines() if ln.strip()]
        cue_seen = any(
            hybrid_score(lbl, ln) >= self.threshold
            for lbl in self.required_labels
            for ln in lines
        )
        yes = dist <= self.radius_km and cue_seen
        raw = (
            f"<isSame>{'Yes' if yes else 'No'}</isSame> "
            f"viewport is {dist:.2f} km out; cue {'legible' if cue_seen else 'not legible'}"
        )
        return parse_verifier_reply(raw)


class MockReranker:
    """Picks the suggestion closest to any cue name, one batch call."""

    def __init__(self, cue_names: list[str]):
        self.cue_names = [n for n in cue_names if n.strip()]
        self.calls = 0

    def rerank(self, article_text: str, groups: list[list[Suggestion]]) -> list[Suggestion]:
        self.calls += 1
        parts = []
        for gi, group in enumerate(groups):
            if not group:
                raise ValueError("empty groups must be dropped before the rerank call")
            best = min(
                group,
                key=lambda s: (
                    -max((hybrid_score(c, s.display_text) for c in self.cue_names), default=0),
                    s.rank,
                ),
            )
            parts.append(f"<best_{gi}>{best.rank}</best_{gi}>")
        return choose_with_fallback("\n".join(parts), groups)


def indexed_session_factory(
    world: SimWorld, exclude_names: frozenset[str] | set[str] = frozenset()
):
    """Factory for crash-restart wiring; new sessions start fresh."""

    def make() -> MockMapSession:
        return MockMapSession(world, exclude_names=frozenset(exclude_names))

    return make


def sim_providers(
    world: SimWorld,
    article,
    noise_seed: int = 0,
    noise_rate: float = 0.05,
    crash_at_screenshot: int | None = None,
):
    """One article's full mock provider set.

    The OCR engine and verifier follow session restarts: the restart
    factory rebinds their session reference before handing the new
    session to the pipeline.
    """
    from ..providers.base import ProviderSet

    exclude = frozenset() if article.indexed else frozenset({article.landmark_en})
    session = MockMapSession(
        world, exclude_names=exclude, crash_at_screenshot=crash_at_screenshot
    )
    engine = MockOcrEngine(world, session, noise_rate=noise_rate, noise_seed=noise_seed)
    verifier = MockVerifier(article.truth, [article.landmark_en, article.road_en], session)
    reranker = MockReranker([article.landmark_en, article.road_en, article.union_en])

    def new_session() -> MockMapSession:
        fresh = MockMapSession(world, exclude_names=exclude)
        engine.session = fresh
        verifier.session = fresh
        return fresh

    return ProviderSet(
        extractor=MockCueExtractor(world),
        reranker=reranker,
        verifier=verifier,
        session=session,
        ocr_engine=engine,
        session_factory=new_session,
    )


__all__ = [
    "AUTOCOMPLETE_FLOOR",
    "AUTOCOMPLETE_LIMIT",
    "CHROME_ROW",
    "MockCueExtractor",
    "MockMapSession",
    "MockOcrEngine",
    "MockReranker",
    "MockVerifier",
    "indexed_session_factory",
]
