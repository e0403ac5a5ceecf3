"""Recognition engines behind the service.

Two interchangeable backends. The easyocr backend wraps the deep
learning recognizer and is used whenever the package and its model
weights are actually present. The glyph matcher is a dependency-free
fallback that template-matches glyphs of the bundled vector font, so the
service stays functional and fully deterministic on hosts that cannot
fetch model weights. Both return coordinates in the frame of the
submitted image; nothing here crops or re-tiles the input.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw, ImageFont

log = logging.getLogger(__name__)

SUPPORTED_LANGUAGES = ("bn", "en")

# glyphs the fallback matcher can tell apart; bar glyphs (I l i) stay
# ambiguous at small sizes and may swap case
_CHARSET = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789.,'-"

_FONT_CANDIDATES = (
    "/usr/share/fonts/truetype/dejavu/DejaVuSans.ttf",
    "/usr/share/fonts/dejavu/DejaVuSans.ttf",
    "/usr/local/share/fonts/DejaVuSans.ttf",
)

_NORM_SIZE = 24  # masks are compared on a fixed square grid
_TEMPLATE_PT = 64  # template render size; large enough that resampling dominates
_INK_LEVEL = 128


class EngineUnavailable(Exception):
    """No recognition backend could be brought up."""


@dataclass(frozen=True)
class Line:
    text: str
    bbox: tuple[int, int, int, int]  # x, y, w, h in submitted-image pixels
    confidence: float


def _find_font() -> str:
    override = os.environ.get("SIDECAR_FONT")
    candidates = (override,) + _FONT_CANDIDATES if override else _FONT_CANDIDATES
    for path in candidates:
        if path and Path(path).is_file():
            return path
    raise EngineUnavailable("no usable TrueType font found for the glyph matcher")


def _norm_mask(mask: np.ndarray) -> np.ndarray:
    img = Image.fromarray((mask * 255).astype(np.uint8))
    img = img.resize((_NORM_SIZE, _NORM_SIZE), Image.BILINEAR)
    return np.asarray(img) > 127


def _vertical_runs(mask: np.ndarray) -> int:
    """Count vertically separated ink blocks; 2 for dotted glyphs like i."""
    rows = mask.any(axis=1)
    return int(np.count_nonzero(rows[1:] & ~rows[:-1]) + (1 if rows[0] else 0))


@lru_cache(maxsize=4)
def _glyph_templates(font_path: str) -> dict:
    font = ImageFont.truetype(font_path, _TEMPLATE_PT)
    out = {}
    for ch in _CHARSET:
        l, t, r, b = font.getbbox(ch)
        if r - l <= 0 or b - t <= 0:
            continue
        img = Image.new("L", (r - l + 4, b - t + 4), 255)
        ImageDraw.Draw(img).text((2 - l, 2 - t), ch, font=font, fill=0)
        mask = np.asarray(img) < _INK_LEVEL
        ys, xs = np.nonzero(mask)
        if xs.size == 0:
            continue
        tight = mask[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
        out[ch] = (
            _norm_mask(tight),
            tight.shape[1] / tight.shape[0],
            _vertical_runs(tight),
        )
    return out


class GlyphMatcherEngine:
    """Template matcher over the bundled font's Latin glyph set.

    Works on clean rendered text of roughly 12 px and up, any scale, both
    polarities. Bangla requests are accepted but only Latin glyphs have
    templates, so Bangla text yields no lines; the engine string says so.
    """

    def __init__(self, font_path: str | None = None):
        self.font_path = font_path or _find_font()
        self.templates = _glyph_templates(self.font_path)
        if not self.templates:
            raise EngineUnavailable("glyph template set came up empty")

    @property
    def name(self) -> str:
        return "glyph-matcher/1 (latin glyphs only)"

    def recognize(self, image: Image.Image, languages=SUPPORTED_LANGUAGES) -> list[Line]:
        arr = np.asarray(image.convert("L"))
        ink = arr < _INK_LEVEL
        if ink.mean() > 0.5:  # dark background: ink is the minority shade
            ink = ~ink
        if not ink.any():
            return []
        lines: list[Line] = []
        for y0, y1 in _row_bands(ink):
            line = self._read_band(ink, y0, y1)
            if line is not None:
                lines.append(line)
        return lines

    def _read_band(self, ink: np.ndarray, y0: int, y1: int) -> Line | None:
        band = ink[y0 : y1 + 1]
        boxes = _column_boxes(band)
        if not boxes:
            return None
        gaps = [boxes[i + 1][0] - boxes[i][1] for i in range(len(boxes) - 1)]
        med_gap = sorted(gaps)[len(gaps) // 2] if gaps else 0
        space_at = max(2 * med_gap, round(0.25 * band.shape[0]), 4)

        chars: list[str] = []
        scores: list[float] = []
        for i, (x0, x1) in enumerate(boxes):
            if i and boxes[i][0] - boxes[i - 1][1] > space_at:
                chars.append(" ")
            ch, score = self._match(band[:, x0 : x1 + 1])
            chars.append(ch)
            scores.append(score)
        text = "".join(chars).strip()
        if not text:
            return None
        xs0 = boxes[0][0]
        xs1 = boxes[-1][1]
        confidence = float(min(1.0, max(0.0, sum(scores) / len(scores))))
        return Line(
            text=text,
            bbox=(int(xs0), int(y0), int(xs1 - xs0 + 1), int(y1 - y0 + 1)),
            confidence=confidence,
        )

    def _match(self, crop: np.ndarray) -> tuple[str, float]:
        ys, xs = np.nonzero(crop)
        tight = crop[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
        aspect = tight.shape[1] / tight.shape[0]
        mask = _norm_mask(tight)
        runs = _vertical_runs(tight)
        best_ch, best_score = "?", -1.0
        for ch, (tmask, taspect, truns) in self.templates.items():
            score = float((mask == tmask).mean())
            score -= 0.35 * abs(float(np.log(aspect / taspect)))
            score -= 0.15 * abs(runs - truns)
            if score > best_score:
                best_ch, best_score = ch, score
        return best_ch, best_score


def _row_bands(ink: np.ndarray, min_gap: int = 3) -> list[tuple[int, int]]:
    """Text line bands: ink row runs, merging gaps smaller than min_gap."""
    rows = np.nonzero(ink.any(axis=1))[0]
    if rows.size == 0:
        return []
    bands = []
    start = prev = int(rows[0])
    for y in rows[1:]:
        if y > prev + min_gap:
            bands.append((start, prev))
            start = int(y)
        prev = int(y)
    bands.append((start, prev))
    return bands


def _column_boxes(band: np.ndarray) -> list[tuple[int, int]]:
    cols = np.nonzero(band.any(axis=0))[0]
    if cols.size == 0:
        return []
    boxes = []
    start = prev = int(cols[0])
    for x in cols[1:]:
        if x > prev + 1:
            boxes.append((start, prev))
            start = int(x)
        prev = int(x)
    boxes.append((start, prev))
    return boxes


class EasyOcrBackend:
    """Thin wrapper around the easyocr reader; loads weights once."""

    def __init__(self, languages=SUPPORTED_LANGUAGES):
        try:
            import easyocr
        except ImportError as exc:
            raise EngineUnavailable(f"easyocr not installed: {exc}") from exc
        self._version = getattr(easyocr, "__version__", "unknown")
        kwargs = {"gpu": False, "verbose": False}
        model_dir = os.environ.get("SIDECAR_MODEL_DIR")
        if model_dir:
            kwargs["model_storage_directory"] = model_dir
            kwargs["download_enabled"] = False
        try:
            self.reader = easyocr.Reader(list(languages), **kwargs)
        except Exception as exc:  # missing weights, torch trouble
            raise EngineUnavailable(f"easyocr reader failed to load: {exc}") from exc
        log.info("easyocr %s loaded; output may vary across library versions", self._version)

    @property
    def name(self) -> str:
        return f"easyocr/{self._version}"

    def recognize(self, image: Image.Image, languages=SUPPORTED_LANGUAGES) -> list[Line]:
        results = self.reader.readtext(np.asarray(image.convert("RGB")))
        lines: list[Line] = []
        for quad, text, conf in results:
            xs = [p[0] for p in quad]
            ys = [p[1] for p in quad]
            x, y = int(min(xs)), int(min(ys))
            lines.append(
                Line(
                    text=str(text),
                    bbox=(x, y, int(max(xs)) - x + 1, int(max(ys)) - y + 1),
                    confidence=float(conf),
                )
            )
        return lines


def load_engine(kind: str | None = None):
    """Bring up a backend: explicit kind, or easyocr with glyph fallback."""
    kind = kind or os.environ.get("SIDECAR_OCR_ENGINE", "auto")
    if kind == "easyocr":
        return EasyOcrBackend()
    if kind == "glyph":
        return GlyphMatcherEngine()
    if kind != "auto":
        raise ValueError(f"unknown engine kind {kind!r}; use auto, easyocr, or glyph")
    try:
        return EasyOcrBackend()
    except EngineUnavailable as exc:
        log.info("easyocr unavailable (%s); using the glyph matcher", exc)
        return GlyphMatcherEngine()
