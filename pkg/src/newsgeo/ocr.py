"""Chunk planning, preprocessing, chunked OCR, and the fuzzy acceptance gate.

Screenshots are cut into overlapping 1000x500 chunks so small labels never
straddle a cut. Each chunk is binarized and upscaled before recognition,
and a screenshot only reaches the (expensive) visual verifier when some
recognized line scores at least 75 against a known place name.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import OcrEngineFailure
from .fuzz import hybrid_score, normalize_text

log = logging.getLogger(__name__)

CHUNK_W = 1000
CHUNK_H = 500
CHUNK_OVERLAP = 50

LUMA_THRESHOLD = 170
UPSCALE = 2

GATE_THRESHOLD = 75
MIN_LINE_CHARS = 3


@dataclass(frozen=True)
class ChunkRect:
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True)
class OcrLine:
    """One recognized text line, bbox in full-image pixel coordinates."""

    text: str
    bbox: tuple[int, int, int, int]
    confidence: float


@dataclass(frozen=True)
class OcrContext:
    """Side-channel for in-process engines: where this chunk came from.

    The network sidecar ignores it; the sim engine uses it to look up
    ground-truth labels without decoding pixels.
    """

    view_id: str | None
    chunk: ChunkRect
    scale: int


@dataclass
class ChunkedOcrResult:
    lines: list[OcrLine] = field(default_factory=list)
    ocr_actions: int = 0
    failed_chunks: int = 0


@dataclass(frozen=True)
class GateMatch:
    place: str
    line: str
    score: int


@dataclass(frozen=True)
class GateVerdict:
    passed: bool
    best: GateMatch | None
    lines: tuple[OcrLine, ...]
    ocr_actions: int


# ---------------------------------------------------------------------------
# chunk planning


def _axis_starts(dim: int, chunk: int, stride: int) -> list[int]:
    if dim <= chunk:
        return [0]
    starts = set()
    k = 0
    while k * stride < dim:
        s = k * stride
        if s + chunk > dim:
            s = max(0, dim - chunk)
        starts.add(s)
        k += 1
    return sorted(starts)


def plan_chunks(img_w: int, img_h: int) -> list[ChunkRect]:
    """Overlapping chunk rectangles covering the image, row-major."""
    if img_w < 1 or img_h < 1:
        raise ValueError("image dimensions must be positive")
    xs = _axis_starts(img_w, CHUNK_W, CHUNK_W - CHUNK_OVERLAP)
    ys = _axis_starts(img_h, CHUNK_H, CHUNK_H - CHUNK_OVERLAP)
    w = min(CHUNK_W, img_w)
    h = min(CHUNK_H, img_h)
    return [ChunkRect(x, y, w, h) for y in ys for x in xs]


# ---------------------------------------------------------------------------
# preprocessing


def binarize_chunk(img: Image.Image, threshold: int = LUMA_THRESHOLD, invert: bool = True) -> Image.Image:
    """Luma threshold to a pure {0, 255} image.

    Default polarity maps bright pixels (map background) to 0 and dark
    pixels (label text) to 255. Luma is rounded half-up; the scaled
    integer form is the exact floor of 0.299R + 0.587G + 0.114B + 0.5,
    with no float representation error near ties.
    """
    if img.mode == "L":
        luma = np.asarray(img, dtype=np.uint32)
    else:
        rgb = np.asarray(img.convert("RGB"), dtype=np.uint32)
        luma = (rgb[..., 0] * 299 + rgb[..., 1] * 587 + rgb[..., 2] * 114 + 500) // 1000
    hi, lo = (0, 255) if invert else (255, 0)
    out = np.where(luma > threshold, np.uint8(hi), np.uint8(lo))
    return Image.fromarray(out, mode="L")


def preprocess_chunk(
    img: Image.Image,
    threshold: int = LUMA_THRESHOLD,
    invert: bool = True,
    resample: str = "bilinear",
) -> Image.Image:
    """Binarize then upscale 2x; output is exactly 2w x 2h."""
    binary = binarize_chunk(img, threshold=threshold, invert=invert)
    filt = Image.Resampling.BILINEAR if resample == "bilinear" else Image.Resampling.NEAREST
    return binary.resize((binary.width * UPSCALE, binary.height * UPSCALE), filt)


# ---------------------------------------------------------------------------
# chunked recognition


def _encode_png(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG", compress_level=1)
    return buf.getvalue()


def run_chunked_ocr(
    image: Image.Image,
    engine,
    languages: tuple[str, ...] = ("bn", "en"),
    view_id: str | None = None,
) -> ChunkedOcrResult:
    """Recognize every chunk and merge lines back into image coordinates.

    A failing chunk is logged and skipped; if every chunk fails the
    screenshot has produced no evidence at all and OcrEngineFailure
    propagates so the caller can fail the gate closed.
    """
    result = ChunkedOcrResult()
    chunks = plan_chunks(image.width, image.height)
    for chunk in chunks:
        crop = image.crop((chunk.x, chunk.y, chunk.x + chunk.w, chunk.y + chunk.h))
        prepared = preprocess_chunk(crop)
        ctx = OcrContext(view_id=view_id, chunk=chunk, scale=UPSCALE)
        try:
            raw_lines = engine.recognize(_encode_png(prepared), languages=languages, context=ctx)
        except OcrEngineFailure as exc:
            log.warning("ocr chunk (%d,%d) failed: %s", chunk.x, chunk.y, exc)
            result.failed_chunks += 1
            continue
        result.ocr_actions += 1
        for raw in raw_lines:
            x, y, w, h = raw["bbox"]
            bbox = (
                chunk.x + round(x / UPSCALE),
                chunk.y + round(y / UPSCALE),
                round(w / UPSCALE),
                round(h / UPSCALE),
            )
            text = str(raw["text"])
            if not text:
                continue
            result.lines.append(OcrLine(text=text, bbox=bbox, confidence=float(raw["confidence"])))
    if chunks and result.failed_chunks == len(chunks):
        raise OcrEngineFailure(f"all {len(chunks)} chunks failed for view {view_id!r}")
    return result


# ---------------------------------------------------------------------------
# the gate


def ocr_gate(
    lines: list[OcrLine],
    place_names: list[str],
    threshold: int = GATE_THRESHOLD,
    ocr_actions: int = 0,
) -> GateVerdict:
    """Decide whether recognized text justifies a visual verification call.

    Lines shorter than 3 characters after normalization carry no signal
    and are discarded before scoring. Kept lines are recorded on the
    verdict for downstream grounding.
    """
    if not place_names:
        raise ValueError("place_names must be non-empty")
    kept = [ln for ln in lines if len(normalize_text(ln.text)) >= MIN_LINE_CHARS]
    best: GateMatch | None = None
    for place in place_names:
        for ln in kept:
            score = hybrid_score(place, ln.text)
            if best is None or score > best.score:
                best = GateMatch(place=place, line=ln.text, score=score)
    passed = best is not None and best.score >= threshold
    return GateVerdict(passed=passed, best=best, lines=tuple(kept), ocr_actions=ocr_actions)
