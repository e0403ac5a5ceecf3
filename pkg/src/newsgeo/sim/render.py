"""Map-tile style rendering for the synthetic world.

A view is a white canvas centered on a coordinate at a fixed ground
resolution. Every place whose projected center falls inside the viewport
gets its name drawn centered at the projection; road names repeat at each
polyline vertex the way tile renderers repeat shield labels.

Label geometry lives in view_labels() so the screenshot path and the
simulated OCR engine agree on it by construction. Labels use the Latin
names: the bundled DejaVu face has no Bangla glyphs, so Bangla names stay
in the gazetteer rather than on the canvas.
"""

from __future__ import annotations

import io
import threading
from dataclasses import dataclass
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

from ..geo import GeoPoint, tangent_offsets_km
from .world import SimWorld

VIEWPORT = (1920, 1080)
M_PER_PX = 2.0
FONT_SIZE = 22

# fonts are cached per thread: FreeType faces are not safe to share
# across concurrent draw calls
_font_cache = threading.local()


def _load_font(size: int = FONT_SIZE):
    cache = getattr(_font_cache, "fonts", None)
    if cache is None:
        cache = _font_cache.fonts = {}
    if size not in cache:
        try:
            import matplotlib

            path = Path(matplotlib.get_data_path()) / "fonts" / "ttf" / "DejaVuSans.ttf"
            cache[size] = ImageFont.truetype(str(path), size)
        except Exception:
            cache[size] = ImageFont.load_default()
    return cache[size]


@dataclass(frozen=True)
class ViewLabel:
    text: str
    bbox: tuple[int, int, int, int]  # x, y, w, h in viewport pixels, clipped
    center_px: tuple[int, int]


@dataclass(frozen=True)
class RenderedView:
    center: GeoPoint
    image: Image.Image
    labels: tuple[ViewLabel, ...]


def _project(center: GeoPoint, loc: GeoPoint, viewport, m_per_px: float) -> tuple[float, float]:
    east, north = tangent_offsets_km(center, loc)
    px_per_km = 1000.0 / m_per_px
    return viewport[0] / 2 + east * px_per_km, viewport[1] / 2 - north * px_per_km


def _clip(bbox: tuple[int, int, int, int], viewport) -> tuple[int, int, int, int] | None:
    x, y, w, h = bbox
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + w, viewport[0]), min(y + h, viewport[1])
    if x1 <= x0 or y1 <= y0:
        return None
    return (x0, y0, x1 - x0, y1 - y0)


def view_labels(
    world: SimWorld,
    center: GeoPoint,
    viewport: tuple[int, int] = VIEWPORT,
    m_per_px: float = M_PER_PX,
) -> list[ViewLabel]:
    """All labels visible in the view, with bboxes clipped to the viewport.

    Inclusion rule: the text's anchor point (the place's projection; for
    roads, each vertex's projection) must land inside the viewport. A label
    whose anchor sits just outside contributes nothing even if its box
    would have poked in.
    """
    font = _load_font()
    labels: list[ViewLabel] = []
    for place in world.places:
        anchors = place.polyline if place.kind == "road" else (place.location,)
        for anchor in anchors:
            px, py = _project(center, anchor, viewport, m_per_px)
            if not (0 <= px < viewport[0] and 0 <= py < viewport[1]):
                continue
            l, t, r, b = font.getbbox(place.name_en)
            w, h = r - l, b - t
            x0 = round(px - w / 2)
            y0 = round(py - h / 2)
            clipped = _clip((x0, y0, w, h), viewport)
            if clipped is None:
                continue
            labels.append(
                ViewLabel(text=place.name_en, bbox=clipped, center_px=(round(px), round(py)))
            )
    return labels


def render_view(
    world: SimWorld,
    center: GeoPoint,
    viewport: tuple[int, int] = VIEWPORT,
    m_per_px: float = M_PER_PX,
) -> RenderedView:
    font = _load_font()
    img = Image.new("RGB", viewport, (255, 255, 255))
    draw = ImageDraw.Draw(img)

    # road casings first so text stays legible on top
    for road in world.roads:
        pts = [_project(center, v, viewport, m_per_px) for v in road.polyline]
        if len(pts) >= 2:
            draw.line(pts, fill=(200, 200, 200), width=5)

    labels = view_labels(world, center, viewport, m_per_px)
    for label in labels:
        cx, cy = label.center_px
        draw.ellipse((cx - 3, cy - 3, cx + 3, cy + 3), fill=(90, 90, 90))
        l, t, r, b = font.getbbox(label.text)
        # place ink so its bbox is centered on the projection, matching view_labels
        draw.text((cx - (r - l) / 2 - l, cy - (b - t) / 2 - t),
                  label.text, fill=(30, 30, 30), font=font)
    return RenderedView(center=center, image=img, labels=tuple(labels))


def render_png(
    world: SimWorld,
    center: GeoPoint,
    viewport: tuple[int, int] = VIEWPORT,
    m_per_px: float = M_PER_PX,
) -> bytes:
    view = render_view(world, center, viewport, m_per_px)
    buf = io.BytesIO()
    view.image.save(buf, format="PNG", compress_level=1)
    return buf.getvalue()
