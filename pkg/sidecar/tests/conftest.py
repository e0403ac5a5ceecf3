import pytest
from PIL import Image, ImageDraw, ImageFont

from ocr_sidecar.engine import _find_font


@pytest.fixture(scope="session")
def font_path() -> str:
    return _find_font()


def render_text(text: str, font_path: str, size: int = 32, pad: int = 12) -> Image.Image:
    """White canvas with dark text, the shape of input the service sees."""
    font = ImageFont.truetype(font_path, size)
    l, t, r, b = font.getbbox(text)
    img = Image.new("L", (r - l + 2 * pad, b - t + 2 * pad), 255)
    ImageDraw.Draw(img).text((pad - l, pad - t), text, font=font, fill=0)
    return img


def png_bytes(img: Image.Image) -> bytes:
    import io

    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def similarity(a: str, b: str) -> int:
    """Casefolded insert/delete similarity in 0..100 for round-trip checks."""
    a, b = a.casefold(), b.casefold()
    total = len(a) + len(b)
    if total == 0:
        return 100
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                cur.append(prev[j - 1])
            else:
                cur.append(1 + min(prev[j], cur[-1]))
        prev = cur
    return round(100 * (total - prev[-1]) / total)
