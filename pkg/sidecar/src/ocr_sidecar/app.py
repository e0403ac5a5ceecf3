"""HTTP surface of the sidecar.

POST /ocr takes a PNG body and returns recognized lines with pixel
bounding boxes in the submitted image's frame; the caller owns all
chunking and preprocessing. GET /health reports readiness. Engine access
is serialized with a lock because the backends are not guaranteed
thread-safe.
"""

from __future__ import annotations

import io
import logging
import os
import threading
from contextlib import asynccontextmanager

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image, UnidentifiedImageError

from .engine import SUPPORTED_LANGUAGES, EngineUnavailable, load_engine

log = logging.getLogger(__name__)


def _parse_languages(raw: str | None) -> list[str] | None:
    """None means a bad request; the caller turns that into a 422."""
    if raw is None or raw.strip() == "":
        return list(SUPPORTED_LANGUAGES)
    langs = [part.strip() for part in raw.split(",") if part.strip()]
    if not langs or any(lang not in SUPPORTED_LANGUAGES for lang in langs):
        return None
    return langs


def _clamp_bbox(bbox, width: int, height: int) -> tuple[int, int, int, int]:
    x, y, w, h = bbox
    x = max(0, min(int(x), width - 1))
    y = max(0, min(int(y), height - 1))
    w = max(1, min(int(w), width - x))
    h = max(1, min(int(h), height - y))
    return (x, y, w, h)


def create_app(engine=None, autoload: bool = False) -> FastAPI:
    """Build the service; autoload brings an engine up at startup."""

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if app.state.engine is None and app.state.autoload:
            try:
                app.state.engine = load_engine()
                log.info("engine ready: %s", app.state.engine.name)
            except EngineUnavailable as exc:
                log.error("no engine available: %s", exc)
        yield

    app = FastAPI(title="ocr-sidecar", lifespan=lifespan)
    app.state.engine = engine
    app.state.autoload = autoload
    app.state.engine_lock = threading.Lock()

    @app.get("/health")
    def health():
        eng = app.state.engine
        if eng is None:
            return JSONResponse(
                status_code=503,
                content={
                    "status": "loading",
                    "engine": None,
                    "languages": list(SUPPORTED_LANGUAGES),
                },
            )
        return {
            "status": "ok",
            "engine": eng.name,
            "languages": list(SUPPORTED_LANGUAGES),
        }

    @app.post("/ocr")
    async def ocr(request: Request, languages: str | None = None):
        langs = _parse_languages(languages)
        if langs is None:
            return JSONResponse(
                status_code=422,
                content={"detail": f"languages must be a non-empty subset of {list(SUPPORTED_LANGUAGES)}"},
            )
        eng = app.state.engine
        if eng is None:
            return JSONResponse(status_code=503, content={"detail": "engine not loaded"})
        body = await request.body()
        if not body:
            return JSONResponse(status_code=400, content={"detail": "empty image body"})
        try:
            image = Image.open(io.BytesIO(body))
            image.load()
        except (UnidentifiedImageError, OSError, ValueError):
            return JSONResponse(status_code=400, content={"detail": "body is not a decodable image"})
        with app.state.engine_lock:
            lines = eng.recognize(image, languages=tuple(langs))
        return {
            "lines": [
                {
                    "text": line.text,
                    "bbox": list(_clamp_bbox(line.bbox, image.width, image.height)),
                    "confidence": line.confidence,
                }
                for line in lines
            ],
            "engine": eng.name,
        }

    return app


def serve() -> None:
    import uvicorn

    host = os.environ.get("SIDECAR_HOST", "127.0.0.1")
    port = int(os.environ.get("SIDECAR_PORT", "8090"))
    uvicorn.run(create_app(autoload=True), host=host, port=port)
