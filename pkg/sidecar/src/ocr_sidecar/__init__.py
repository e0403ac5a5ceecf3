"""OCR sidecar service: recognition behind a small, bit-exact HTTP contract."""

from .engine import EngineUnavailable, GlyphMatcherEngine, Line, load_engine

__all__ = ["EngineUnavailable", "GlyphMatcherEngine", "Line", "load_engine"]
