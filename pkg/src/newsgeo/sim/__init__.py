"""Synthetic world, renderer, and provider doubles for offline runs."""

from .mocks import (
    MockCueExtractor,
    MockMapSession,
    MockOcrEngine,
    MockReranker,
    MockVerifier,
    indexed_session_factory,
    sim_providers,
)
from .render import RenderedView, ViewLabel, render_png, render_view, view_labels
from .world import (
    SimArticle,
    SimCounts,
    SimPlace,
    SimWorld,
    article_to_record,
    generate_article,
    generate_article_set,
    generate_world,
    load_world,
    save_world,
    world_from_json,
    world_gazetteer,
    world_to_json,
)

__all__ = [
    "MockCueExtractor",
    "MockMapSession",
    "MockOcrEngine",
    "MockReranker",
    "MockVerifier",
    "indexed_session_factory",
    "sim_providers",
    "RenderedView",
    "ViewLabel",
    "render_png",
    "render_view",
    "view_labels",
    "SimArticle",
    "SimCounts",
    "SimPlace",
    "SimWorld",
    "article_to_record",
    "generate_article",
    "generate_article_set",
    "generate_world",
    "load_world",
    "save_world",
    "world_from_json",
    "world_gazetteer",
    "world_to_json",
]
