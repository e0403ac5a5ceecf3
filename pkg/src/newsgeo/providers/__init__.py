from .base import (
    MAX_SUGGESTIONS,
    VIEWPORT_H,
    VIEWPORT_W,
    CueExtractor,
    MapLocation,
    MapSession,
    ProviderConfig,
    ProviderSet,
    Reranker,
    Suggestion,
    Verifier,
    VerifierVerdict,
    choose_with_fallback,
    parse_map_url,
    parse_rerank_reply,
    parse_verifier_reply,
)

__all__ = [
    "MAX_SUGGESTIONS",
    "VIEWPORT_H",
    "VIEWPORT_W",
    "CueExtractor",
    "MapLocation",
    "MapSession",
    "ProviderConfig",
    "ProviderSet",
    "Reranker",
    "Suggestion",
    "Verifier",
    "VerifierVerdict",
    "choose_with_fallback",
    "parse_map_url",
    "parse_rerank_reply",
    "parse_verifier_reply",
]
