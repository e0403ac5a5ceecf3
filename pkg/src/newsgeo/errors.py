"""Exception hierarchy shared across the package."""

from __future__ import annotations


class NewsgeoError(Exception):
    """Base class for all package errors."""


class OutOfRange(NewsgeoError):
    """A coordinate or offset left the valid domain."""


class GazetteerUnavailable(NewsgeoError):
    """The road gazetteer file is missing or corrupt."""


class MalformedExtraction(NewsgeoError):
    """Extractor output contained neither search strings nor schema fields."""


class OcrEngineFailure(NewsgeoError):
    """The OCR engine failed on a chunk or was unreachable."""


class ProviderTimeout(NewsgeoError):
    """A provider call did not complete within the configured timeout."""


class ProviderRefusal(NewsgeoError):
    """The provider declined to answer (safety filter, quota, etc.)."""


class MalformedRerank(NewsgeoError):
    """Reranker response contained no parseable selection indices."""


class MalformedVerdict(NewsgeoError):
    """Verifier response contained no parseable yes/no tag."""


class SessionCrashed(NewsgeoError):
    """The map session died mid-article."""


class NoCoordinatesInUrl(NewsgeoError):
    """A map URL carried no recognizable coordinate segment."""


class EmptyVector(NewsgeoError):
    """Aggregate metrics requested over zero errors."""


class SchemaError(NewsgeoError):
    """A dataset line failed schema validation."""

    def __init__(self, message: str, line_no: int | None = None):
        super().__init__(message)
        self.line_no = line_no


class ConfigError(NewsgeoError):
    """Run configuration is invalid (missing credentials, bad values)."""
