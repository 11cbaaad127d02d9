"""Exception types shared across the package."""

from __future__ import annotations


class TissueMapsError(Exception):
    """Base class for all errors raised by this package."""


class ProfileError(TissueMapsError):
    """Profile CSV cannot be parsed. Carries the 1-based row number when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class LookupAmbiguityError(TissueMapsError):
    """A class key matched more than one profile entry."""


class LookupMissError(TissueMapsError):
    """A class key matched no profile entry."""


class GeoJsonError(TissueMapsError):
    """Annotation document is not usable. Carries the feature index when known."""

    def __init__(self, message: str, feature: int | None = None):
        self.feature = feature
        if feature is not None:
            message = f"feature {feature}: {message}"
        super().__init__(message)


class QuerySyntaxError(TissueMapsError):
    """Query text rejected by the parser. Carries the character offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at offset {offset})")


class CatalogError(TissueMapsError):
    """Catalog-level failure (duplicate id, unknown id, hash mismatch)."""


class FusionError(TissueMapsError):
    """Invalid input to tiling, labeling, or map fusion."""


class EmptyDenominatorError(TissueMapsError):
    """A composition mode's normalization area is zero."""


class CodecError(TissueMapsError):
    """Tissue-map image or sidecar cannot be decoded."""
