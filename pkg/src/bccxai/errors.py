"""Exception hierarchy.

Every error raised for bad input derives from :class:`ValidationError`; the
CLI maps those to exit code 1 and everything I/O related to exit code 2.
"""

from __future__ import annotations


class BccXaiError(Exception):
    """Base class; carries a machine-readable ``details`` mapping."""

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.__class__.__name__)
        self.details = details

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": str(self), "details": self.details}


class ValidationError(BccXaiError):
    pass


# core
class DuplicateAnnotation(ValidationError):
    pass


class BadVectorLength(ValidationError):
    pass


class NonBinaryValue(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class MissingImage(ValidationError):
    pass


# consensus
class EmptyPatternColumn(ValidationError):
    pass


class BadParams(ValidationError):
    pass


# metrics
class LengthMismatch(ValidationError):
    pass


class EmptyCounts(ValidationError):
    pass


class AllUndefined(ValidationError):
    pass


class DomainError(ValidationError):
    pass


# folds
class TooFewSamples(ValidationError):
    pass


class UnknownImage(ValidationError):
    pass


# saliency
class EmptyRegion(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


# augmentation
class EmptyImage(ValidationError):
    pass
