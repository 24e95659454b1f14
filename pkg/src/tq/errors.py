"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class TqError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(TqError):
    """Invalid schema content: bad slugs, missing categories, type conflicts."""


class TokenizeError(TqError):
    pass


class NoTableMatched(TqError):
    """Every candidate table scored zero overlap with the question."""

    def __init__(self, message: str, scores: dict[str, float] | None = None):
        super().__init__(message)
        self.scores = scores or {}


class BackendError(TqError):
    """QA or encoder backend failed at the transport level."""

    def __init__(self, message: str, retriable: bool = False):
        super().__init__(message)
        self.retriable = retriable


class ProtocolError(BackendError):
    """Backend replied, but the payload violates the wire protocol."""

    def __init__(self, message: str, payload: object = None):
        super().__init__(message, retriable=False)
        self.payload = payload


class AdaptError(TqError):
    """An extracted span could not be turned into a typed comparison."""


class FieldExtractionError(TqError):
    pass


class AggregateError(TqError):
    """Classifier misuse: empty training sets, encoder/model dim mismatch."""


class SqlBuildError(TqError):
    pass


class CannotDetermineTarget(SqlBuildError):
    """No select column survived extraction and no COUNT(*) fallback applies."""


class DatastoreError(TqError):
    """Loading or executing against the backing store failed."""


class CsvFormatError(DatastoreError):
    """Cell or header content does not fit the declared schema."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(TqError):
    pass


class PipelineError(TqError):
    """Wraps a stage failure together with the partial trace."""

    def __init__(self, stage: str, cause: Exception, trace=None):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause
        self.trace = trace
