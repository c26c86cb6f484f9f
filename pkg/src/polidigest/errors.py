"""Exception hierarchy shared across the pipeline.

Every error raised by this package derives from PolidigestError so callers
can catch pipeline failures without swallowing programming errors.
"""

from __future__ import annotations


class PolidigestError(Exception):
    """Base class for all pipeline errors."""


# --- ingest ---------------------------------------------------------------


class SourceUnavailable(PolidigestError):
    """A source could not be reached (missing file, network failure). Retryable."""


class ParseFailure(PolidigestError):
    """A payload was malformed. Carries a byte offset or record index when known."""

    def __init__(self, message: str, *, offset: int | None = None,
                 record_index: int | None = None):
        super().__init__(message)
        self.offset = offset
        self.record_index = record_index


class UnknownPerson(PolidigestError):
    """Author could not be resolved; the document must be quarantined, not dropped."""

    def __init__(self, message: str, *, author_hint: str | None = None):
        super().__init__(message)
        self.author_hint = author_hint


# --- textprep -------------------------------------------------------------


class EmptyVocabulary(PolidigestError):
    """No word survived the frequency/stopword filters."""


# --- topic models ---------------------------------------------------------


class InvalidConfig(PolidigestError):
    """A configuration value violates its invariants."""


class EmptyCorpus(PolidigestError):
    """Training or evaluation was asked to run over zero tokens."""


class EmptyParagraph(PolidigestError):
    """All tokens of a paragraph fell outside the vocabulary."""


class TopicOutOfRange(PolidigestError, IndexError):
    """Topic index outside 0..K-1."""


class IndexOutOfRange(PolidigestError, IndexError):
    """Paragraph index outside the trained range."""


class FormatError(PolidigestError):
    """A serialized artifact or embedding file is malformed."""


class DimensionMismatch(FormatError):
    """Row arity or vector dimension disagrees with the declared dimension."""


class InsufficientCoverage(PolidigestError):
    """The embedding table covers none of the trainable tokens."""


class DivergenceDetected(PolidigestError):
    """Training produced NaN loss; aborted with diagnostics."""


# --- aggregation ----------------------------------------------------------


class ModelMismatch(PolidigestError):
    """An entry from a different model_id appeared in a single-model computation."""


# --- store ----------------------------------------------------------------


class StorageFailure(PolidigestError):
    """The underlying storage rejected an operation."""


class ForeignKeyViolation(StorageFailure):
    """An entry referenced a document or model that does not exist."""


class DuplicateModel(StorageFailure):
    """register_model was called with an id that already exists."""


class IllegalTransition(StorageFailure):
    """Model lifecycle transition not permitted from the current status."""


class ChecksumMismatch(StorageFailure):
    """A released model artifact no longer matches its recorded checksum."""


class UnknownModel(StorageFailure):
    """No model registered under the given id."""
