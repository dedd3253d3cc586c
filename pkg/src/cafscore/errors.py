"""Exception taxonomy shared across the engine.

CLI exit codes hang off these classes: ConfigError -> 2, DataError -> 3,
BackendError -> 4, PartialEvaluationError -> 5.
"""

from __future__ import annotations


class EngineError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EngineError, ValueError):
    """An operation was called with arguments outside its domain."""


class ConfigError(EngineError):
    """Run configuration is missing, malformed, or inconsistent."""


class DataError(EngineError):
    """Dataset or interchange content failed validation."""


class ExtractionError(DomainError):
    """Digit-distribution extraction failed; carries a machine-readable code."""

    def __init__(self, code: str, message: str | None = None):
        super().__init__(message or code)
        self.code = code


class UndefinedCorrelationError(DataError):
    """A correlation is undefined for the given inputs (e.g. zero variance)."""


class BackendError(EngineError):
    """A model backend could not produce a usable record."""


class TransportError(BackendError):
    """Transient transport-level backend failure; eligible for retry."""


class RecordAbsentError(BackendError):
    """A file-backed backend holds no record for the requested subject."""

    def __init__(self, subject_desc: str):
        super().__init__(f"record_absent: {subject_desc}")
        self.subject_desc = subject_desc


class ValidationFailure(BackendError):
    """A backend returned a record that fails interchange validation."""

    def __init__(self, violations: list[str]):
        super().__init__("invalid record: " + "; ".join(violations))
        self.violations = violations


class PartialEvaluationError(EngineError):
    """An evaluation finished but one or more items could not be scored."""

    def __init__(self, failures: list[str]):
        super().__init__(f"{len(failures)} item(s) unscored")
        self.failures = failures
