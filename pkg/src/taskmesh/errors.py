"""Shared exception types.

Errors are raised for contract violations; data-level problems (e.g. automaton
validation findings) are returned as values instead.
"""


class TaskmeshError(Exception):
    """Base class for all package errors."""


class InvalidSymbolError(TaskmeshError, KeyError):
    """An automaton state or event that is not part of the machine."""


class InvalidArgumentError(TaskmeshError, ValueError):
    """An argument outside its documented domain."""


class ParseError(TaskmeshError, ValueError):
    """A structured-text document that does not follow its schema.

    Carries an optional locus (section name and/or line number) so callers can
    point at the offending input.
    """

    def __init__(self, message, section=None, line=None):
        locus = []
        if section is not None:
            locus.append(f"section {section!r}")
        if line is not None:
            locus.append(f"line {line}")
        if locus:
            message = f"{message} ({', '.join(locus)})"
        super().__init__(message)
        self.section = section
        self.line = line


class SchemaVersionError(TaskmeshError, ValueError):
    """A serialized artifact with an unsupported schema version."""


class IntegrityError(TaskmeshError, ValueError):
    """A serialized artifact that is truncated or internally inconsistent."""


class TransportError(TaskmeshError, RuntimeError):
    """A retryable network-level failure while talking to a remote service."""


class TrainingDivergedError(TaskmeshError, RuntimeError):
    """Non-finite loss or gradients during optimization; carries diagnostics."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
