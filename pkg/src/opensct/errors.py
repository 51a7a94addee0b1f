"""Exception types shared across the toolkit.

The CLI maps errors to exit codes through ``exit_code``: validation and
parse failures exit 1, embedding-service failures exit 2.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ValidationError(ToolkitError):
    """A dataset, prediction or vote file violates its schema or references."""


class TemplateParseError(ToolkitError):
    """A sentence does not match the state-change template grammar."""

    def __init__(self, message: str, anchor: str | None = None, sentence: str | None = None):
        super().__init__(message)
        self.anchor = anchor
        self.sentence = sentence


class ConfigurationError(ToolkitError):
    """An invalid option or option combination (e.g. asymmetric scorer for clustering)."""


class TransportError(ToolkitError):
    """The embedding service could not be reached or refused to serve."""

    exit_code = 2


class ProtocolError(ToolkitError):
    """The embedding service answered with a malformed or inconsistent reply."""

    exit_code = 2
