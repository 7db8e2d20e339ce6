"""Exception taxonomy shared by the library and the CLI.

The CLI maps these onto exit codes: configuration/usage problems exit
with 2, data problems with 3, and failed internal verification with 4.
"""


class NnboundError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(NnboundError):
    """Invalid parameters, option combinations or config-file contents."""


class DataError(NnboundError):
    """Problems with input data files or their contents."""


class ParseError(DataError):
    """Malformed input; message carries the file and 1-based line number."""


class ValidationError(DataError):
    """Well-formed input that violates a domain constraint (e.g. labels)."""


class EmptySampleError(DataError):
    """A dataset with no rows."""


class UndefinedHypothesisError(ConfigurationError):
    """All-zero coefficient vector: the classifier it names does not exist."""


class InvalidSubsetError(ConfigurationError):
    """A removal set that is not a proper subset of the training indices."""


class VerificationError(NnboundError):
    """An internal soundness re-check failed; never emitted as a result."""
