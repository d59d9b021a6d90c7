"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
RemoteError -> 4, anything else -> 5.
"""


class HyperdetectError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(HyperdetectError):
    """Invalid configuration value or combination."""


class DataError(HyperdetectError):
    """Bad input data: schema violations, malformed rows, label problems."""


class SchemaError(DataError):
    """A required column or key is missing from an input file."""


class FitError(HyperdetectError):
    """A model cannot be fitted on the given data (e.g. single-class input)."""


class LeakageError(DataError):
    """Evaluation data overlaps the model's training set."""


class RemoteError(HyperdetectError):
    """A remote service failed.

    ``retryable`` distinguishes transient transport failures from
    protocol violations that a retry cannot fix.
    """

    def __init__(self, message: str, *, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class ModelFormatError(HyperdetectError):
    """Serialized model envelope is unreadable, corrupt, or unsupported."""


class SingularSurrogateError(HyperdetectError):
    """Local surrogate normal equations are singular; use ridge_lambda > 0."""
