"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration problems exit 2,
numerical failures exit 3, file/format problems exit 4.
"""


class ToolError(Exception):
    """Base class for errors the CLI knows how to report."""

    exit_code = 1
    kind = "error"


class ConfigError(ToolError):
    exit_code = 2
    kind = "config"


class NumericalError(ToolError):
    exit_code = 3
    kind = "numerical"


class ArtifactIOError(ToolError):
    exit_code = 4
    kind = "io"


class DomainError(ConfigError):
    """An argument is outside the documented domain of an operation."""


class UnsupportedBankError(ConfigError):
    """The frequency bank lacks the canonical axis rows an operation needs."""


class BudgetExceededError(NumericalError):
    """An enumeration would overflow its configured tuple budget."""


class GridTooSmallError(ConfigError):
    """A sampling grid is too coarse for the requested frequency content."""


class TrainingDivergedError(NumericalError):
    """Training aborted on a non-finite or exploding loss."""

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = dict(snapshot or {})


class PnmError(ArtifactIOError):
    """Malformed or unsupported Netpbm payload."""
