"""
Exception hierarchy for the verification toolkit.

Library modules raise these; only the CLI turns them into failed report
records or exit codes.
"""


class ToolkitError(Exception):
    """Base class for every error raised by the toolkit"""


class PresentationError(ToolkitError, ValueError):
    """Malformed word, presentation or pc presentation"""


class ResourceLimitError(ToolkitError):
    """A configured order, BFS or search cap was exceeded"""

    def __init__(self, what: str, limit: int, value: int | None = None):
        self.what = what
        self.limit = limit
        self.value = value
        detail = f" (got {value})" if value is not None else ""
        super().__init__(f"{what} exceeds cap {limit}{detail}")


class PrecisionError(ToolkitError, ValueError):
    """Truncated 3-adic precision is too low for the requested check"""


class DiscriminantError(ToolkitError, ValueError):
    """Discriminant is not a negative fundamental discriminant or is out of range"""


class ConsistencyError(ToolkitError):
    """A pc presentation failed its consistency checks"""


class ConfigurationError(ToolkitError):
    """Invalid command-line or environment configuration"""
