from errors.base_errors import RenyiError


class DomainError(RenyiError):
    """An argument lies outside the domain of the operation (p ∉ (0,1), σ ≤ 0, α < 0...)."""


class DataParseError(RenyiError):
    """
    A CSV cell could not be read.

    The offending position is stored in details as "row" (1-based, header excluded)
    and "column".
    """

    def __init__(self, error: str, source: str = None, row: int = None, column: str = None):
        super().__init__(error, source, {"row": row, "column": column})
        self.row = row
        self.column = column


class ConfigError(RenyiError):
    """A configuration file or option is malformed; details["key"] names the offending key."""

    def __init__(self, error: str, source: str = None, key: str = None):
        super().__init__(error, source, {"key": key})
        self.key = key


class HypothesisError(RenyiError):
    """A linear hypothesis is malformed (rank deficient M, wrong shapes, unknown coefficient)."""
