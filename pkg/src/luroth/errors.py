"""Error taxonomy shared by the library and the CLI exit-code contract."""


class LurothError(Exception):
    """Base class; maps to CLI exit code 4 (internal) unless refined."""

    exit_code = 4


class DomainError(LurothError):
    """An argument lies outside the mathematical domain of an operation."""

    exit_code = 2


class ValidationError(LurothError):
    """A configuration or parameter combination is rejected."""

    exit_code = 2


class ResourceError(LurothError):
    """A computation exceeded its term/state/precision budget.

    ``partial`` optionally carries the best result achieved before giving up
    (e.g. the enclosure reached when a tolerance was unattainable).
    """

    exit_code = 3

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
