"""Exception types shared across the package."""


class HQLError(Exception):
    pass


class DomainError(HQLError, ValueError):
    """Parameters outside the mathematical domain of an operation."""


class InputError(HQLError, ValueError):
    """Malformed numeric input (negative weights, NaNs, bad shapes)."""


class PreconditionError(HQLError, ValueError):
    """An operation was called on an object that violates its precondition."""


class SpecValidationError(HQLError, ValueError):
    """A Heintze spec failed validation; ``report`` holds the diagnostics."""

    def __init__(self, report):
        self.report = report
        super().__init__(report.summary())


class ConditioningError(HQLError, ArithmeticError):
    """A double-precision computation would lose all significant digits."""


class SpecParseError(HQLError, ValueError):
    """A spec file could not be parsed."""
