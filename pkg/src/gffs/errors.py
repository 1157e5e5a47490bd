"""Exception hierarchy shared by all modules."""


class GffsError(Exception):
    """Base class for every error raised by this package."""


class ZeroNumerator(GffsError, ZeroDivisionError):
    pass


class PoleEvaluation(GffsError, ZeroDivisionError):
    pass


class ImproperTransferFunction(GffsError, ValueError):
    pass


class EmptyTurbineSet(GffsError, ValueError):
    pass


class ParseError(GffsError, ValueError):
    """Malformed case text. Carries the 1-based line and column when known."""

    def __init__(self, msg, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(msg + where)


class ValidationError(GffsError, ValueError):
    pass


class InfeasibleTarget(GffsError, ValueError):
    pass


class NoInverters(GffsError, ValueError):
    pass


class CardinalityViolation(GffsError, ValueError):
    pass


class WeightError(GffsError, ValueError):
    pass


class UnsupportedOrder(GffsError, ValueError):
    pass


class DegenerateCoefficients(GffsError, ValueError):
    pass


class MatchedTuningError(GffsError, AssertionError):
    pass


class ReportError(GffsError, OSError):
    pass
