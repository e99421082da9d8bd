"""Exception hierarchy.

Every error raised by the library derives from :class:`LiouvilleDMDError`
and falls into one of two families that the command line maps onto exit
codes: data problems (bad input, unreadable files) and numeric problems
(overflow, singular systems, divergence).
"""


class LiouvilleDMDError(Exception):
    """Base class for all library errors."""


class DataError(LiouvilleDMDError):
    """Input data or arguments are unusable."""


class InvalidInputError(DataError, ValueError):
    pass


class ParseError(DataError, ValueError):
    """Malformed trajectory file; carries the file name and line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class StaleModelError(DataError):
    """Trajectory files changed since the model was written."""


class NumericError(LiouvilleDMDError, ArithmeticError):
    """A computation left the range where its result is meaningful."""


class NumericRangeError(NumericError):
    pass


class DivergenceError(NumericError):
    def __init__(self, time, message=None):
        self.time = float(time)
        super().__init__(message or f"state became non-finite at t={self.time:.17g}")


class SingularGramError(NumericError):
    pass


class DegenerateEigenvectorError(NumericError):
    pass


class DegenerateEigenbasisError(NumericError):
    pass
