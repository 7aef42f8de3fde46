"""Exception hierarchy."""


class NehariError(Exception):
    """Base class for solver errors."""


class GridMismatch(NehariError, ValueError):
    pass


class UnsupportedDimension(NehariError, ValueError):
    pass


class ConfigError(NehariError, ValueError):
    pass


class NotInA(NehariError):
    """The direction u satisfies ||u||^2 >= int eta u^2; the fibering map has no maximum."""


class BracketOverflow(NehariError):
    """The fibering root could not be bracketed below the overflow cap."""


class ConvergenceError(NehariError):
    pass


class MaxIter(ConvergenceError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class BoundaryStall(ConvergenceError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report
