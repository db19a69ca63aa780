"""Exception hierarchy shared by the library and the command line."""


class MmcovError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MmcovError, ValueError):
    """An argument lies outside the domain of the function."""


class DivergenceError(MmcovError, ArithmeticError):
    """An integral or expectation is infinite."""


class QuadratureError(MmcovError, ArithmeticError):
    """Numerical integration did not reach the requested accuracy.

    Attributes
    ----------
    partial : float
        Best estimate available when the integrator gave up.
    abserr : float
        Error estimate attached to ``partial``.
    """

    def __init__(self, message, partial=float("nan"), abserr=float("nan")):
        super().__init__(message)
        self.partial = partial
        self.abserr = abserr


class InfiniteMeanCount(DivergenceError):
    """The mean number of LOS base stations is infinite."""


class ScenarioError(MmcovError, ValueError):
    """A scenario file failed validation.

    ``issues`` holds ``(line_number, message)`` pairs, one per violation.
    """

    def __init__(self, issues):
        self.issues = list(issues)
        lines = [f"line {ln}: {msg}" if ln else msg for ln, msg in self.issues]
        super().__init__("invalid scenario:\n  " + "\n  ".join(lines))
