class SuperdynError(Exception):
    pass


class MatrixValueError(SuperdynError, ValueError):
    pass


class MatrixFileError(MatrixValueError):
    """MatrixFile could not be parsed; `line` and `col` locate JSON syntax errors."""

    def __init__(self, message: str, line: int = None, col: int = None):
        if line is not None:
            message = '%s (line %s, column %s)' % (message, line, col)
        super().__init__(message)
        self.line = line
        self.col = col


class ConfigError(SuperdynError, ValueError):
    pass


class NonConvergence(SuperdynError, ArithmeticError):
    pass


class NotConjugateClosed(SuperdynError, ValueError):
    pass


class ZeroPower(SuperdynError, ArithmeticError):
    pass


class ZeroVector(SuperdynError, ValueError):
    pass


class BudgetOverflow(SuperdynError, OverflowError):
    pass


class SingularP(SuperdynError, ValueError):
    pass


class UnknownLaw(SuperdynError, KeyError):
    pass


class UnknownGenerator(SuperdynError, KeyError):
    pass


class DegenerateTolerance(UserWarning):
    pass


exception_list = {
    'SuperdynError': SuperdynError,
    'MatrixValueError': MatrixValueError,
    'MatrixFileError': MatrixFileError,
    'ConfigError': ConfigError,
    'NonConvergence': NonConvergence,
    'NotConjugateClosed': NotConjugateClosed,
    'ZeroPower': ZeroPower,
    'ZeroVector': ZeroVector,
    'BudgetOverflow': BudgetOverflow,
    'SingularP': SingularP,
    'UnknownLaw': UnknownLaw,
    'UnknownGenerator': UnknownGenerator,
}

# exit-code contract of the command line: 0 success, 1 budget exhausted,
# 2 usage/parse error, 3 numerical failure
EXIT_OK = 0
EXIT_BUDGET = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

_numerical = (NonConvergence, ZeroPower, BudgetOverflow, NotConjugateClosed, SingularP)


def exit_code_for(exc: BaseException) -> int:
    """Map an exception raised by a command to its exit code."""
    if isinstance(exc, _numerical):
        return EXIT_NUMERICAL
    return EXIT_USAGE
