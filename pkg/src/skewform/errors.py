"""Exception hierarchy shared by all modules."""


class SkewformError(Exception):
    pass


# symbolic core

class ParseError(SkewformError, ValueError):
    def __init__(self, offset, expected, text=None):
        self.offset = offset
        self.expected = expected
        self.text = text
        super().__init__(f"parse error at offset {offset}: expected {expected}")


class EvaluationError(SkewformError, ArithmeticError):
    pass


class UnboundVariable(EvaluationError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound variable {name!r}")

    def __str__(self):
        return self.args[0]


class DomainError(EvaluationError):
    def __init__(self, function, value):
        self.function = function
        self.value = value
        super().__init__(f"{function} is undefined at {value!r}")


# form algebra

class FormError(SkewformError, ValueError):
    pass


class ChartMismatch(FormError):
    pass


class DegreeOverflow(FormError):
    pass


class WrongDegree(FormError):
    pass


class NoMetric(FormError):
    pass


class NotClosedError(FormError):
    pass


class QuadratureFailure(SkewformError, ArithmeticError):
    pass


# characteristics

class NewtonDivergence(SkewformError, ArithmeticError):
    def __init__(self, index, message="Newton iteration did not converge"):
        self.index = index
        super().__init__(f"{message} at strip sample {index}")


class OverdeterminedStrip(SkewformError, ValueError):
    pass


class UnderdeterminedStrip(SkewformError, ValueError):
    pass


class InsufficientTrajectories(SkewformError, ValueError):
    pass


class OutsideCoverage(SkewformError, LookupError):
    def __init__(self, point):
        self.point = tuple(point)
        super().__init__(f"point {self.point} is not covered by any trajectory patch")


# grid diagnostics

class GridError(SkewformError, ValueError):
    pass


class GridTooSmall(GridError):
    pass


class MissingPsi(GridError):
    pass


class GridFormatError(GridError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
