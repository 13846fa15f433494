"""Exception hierarchy shared by all presto modules."""


class PrestoError(Exception):
    """Base class for every error raised by presto."""


# algebra
class DivisionByZeroFunction(PrestoError, ZeroDivisionError):
    pass


class MissingParameter(PrestoError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DenominatorNearZero(PrestoError, ArithmeticError):
    pass


# parsing
class ParseError(PrestoError):
    """Raised by the text parsers; carries a 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class PrestoSyntaxError(ParseError):
    pass


class DuplicateState(ParseError):
    pass


class UnknownParameter(ParseError):
    pass


class RowIncomplete(ParseError):
    pass


class UnboundComparator(ParseError):
    pass


# model checking
class EngineError(PrestoError):
    pass


class EmptyTarget(EngineError):
    pass


class RewardDivergence(EngineError):
    pass


class UnknownRewardStructure(EngineError):
    pass


class UnsupportedProperty(EngineError):
    pass


class SingularSystem(EngineError):
    pass


class NonConvergence(EngineError):
    pass


# forecasting / prediction
class SeriesTooShort(PrestoError, ValueError):
    pass


class MissingParameterSeries(PrestoError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class ConfigError(PrestoError, ValueError):
    pass
