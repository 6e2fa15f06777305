"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class MatbridgeError(Exception):
    exit_code = 1


class ConfigurationError(MatbridgeError, ValueError):
    exit_code = 1


class ShapeError(MatbridgeError, ValueError):
    exit_code = 1


class ParseError(MatbridgeError, ValueError):
    exit_code = 2


class SchemaError(MatbridgeError, ValueError):
    exit_code = 3


class CompatibilityError(MatbridgeError, ValueError):
    exit_code = 3


class DomainError(MatbridgeError, ValueError):
    exit_code = 4


class NumericError(MatbridgeError, ArithmeticError):
    exit_code = 4


class UndefinedMetricError(MatbridgeError, ArithmeticError):
    exit_code = 4
