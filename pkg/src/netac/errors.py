"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class NetacError(Exception):
    exit_code = 1


class ConfigError(NetacError, ValueError):
    exit_code = 2


class ModelClassError(NetacError):
    """Raised when an oracle is asked to analyse a model it cannot represent."""

    exit_code = 3


class SizeGuardError(NetacError):
    exit_code = 4


class NumericalError(NetacError, ArithmeticError):
    exit_code = 5


class NonErgodicError(NumericalError):
    pass
