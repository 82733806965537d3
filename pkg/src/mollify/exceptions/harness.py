from mollify.exceptions.base import (
    MollifyException,
    MollifyValidationError,
    MollifyValueError,
)


class ConfigError(MollifyValidationError):
    """
    A run configuration is invalid: unknown key, unparsable or out-of-range value.
    """


class OutputDirectoryError(MollifyException):
    """
    The output directory of a run cannot be created or written.
    """


class DivergenceError(MollifyException):
    """
    Training diverged, i.e. the loss became non-finite.
    """


class PlotError(MollifyValueError):
    """
    A plot cannot be produced from the given metrics file.
    """
