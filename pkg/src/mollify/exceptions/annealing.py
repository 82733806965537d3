from mollify.exceptions.base import MollifyValidationError, MollifyValueError


class AnnealStateError(MollifyValidationError):
    """
    An annealing state is created with invalid hyperparameters.
    """


class NonFiniteLossAverageError(MollifyValueError):
    """
    A negative or non-finite loss was fed to the loss moving average.
    """
