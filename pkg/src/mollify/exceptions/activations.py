from mollify.exceptions.base import MollifyValueError


class ActivationKindError(MollifyValueError):
    """
    The activation kind is not valid for the requested operation.
    """


class StaleRealizationError(MollifyValueError):
    """
    A noise realization is used with inputs it was not sampled for.
    """
