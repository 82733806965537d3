from typing import Optional

from mollify.exceptions.base import MollifyValidationError, MollifyValueError


class SmoothingSpecError(MollifyValidationError):
    """
    A smoothing specification is created with invalid values.
    """


class NonFiniteSampleError(MollifyValueError):
    """
    An objective evaluation at a Monte-Carlo sample was not finite.
    """

    def __init__(self, message: str, sample_index: Optional[int] = None) -> None:
        super().__init__(message)
        self.sample_index = sample_index


class QuadratureGridError(MollifyValueError):
    """
    A quadrature grid does not cover the kernel's effective support.
    """


class UnknownObjectiveError(MollifyValueError):
    """
    No built-in objective is registered under the requested name.
    """
