from typing import Optional

from mollify.exceptions.base import (
    MollifyException,
    MollifyValidationError,
    MollifyValueError,
)


class AdapterError(MollifyValidationError):
    """
    The dimension adapter of a layer does not fit the layer's shapes.
    """


class NonFiniteLossError(MollifyValueError):
    """
    The forward pass produced a non-finite value.

    `layer_index` is the 0-based index of the first layer whose output was not
    finite; it is None when the head produced the non-finite loss.
    """

    def __init__(self, message: str, layer_index: Optional[int] = None) -> None:
        super().__init__(message)
        self.layer_index = layer_index


class WeightNoiseError(MollifyValueError):
    """
    Invalid weight-noise configuration, e.g. negative standard deviation.
    """


class CheckpointError(MollifyException):
    """
    A checkpoint cannot be written or read.
    """
