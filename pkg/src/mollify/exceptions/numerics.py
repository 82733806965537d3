from typing import Optional, Tuple

from mollify.exceptions.base import MollifyValueError


class ShapeMismatchError(MollifyValueError):
    """
    Two arrays that take part in the same operation have incompatible shapes.
    """

    def __init__(
        self, message: str, left: Tuple[int, ...] = (), right: Tuple[int, ...] = ()
    ) -> None:
        super().__init__(message)
        self.left = left
        self.right = right


class NonFiniteValueError(MollifyValueError):
    """
    A NaN or infinite value was found where finite values are required.

    `name` identifies the parameter (or objective) and `index` the flat index of the
    first offending entry.
    """

    def __init__(
        self, message: str, name: Optional[str] = None, index: Optional[int] = None
    ) -> None:
        super().__init__(message)
        self.name = name
        self.index = index


class UnknownOptimizerError(MollifyValueError):
    """
    No optimizer has been registered for the requested kind.
    """
