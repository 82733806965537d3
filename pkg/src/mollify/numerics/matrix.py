"""
This module defines the dense matrix conventions used throughout mollify.

A Matrix is a 2-D `numpy.ndarray` of float64 values stored in row-major (C) order.
The batch is always the row dimension; there are no tensors of rank higher than 2.
"""

from typing import Optional, Sequence, Union

import numpy as np

try:
    from typing import TypeAlias  # Python >= 3.10 pylint: disable=ungrouped-imports
except ImportError:
    from typing_extensions import TypeAlias  # Python < 3.10

from mollify.exceptions.base import MollifyTypeError
from mollify.exceptions.numerics import ShapeMismatchError, NonFiniteValueError

__all__ = [
    "Matrix",
    "Vector",
    "as_matrix",
    "matmul",
    "ensure_finite",
    "first_non_finite",
]

Matrix: TypeAlias = np.ndarray
Vector: TypeAlias = np.ndarray

ArrayLike: TypeAlias = Union[np.ndarray, Sequence[Sequence[float]], Sequence[float]]


def as_matrix(data: ArrayLike, name: str = "matrix") -> Matrix:
    """
    Create a 2-D float64 row-major matrix from `data`. 1-D data becomes a single row.

    Raises `MollifyTypeError` if data is not numeric or has more than 2 dimensions.

    Raises `NonFiniteValueError` if data contains NaN or infinite values.

    Examples:
        >>> as_matrix([1, 2]).shape
        (1, 2)
        >>> as_matrix([[1, 2], [3, 4]]).dtype
        dtype('float64')
    """
    try:
        array = np.array(data, dtype=np.float64, order="C")
    except (TypeError, ValueError):
        raise MollifyTypeError(
            f"cannot create {name}; data is not numeric: {data!r}. "
        ) from None
    if array.ndim == 0 or array.ndim == 1:
        array = array.reshape(1, -1)
    if array.ndim != 2:
        raise MollifyTypeError(
            f"cannot create {name}; expected at most 2 dimensions, got {array.ndim}. "
        )
    ensure_finite(array, name)
    return array


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """
    Matrix product of `a` and `b`.

    Raises `ShapeMismatchError` if the columns of `a` do not match the rows of `b`.

    Examples:
        >>> matmul(as_matrix([[1, 2], [3, 4]]), as_matrix([[0], [1]])).tolist()
        [[2.0], [4.0]]
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(
            f"cannot multiply matrices; shapes {a.shape} and {b.shape} are not "
            "aligned. ",
            tuple(a.shape),
            tuple(b.shape),
        )
    return a @ b


def first_non_finite(array: np.ndarray) -> Optional[int]:
    """
    Flat index of the first non-finite entry of `array`, None if all are finite.
    """
    mask = ~np.isfinite(array)
    if not mask.any():
        return None
    return int(np.flatnonzero(mask)[0])


def ensure_finite(array: np.ndarray, name: str = "array") -> np.ndarray:
    """
    Return `array` unchanged if all its entries are finite.

    Raises `NonFiniteValueError` naming the flat index of the first non-finite
    entry otherwise.
    """
    index = first_non_finite(array)
    if index is not None:
        raise NonFiniteValueError(
            f"{name} has a non-finite value at flat index {index}. ", name, index
        )
    return array
