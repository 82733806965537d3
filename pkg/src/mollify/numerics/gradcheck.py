"""
Central finite differences, the oracle every analytic gradient is checked against.
"""

from typing import Callable

import numpy as np

from mollify.constants import FINITE_DIFF_STEP
from mollify.numerics.matrix import Matrix
from mollify.exceptions.base import MollifyValueError
from mollify.exceptions.numerics import NonFiniteValueError

__all__ = ["finite_diff_grad", "relative_error"]


def finite_diff_grad(
    loss: Callable[[Matrix], float], at: Matrix, h: float = FINITE_DIFF_STEP
) -> Matrix:
    """
    Central-difference gradient (L(x + h*e_i) - L(x - h*e_i)) / 2h of `loss` at `at`,
    one coordinate at a time. `loss` must be deterministic; stochastic losses are
    checked at a fixed noise realization.

    Raises `MollifyValueError` if `h` is not positive.

    Raises `NonFiniteValueError` naming the coordinate whose evaluation is not finite.

    Examples:
        >>> grad = finite_diff_grad(lambda x: float((x**2).sum()), np.array([1.0, 2.0]))
        >>> [round(float(g), 6) for g in grad]
        [2.0, 4.0]
    """
    if not h > 0:
        raise MollifyValueError(f"cannot take finite differences; invalid step: {h}. ")
    point = np.array(at, dtype=np.float64)
    grad = np.zeros_like(point)
    flat_point = point.reshape(-1)
    flat_grad = grad.reshape(-1)
    for index in range(flat_point.size):
        original = flat_point[index]
        flat_point[index] = original + h
        upper = loss(point)
        flat_point[index] = original - h
        lower = loss(point)
        flat_point[index] = original
        if not (np.isfinite(upper) and np.isfinite(lower)):
            raise NonFiniteValueError(
                "cannot take finite differences; loss is not finite around "
                f"coordinate {index}. ",
                "loss",
                index,
            )
        flat_grad[index] = (upper - lower) / (2 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-8):
    """
    Elementwise |a - n| / max(|a| + |n|, floor).
    """
    return np.abs(analytic - numeric) / np.maximum(
        np.abs(analytic) + np.abs(numeric), floor
    )
