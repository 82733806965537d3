"""
This module defines the base non-linearities, their derivatives and their
linearizations at the origin.

The linearization of f is u(x) = f(0) + f'(0)*x. For the saturating kinds the slope at
the origin is maximal, so |f(x) - f(0)| <= |u(x) - u(0)| everywhere.
"""

from enum import Enum
from typing import Callable, Dict, Tuple

import numpy as np

__all__ = ["ActivationKind", "sigmoid", "hard_sigmoid", "hard_sigmoid_inverse"]


def sigmoid(x: np.ndarray) -> np.ndarray:
    """
    Logistic sigmoid, evaluated through tanh so large |x| never overflows.
    """
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def hard_sigmoid(x: np.ndarray) -> np.ndarray:
    """
    clamp(0.25x + 0.5, 0, 1).

    Examples:
        >>> hard_sigmoid(np.array([-4.0, 0.0, 1.0, 4.0])).tolist()
        [0.0, 0.5, 0.75, 1.0]
    """
    return np.clip(0.25 * x + 0.5, 0.0, 1.0)


def hard_sigmoid_inverse(y: np.ndarray) -> np.ndarray:
    """
    Inverse of the hard-sigmoid on its linear region: 4(y - 0.5).
    """
    return 4.0 * (np.asarray(y, dtype=np.float64) - 0.5)


def _hard_sigmoid_derivative(x: np.ndarray) -> np.ndarray:
    return np.where((x > -2.0) & (x < 2.0), 0.25, 0.0)


def _sigmoid_derivative(x: np.ndarray) -> np.ndarray:
    value = sigmoid(x)
    return value * (1.0 - value)


class ActivationKind(str, Enum):
    """
    Enumeration of element-wise activation functions.

    Examples:
        >>> ActivationKind.SIGMOID.linearize()
        (0.25, 0.5)
        >>> ActivationKind("tanh").is_saturating()
        True
    """

    SIGMOID = "sigmoid"
    TANH = "tanh"
    HARD_SIGMOID = "hard-sigmoid"
    RELU = "relu"
    LINEAR = "linear"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return _functions[self](x)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        """
        f'(x); piecewise-linear kinds take the derivative of the open piece, i.e. 0
        at the kinks of relu and hard-sigmoid.
        """
        return _derivatives[self](x)

    def linearize(self) -> Tuple[float, float]:
        """
        Return (f'(0), f(0)), the slope and offset of the linearization u.
        """
        return _linearizations[self]

    def is_saturating(self) -> bool:
        return self in (
            ActivationKind.SIGMOID,
            ActivationKind.TANH,
            ActivationKind.HARD_SIGMOID,
        )


_functions: Dict[ActivationKind, Callable[[np.ndarray], np.ndarray]] = {
    ActivationKind.SIGMOID: sigmoid,
    ActivationKind.TANH: np.tanh,
    ActivationKind.HARD_SIGMOID: hard_sigmoid,
    ActivationKind.RELU: lambda x: np.maximum(x, 0.0),
    ActivationKind.LINEAR: lambda x: np.array(x, dtype=np.float64),
}

_derivatives: Dict[ActivationKind, Callable[[np.ndarray], np.ndarray]] = {
    ActivationKind.SIGMOID: _sigmoid_derivative,
    ActivationKind.TANH: lambda x: 1.0 - np.tanh(x) ** 2,
    ActivationKind.HARD_SIGMOID: _hard_sigmoid_derivative,
    ActivationKind.RELU: lambda x: np.where(x > 0.0, 1.0, 0.0),
    ActivationKind.LINEAR: lambda x: np.ones_like(x, dtype=np.float64),
}

_linearizations: Dict[ActivationKind, Tuple[float, float]] = {
    ActivationKind.SIGMOID: (0.25, 0.5),
    ActivationKind.TANH: (1.0, 0.0),
    ActivationKind.HARD_SIGMOID: (0.25, 0.5),
    ActivationKind.RELU: (1.0, 0.0),
    ActivationKind.LINEAR: (1.0, 0.0),
}
